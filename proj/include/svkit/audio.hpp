// Copyright (c) 2026 svkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SVKIT_AUDIO_HPP_
#define SVKIT_AUDIO_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "svkit/common.hpp"
#include "svkit/io.hpp"

namespace svkit {

/// Mono waveform. Samples are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;
};

inline void CheckFinite(const Waveform& wave) {
  for (double x : wave.samples)
    if (!std::isfinite(x)) Fail("invalid audio");
}

/// Parses a 16-bit PCM mono RIFF/WAVE byte buffer.
inline Waveform DecodeWav(std::string_view bytes) {
  ByteReader r(bytes, "bad wav file");
  if (r.GetBytes(4) != "RIFF") r.Bad();
  r.Get<std::uint32_t>();
  if (r.GetBytes(4) != "WAVE") r.Bad();
  bool have_fmt = false;
  Waveform wave;
  while (!r.AtEnd()) {
    const std::string_view id = r.GetBytes(4);
    const std::uint32_t size = r.Get<std::uint32_t>();
    std::string_view body = r.GetBytes(size);
    if (size % 2 == 1 && !r.AtEnd()) r.GetBytes(1);
    if (id == "fmt ") {
      ByteReader f(body, "bad wav file");
      const auto format = f.Get<std::uint16_t>();
      const auto channels = f.Get<std::uint16_t>();
      wave.sample_rate = static_cast<int>(f.Get<std::uint32_t>());
      f.Get<std::uint32_t>();
      f.Get<std::uint16_t>();
      const auto bits = f.Get<std::uint16_t>();
      if (format != 1 || channels != 1 || bits != 16)
        Fail("unsupported wav: need 16-bit PCM mono");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) r.Bad();
      ByteReader d(body, "bad wav file");
      wave.samples.resize(size / 2);
      for (auto& s : wave.samples) s = d.Get<std::int16_t>() / 32768.0;
      return wave;
    }
  }
  Fail("bad wav file: no data chunk");
}

inline std::string EncodeWav(const Waveform& wave) {
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  ByteWriter w;
  w.PutBytes("RIFF");
  w.Put<std::uint32_t>(36 + 2 * n);
  w.PutBytes("WAVEfmt ");
  w.Put<std::uint32_t>(16);
  w.Put<std::uint16_t>(1);
  w.Put<std::uint16_t>(1);
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(wave.sample_rate));
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(wave.sample_rate) * 2);
  w.Put<std::uint16_t>(2);
  w.Put<std::uint16_t>(16);
  w.PutBytes("data");
  w.Put<std::uint32_t>(2 * n);
  for (double x : wave.samples) {
    const double v = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
    w.Put<std::int16_t>(static_cast<std::int16_t>(v));
  }
  return w.bytes();
}

inline Waveform ReadWav(const std::string& path) {
  try {
    return DecodeWav(ReadFile(path));
  } catch (const Error& e) {
    Fail(path + ": " + e.what());
  }
}

inline void WriteWav(const std::string& path, const Waveform& wave) {
  WriteFile(path, EncodeWav(wave));
}

}  // namespace svkit

#endif  // SVKIT_AUDIO_HPP_
