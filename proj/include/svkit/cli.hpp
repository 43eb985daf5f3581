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

#ifndef SVKIT_CLI_HPP_
#define SVKIT_CLI_HPP_

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "svkit/aam.hpp"
#include "svkit/audio.hpp"
#include "svkit/backend.hpp"
#include "svkit/calibration.hpp"
#include "svkit/config.hpp"
#include "svkit/features.hpp"
#include "svkit/metrics.hpp"
#include "svkit/nnet.hpp"
#include "svkit/scorenorm.hpp"
#include "svkit/synth.hpp"
#include "svkit/tensor.hpp"

namespace svkit::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

using Table = std::vector<std::pair<std::string, std::string>>;

/// Two-column list ("key value"). When `paths` is set, relative values are
/// taken relative to the list file's directory.
inline Table ReadTable(const std::string& path, bool paths) {
  const std::string text = ReadFile(path);
  const fs::path base = fs::path(path).parent_path();
  Table out;
  std::map<std::string, int> seen;
  std::istringstream is(text);
  std::string line;
  for (int n = 1; std::getline(is, line); ++n) {
    const auto tok = SplitWhitespace(line);
    if (tok.empty()) continue;
    const std::string where = path + " line " + std::to_string(n);
    if (tok.size() != 2) Fail(where + ": expected two columns");
    if (seen.count(tok[0])) Fail(where + ": duplicate id '" + tok[0] + "'");
    seen[tok[0]] = n;
    std::string value = tok[1];
    if (paths && fs::path(value).is_relative()) value = (base / value).string();
    out.push_back({tok[0], value});
  }
  if (out.empty()) Fail(path + ": empty list");
  return out;
}

inline void WriteTable(const std::string& path, const Table& rows) {
  std::string text;
  for (const auto& [k, v] : rows) text += k + " " + v + "\n";
  WriteFile(path, text);
}

inline backend::EmbeddingTable LoadEmbeddings(const std::string& path) {
  backend::EmbeddingTable out;
  const TensorStore store = LoadTensors(path);
  for (const auto& [name, t] : store.tensors()) {
    if (t.dims.size() != 1) Fail(path + ": embedding '" + name + "' is not a vector");
    out[name] = t.ToVector();
    if (!out[name].allFinite()) Fail(path + ": non-finite embedding '" + name + "'");
  }
  if (out.empty()) Fail(path + ": no embeddings");
  const auto d = out.begin()->second.size();
  for (const auto& [name, v] : out)
    if (v.size() != d) Fail(path + ": embedding '" + name + "' has inconsistent dimension");
  return out;
}

inline void SaveEmbeddings(const std::string& path, const backend::EmbeddingTable& table) {
  TensorStore s;
  for (const auto& [id, v] : table) s.Set(id, Tensor::FromVector(v));
  SaveTensors(path, s);
}

/// Embeddings in id order with integer speaker labels (speakers in name order).
struct LabeledSet {
  Matrix x;
  std::vector<int> labels;
  std::vector<std::string> speakers;
};

inline LabeledSet LabelEmbeddings(const backend::EmbeddingTable& table, const std::string& utt2spk_path) {
  std::map<std::string, std::string> spk_of;
  for (const auto& [u, s] : ReadTable(utt2spk_path, false)) spk_of[u] = s;
  std::map<std::string, int> index;
  for (const auto& [u, s] : spk_of) index.emplace(s, 0);
  LabeledSet out;
  for (auto& [s, i] : index) {
    i = static_cast<int>(out.speakers.size());
    out.speakers.push_back(s);
  }
  out.x.resize(static_cast<Eigen::Index>(table.size()), table.begin()->second.size());
  Eigen::Index row = 0;
  for (const auto& [id, v] : table) {
    auto it = spk_of.find(id);
    if (it == spk_of.end()) Fail(utt2spk_path + ": no speaker for utterance '" + id + "'");
    out.x.row(row++) = v.transpose();
    out.labels.push_back(index.at(it->second));
  }
  return out;
}

inline FeatureMatrix ComputeFeatures(const Waveform& wave, const PipelineConfig& cfg) {
  FeatureMatrix f = cfg.feature_kind == "plp" ? Plp(wave, cfg.features) : Fbank(wave, cfg.features);
  return cfg.stmn ? Stmn(f, cfg.features.stmn_window_s) : f;
}

inline std::string MaskString(const VadMask& m) {
  std::string s;
  for (bool b : m) s += b ? '1' : '0';
  return s;
}

/// Runs fn over every row in parallel; output order follows the input.
template <typename Fn>
void ForEachRow(const Table& rows, Fn fn) {
  ParallelFor(rows.size(), [&](std::size_t i) {
    try {
      fn(i);
    } catch (const Error& e) {
      Fail(rows[i].first + ": " + e.what());
    }
  });
}

inline void MakeDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) Fail("cannot create directory " + dir + ": " + ec.message());
}

// ---------------------------------------------------------------- commands

struct Context {
  PipelineConfig cfg;
  std::ostream& out;
  std::ostream& err;
};

inline void WriteTrials(const std::string& path, const TrialList& t) { WriteFile(path, metrics::FormatTrials(t)); }

inline TrialList SynthTrials(const std::vector<int>& labels, const std::vector<std::string>& ids,
                             const PipelineConfig& c) {
  std::uint64_t same = 0, total = ids.size() * (ids.size() - 1) / 2;
  std::map<int, std::uint64_t> count;
  for (int l : labels) ++count[l];
  for (const auto& [l, n] : count) same += n * (n - 1) / 2;
  const auto nt = c.synth_targets < 0 ? same : static_cast<std::uint64_t>(c.synth_targets);
  const auto nn = c.synth_nontargets < 0 ? total - same : static_cast<std::uint64_t>(c.synth_nontargets);
  return synth::GenTrials(labels, ids, nt, nn, c.seed);
}

inline int CmdSynth(Context& ctx, const std::string& kind, const std::string& dir) {
  const auto& c = ctx.cfg;
  MakeDir(dir);
  if (kind == "corpus") {
    synth::ToyCorpusSpec s;
    s.seed = c.seed;
    s.num_speakers = c.synth_speakers;
    s.utts_per_speaker = c.synth_utts;
    s.duration_s = c.synth_duration_s;
    const auto corpus = synth::GenToyCorpus(s);
    MakeDir(dir + "/wav");
    Table scp, utt2spk;
    std::vector<int> labels;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto& u = corpus[i];
      WriteWav(dir + "/wav/" + u.id + ".wav", u.wave);
      scp.push_back({u.id, "wav/" + u.id + ".wav"});
      utt2spk.push_back({u.id, u.speaker});
      labels.push_back(static_cast<int>(i) / c.synth_utts);
      ids.push_back(u.id);
    }
    WriteTable(dir + "/wav.scp", scp);
    WriteTable(dir + "/utt2spk", utt2spk);
    WriteTrials(dir + "/trials", SynthTrials(labels, ids, c));
  } else if (kind == "plda") {
    synth::PldaSynthSpec s;
    s.seed = c.seed;
    s.dim = c.synth_dim;
    s.num_speakers = c.synth_speakers;
    s.utts_per_speaker = c.synth_utts;
    s.speaker_rank = c.synth_speaker_rank;
    s.channel_rank = c.synth_channel_rank;
    const auto data = synth::GenPldaData(s);
    const auto ids = synth::UtteranceIds(data.labels);
    backend::EmbeddingTable table;
    Table utt2spk;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      table[ids[i]] = data.embeddings.row(static_cast<Eigen::Index>(i)).transpose();
      utt2spk.push_back({ids[i], ids[i].substr(0, ids[i].find('-'))});
    }
    SaveEmbeddings(dir + "/embeddings.svw", table);
    WriteTable(dir + "/utt2spk", utt2spk);
    WriteTrials(dir + "/trials", SynthTrials(data.labels, ids, c));
    TensorStore truth;
    truth.Set("plda.mu", Tensor::FromVector(data.model.mu));
    truth.Set("plda.V", Tensor::FromMatrix(data.model.V));
    truth.Set("plda.U", Tensor::FromMatrix(data.model.U));
    truth.Set("plda.psi", Tensor::FromVector(data.model.psi));
    SaveTensors(dir + "/true_model.svw", truth);
  } else {
    Fail("unknown synth kind '" + kind + "' (expected corpus or plda)");
  }
  return kExitOk;
}

inline int CmdFeats(Context& ctx, const std::string& wav_scp, const std::string& dir) {
  const auto rows = ReadTable(wav_scp, true);
  MakeDir(dir);
  Table out(rows.size());
  ForEachRow(rows, [&](std::size_t i) {
    const auto f = ComputeFeatures(ReadWav(rows[i].second), ctx.cfg);
    WriteFeatures(dir + "/" + rows[i].first + ".svf", f);
    out[i] = {rows[i].first, rows[i].first + ".svf"};
  });
  WriteTable(dir + "/feats.scp", out);
  return kExitOk;
}

inline int CmdVad(Context& ctx, const std::string& wav_scp, const std::string& feats_scp, const std::string& dir) {
  const auto waves = ReadTable(wav_scp, true);
  const auto feats = ReadTable(feats_scp, true);
  std::map<std::string, std::string> wav_of(waves.begin(), waves.end());
  MakeDir(dir);
  Table out(feats.size()), masks(feats.size());
  ForEachRow(feats, [&](std::size_t i) {
    const auto& id = feats[i].first;
    auto it = wav_of.find(id);
    if (it == wav_of.end()) Fail("no waveform for utterance");
    const auto mask = EnergyVad(ReadWav(it->second), ctx.cfg.features);
    const auto voiced = ApplyVad(ReadFeatures(feats[i].second), mask);
    WriteFeatures(dir + "/" + id + ".svf", voiced);
    out[i] = {id, id + ".svf"};
    masks[i] = {id, MaskString(mask)};
  });
  WriteTable(dir + "/feats.scp", out);
  WriteTable(dir + "/vad.txt", masks);
  return kExitOk;
}

inline int CmdEmbed(Context& ctx, const std::string& feats_scp, const std::string& out_path,
                    const std::string& weights_path, const std::string& save_weights, const std::string& arch_flag) {
  const auto& c = ctx.cfg;
  const auto rows = ReadTable(feats_scp, true);
  std::vector<FeatureMatrix> feats(rows.size());
  ForEachRow(rows, [&](std::size_t i) { feats[i] = ReadFeatures(rows[i].second); });
  const int input_dim = static_cast<int>(feats[0].values.cols());
  for (std::size_t i = 1; i < feats.size(); ++i)
    if (feats[i].values.cols() != input_dim) Fail(rows[i].first + ": feature dimension differs from " + rows[0].first);
  const auto arch = nnet::ParseArch(arch_flag.empty() ? c.arch : arch_flag);
  const auto spec = nnet::MakeSpec(arch, input_dim, c.num_classes, c.embedding_dim);
  const nnet::Weights w = weights_path.empty() ? nnet::InitWeights(spec, c.seed) : nnet::LoadWeights(weights_path);
  nnet::CheckWeights(spec, w);
  if (!save_weights.empty()) nnet::SaveWeights(save_weights, w);
  std::vector<Vector> emb(rows.size());
  ForEachRow(rows, [&](std::size_t i) { emb[i] = nnet::Forward(feats[i], spec, w).values; });
  backend::EmbeddingTable table;
  for (std::size_t i = 0; i < rows.size(); ++i) table[rows[i].first] = emb[i];
  SaveEmbeddings(out_path, table);
  return kExitOk;
}

inline int CmdTrainBackend(Context& ctx, const std::string& emb_path, const std::string& utt2spk,
                           const std::string& out_path) {
  const auto set = LabelEmbeddings(LoadEmbeddings(emb_path), utt2spk);
  const auto r = backend::TrainBackend(set.x, set.labels, ctx.cfg.backend);
  for (std::size_t i = 0; i < r.log_likelihood.size(); ++i)
    ctx.out << "iteration " << i << " log-likelihood " << FormatScore(r.log_likelihood[i]) << "\n";
  TensorStore store = r.backend.ToTensors();
  const auto cohort = scorenorm::BuildCohort(set.x, set.labels, r.backend);
  store.Set("cohort.means", Tensor::FromMatrix(cohort.means));
  SaveTensors(out_path, store);
  return kExitOk;
}

inline int CmdScore(Context&, const std::string& model, const std::string& emb_path, const std::string& trials,
                    const std::string& out_path) {
  const auto b = backend::Backend::FromTensors(LoadTensors(model));
  const auto table = LoadEmbeddings(emb_path);
  if (table.begin()->second.size() != b.dim()) Fail("embedding dimension does not match the backend");
  WriteScoreSet(out_path, backend::ScoreTrials(b, table, metrics::ReadTrials(trials)));
  return kExitOk;
}

inline int CmdSnorm(Context& ctx, const std::string& model, const std::string& emb_path, const std::string& scores,
                    const std::string& out_path, const std::string& cache_path) {
  const auto store = LoadTensors(model);
  const auto b = backend::Backend::FromTensors(store);
  const auto cohort = scorenorm::CohortFromTensors(store);
  const auto table = LoadEmbeddings(emb_path);
  const auto raw = ReadScoreSet(scores);
  const auto ids = scorenorm::TrialUtterances(raw);
  const Matrix cs = scorenorm::CohortScores(b, cohort, table, ids);
  if (!cache_path.empty()) {
    WriteFeatures(cache_path, {cs, 0.0, 0.0});
    WriteTable(cache_path + ".ids", [&] {
      Table t;
      for (std::size_t i = 0; i < ids.size(); ++i) t.push_back({ids[i], std::to_string(i)});
      return t;
    }());
  }
  WriteScoreSet(out_path, scorenorm::SnormScoreSet(raw, ids, cs, ctx.cfg.snorm));
  return kExitOk;
}

inline std::vector<ScoreSet> ReadScoreSets(const std::vector<std::string>& paths) {
  std::vector<ScoreSet> sets;
  for (const auto& p : paths) sets.push_back(ReadScoreSet(p));
  return sets;
}

inline int CmdCalibrate(Context& ctx, const std::vector<std::string>& scores, const std::string& key,
                        const std::string& out_path, const std::string& model_out) {
  const auto r = calibration::CalibratePipeline(ReadScoreSets(scores), metrics::ReadTrials(key), ctx.cfg.logreg);
  WriteScoreSet(out_path, r.scores);
  if (!model_out.empty()) WriteFile(model_out, calibration::FormatModel(r.composite));
  return kExitOk;
}

inline int CmdFuse(Context& ctx, const std::vector<std::string>& scores, const std::string& weights,
                   const std::string& model, const std::string& out_path) {
  const auto sets = ReadScoreSets(scores);
  if (!model.empty()) {
    if (!weights.empty()) Fail("--weights and --model are mutually exclusive");
    WriteScoreSet(out_path, calibration::ApplyFusion(sets, calibration::ParseModel(ReadFile(model), model)));
    return kExitOk;
  }
  const auto w = weights.empty() ? ctx.cfg.fusion_weights : internal::ParseList(weights, "--weights");
  WriteScoreSet(out_path, calibration::FuseWeighted(sets, w));
  return kExitOk;
}

inline int CmdEval(Context& ctx, const std::string& scores, const std::string& key, const std::string& det_out,
                   const std::string& metrics_out) {
  const auto s = ReadScoreSet(scores);
  const auto k = metrics::ReadTrials(key);
  const double eer = metrics::Eer(s, k);
  const double dcf = metrics::MinDcf(s, k, ctx.cfg.dcf);
  const std::string line = metrics::FormatMetrics(eer, dcf, ctx.cfg.dcf.p_target);
  ctx.out << line << "\n";
  if (!metrics_out.empty()) WriteFile(metrics_out, line + "\n");
  if (!det_out.empty()) {
    std::string text;
    for (const auto& p : metrics::DetPoints(s, k)) text += FormatScore(p.p_miss) + " " + FormatScore(p.p_fa) + "\n";
    WriteFile(det_out, text);
  }
  return kExitOk;
}

inline int CmdFinetuneAam(Context& ctx, const std::string& emb_path, const std::string& utt2spk,
                          const std::string& out_path) {
  const auto& c = ctx.cfg;
  const auto set = LabelEmbeddings(LoadEmbeddings(emb_path), utt2spk);
  const auto r = aam::FinetuneHead(set.x, set.labels, c.aam, c.aam_epochs, c.aam_learning_rate, c.seed);
  int correct = 0;
  for (Eigen::Index i = 0; i < set.x.rows(); ++i)
    correct += aam::Predict(r.head, set.x.row(i).transpose()) == set.labels[i];
  for (std::size_t e = 0; e < r.loss_trace.size(); ++e)
    ctx.out << "epoch " << e << " loss " << FormatScore(r.loss_trace[e]) << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "train accuracy %.2f%%", 100.0 * correct / static_cast<double>(set.x.rows()));
  ctx.out << buf << "\n";
  SaveTensors(out_path, aam::HeadToTensors(r.head));
  return kExitOk;
}

// ---------------------------------------------------------------- entry point

/// Parses argv and runs one subcommand. Returns 0 on success, 1 on usage
/// errors, 2 on data errors.
inline int Run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"svkit: speaker verification toolkit"};
  app.name("svkit");
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path, backend_flag;
  std::optional<std::uint64_t> seed;
  std::optional<int> snorm_x;
  std::optional<double> ptarget;
  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "seed for every random draw");
  app.add_option("--backend", backend_flag, "plda or cosine")->check(CLI::IsMember({"plda", "cosine"}));
  app.add_option("--snorm-x", snorm_x, "S-norm top-X cohort size");
  app.add_option("--dcf-ptarget", ptarget, "minDCF target prior");

  std::string dir, kind = "corpus", wav_scp, feats_scp, out_path, weights, save_weights, arch, emb, utt2spk,
              model, trials, scores_in, cache, key, model_out, det_out, metrics_out;
  std::vector<std::string> scores;

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus or PLDA embeddings");
  synth->add_option("--kind", kind, "corpus or plda")->check(CLI::IsMember({"corpus", "plda"}));
  synth->add_option("--out", dir, "output directory")->required();

  auto* feats = app.add_subcommand("feats", "extract FBank/PLP features with short-time mean normalization");
  feats->add_option("--wav-scp", wav_scp, "utterance-to-wav list")->required()->check(CLI::ExistingFile);
  feats->add_option("--out", dir, "output directory")->required();

  auto* vad = app.add_subcommand("vad", "drop non-speech frames with the energy VAD");
  vad->add_option("--wav-scp", wav_scp, "utterance-to-wav list")->required()->check(CLI::ExistingFile);
  vad->add_option("--feats-scp", feats_scp, "utterance-to-features list")->required()->check(CLI::ExistingFile);
  vad->add_option("--out", dir, "output directory")->required();

  auto* embed = app.add_subcommand("embed", "extract embeddings");
  embed->add_option("--feats-scp", feats_scp, "utterance-to-features list")->required()->check(CLI::ExistingFile);
  embed->add_option("--out", out_path, "embedding archive")->required();
  embed->add_option("--weights", weights, "network weights (random init from --seed when absent)")
      ->check(CLI::ExistingFile);
  embed->add_option("--save-weights", save_weights, "write the weights used");
  embed->add_option("--arch", arch, "tdnn-standard, tdnn-big, tdnn-big-residual or resnet34");

  auto* train = app.add_subcommand("train-plda", "train the scoring backend and its S-norm cohort");
  train->add_option("--embeddings", emb, "embedding archive")->required()->check(CLI::ExistingFile);
  train->add_option("--utt2spk", utt2spk, "utterance-to-speaker list")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out_path, "backend model")->required();

  auto* score = app.add_subcommand("score", "score a trial list");
  score->add_option("--model", model, "backend model")->required()->check(CLI::ExistingFile);
  score->add_option("--embeddings", emb, "embedding archive")->required()->check(CLI::ExistingFile);
  score->add_option("--trials", trials, "trial list")->required()->check(CLI::ExistingFile);
  score->add_option("--out", out_path, "score file")->required();

  auto* snorm = app.add_subcommand("snorm", "adaptive S-norm");
  snorm->add_option("--model", model, "backend model with cohort")->required()->check(CLI::ExistingFile);
  snorm->add_option("--embeddings", emb, "embedding archive")->required()->check(CLI::ExistingFile);
  snorm->add_option("--scores", scores_in, "raw score file")->required()->check(CLI::ExistingFile);
  snorm->add_option("--out", out_path, "normalized score file")->required();
  snorm->add_option("--cohort-scores", cache, "also write the cohort score matrix");

  auto* calibrate = app.add_subcommand("calibrate", "calibrate and fuse score files with logistic regression");
  calibrate->add_option("--scores", scores, "score files, one per system")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--key", key, "keyed trial list")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--out", out_path, "calibrated score file")->required();
  calibrate->add_option("--model-out", model_out, "write the affine model");

  auto* fuse = app.add_subcommand("fuse", "weighted-average or model fusion");
  fuse->add_option("--scores", scores, "score files, one per system")->required()->check(CLI::ExistingFile);
  fuse->add_option("--weights", weights, "comma-separated weights (default: fusion.weights)");
  fuse->add_option("--model", model, "apply a trained model instead")->check(CLI::ExistingFile);
  fuse->add_option("--out", out_path, "fused score file")->required();

  auto* eval = app.add_subcommand("eval", "EER and minDCF");
  eval->add_option("--scores", scores_in, "score file")->required()->check(CLI::ExistingFile);
  eval->add_option("--key", key, "keyed trial list")->required()->check(CLI::ExistingFile);
  eval->add_option("--det-out", det_out, "write DET points");
  eval->add_option("--metrics-out", metrics_out, "also write the metrics line to a file");

  auto* finetune = app.add_subcommand("finetune-aam", "train an AAM-softmax head on frozen embeddings");
  finetune->add_option("--embeddings", emb, "embedding archive")->required()->check(CLI::ExistingFile);
  finetune->add_option("--utt2spk", utt2spk, "utterance-to-speaker list")->required()->check(CLI::ExistingFile);
  finetune->add_option("--out", out_path, "head weights")->required();

  if (argc <= 1) {
    err << app.help();
    return kExitUsage;
  }
  if (argc == 2) {
    for (auto* sub : app.get_subcommands({})) {
      if (sub->get_name() == argv[1]) {
        err << sub->help();
        return kExitUsage;
      }
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    Context ctx{config_path.empty() ? PipelineConfig{} : LoadConfig(config_path), out, err};
    auto& c = ctx.cfg;
    if (seed) c.seed = *seed;
    if (!backend_flag.empty()) c.backend.scoring = backend::ParseScoring(backend_flag);
    if (snorm_x) c.snorm.top_x = *snorm_x;
    if (ptarget) c.dcf.p_target = *ptarget;
    c.backend.plda.seed = c.seed;
    ValidatePipelineConfig(c);

    if (name == "synth") return CmdSynth(ctx, kind, dir);
    if (name == "feats") return CmdFeats(ctx, wav_scp, dir);
    if (name == "vad") return CmdVad(ctx, wav_scp, feats_scp, dir);
    if (name == "embed") return CmdEmbed(ctx, feats_scp, out_path, weights, save_weights, arch);
    if (name == "train-plda") return CmdTrainBackend(ctx, emb, utt2spk, out_path);
    if (name == "score") return CmdScore(ctx, model, emb, trials, out_path);
    if (name == "snorm") return CmdSnorm(ctx, model, emb, scores_in, out_path, cache);
    if (name == "calibrate") return CmdCalibrate(ctx, scores, key, out_path, model_out);
    if (name == "fuse") return CmdFuse(ctx, scores, weights, model, out_path);
    if (name == "eval") return CmdEval(ctx, scores_in, key, det_out, metrics_out);
    if (name == "finetune-aam") return CmdFinetuneAam(ctx, emb, utt2spk, out_path);
    err << "svkit: unhandled subcommand " << name << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "svkit " << name << ": error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace svkit::cli

#endif  // SVKIT_CLI_HPP_
