#include <gtest/gtest.h>

#include "svkit/backend.hpp"
#include "svkit/features.hpp"
#include "svkit/metrics.hpp"
#include "svkit/synth.hpp"

namespace svkit::synth {
namespace {

TEST(GenPlda, Deterministic) {
  PldaSynthSpec s;
  s.seed = 17;
  const auto a = GenPldaData(s), b = GenPldaData(s);
  EXPECT_EQ(a.embeddings, b.embeddings);
  EXPECT_EQ(a.labels, b.labels);
  s.seed = 18;
  EXPECT_NE(GenPldaData(s).embeddings, a.embeddings);
}

TEST(GenPlda, AddingUtterancesKeepsExistingOnes) {
  PldaSynthSpec s;
  s.utts_per_speaker = 3;
  const auto a = GenPldaData(s);
  s.utts_per_speaker = 5;
  const auto b = GenPldaData(s);
  for (int spk = 0; spk < s.num_speakers; ++spk)
    for (int u = 0; u < 3; ++u) EXPECT_EQ(a.embeddings.row(spk * 3 + u), b.embeddings.row(spk * 5 + u));
}

double OracleEer(const PldaData& d, std::uint64_t seed) {
  const auto ids = UtteranceIds(d.labels);
  const auto trials = GenTrials(d.labels, ids, 400, 400, seed);
  std::map<std::string, Eigen::Index> row;
  for (std::size_t i = 0; i < ids.size(); ++i) row[ids[i]] = static_cast<Eigen::Index>(i);
  const backend::PldaScorer scorer(d.model);
  ScoreSet s;
  for (const auto& t : trials.trials)
    s.scores.push_back({t.enroll, t.test,
                        scorer.Llr(d.embeddings.row(row[t.enroll]).transpose(),
                                   d.embeddings.row(row[t.test]).transpose())});
  return metrics::Eer(s, trials);
}

TEST(GenPlda, NoSpeakerStructureGivesChanceEer) {
  PldaSynthSpec s;
  s.dim = 4;
  s.num_speakers = 60;
  s.utts_per_speaker = 8;
  auto m = DrawPldaModel(s);
  m.V *= 1e-6;  // scorer needs B well defined; effectively zero
  s.model = m;
  EXPECT_NEAR(OracleEer(GenPldaData(s), 1), 50.0, 6.0);
}

TEST(GenPlda, NoiselessGivesZeroEer) {
  PldaSynthSpec s;
  s.dim = 4;
  s.num_speakers = 40;
  s.utts_per_speaker = 6;
  auto m = DrawPldaModel(s);
  m.U.setZero();
  m.psi.setConstant(1e-12);
  s.model = m;
  EXPECT_EQ(OracleEer(GenPldaData(s), 2), 0.0);
}

TEST(GenTrials, CountsAndDeterminism) {
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) labels.push_back(i / 6);
  const auto ids = UtteranceIds(labels);
  const auto a = GenTrials(labels, ids, 100, 300, 5);
  std::size_t nt = 0;
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& t : a.trials) {
    nt += *t.target;
    pairs.insert({t.enroll, t.test});
    const int le = std::stoi(t.enroll.substr(3, 3)), lt = std::stoi(t.test.substr(3, 3));
    EXPECT_EQ(le == lt, *t.target);
  }
  EXPECT_EQ(nt, 100u);
  EXPECT_EQ(a.size(), 400u);
  EXPECT_EQ(pairs.size(), 400u);
  const auto b = GenTrials(labels, ids, 100, 300, 5);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.trials[i].enroll + a.trials[i].test, b.trials[i].enroll + b.trials[i].test);
}

TEST(GenTrials, ZeroTargetsAndExhaustion) {
  std::vector<int> labels{0, 0, 1, 1};
  const auto ids = UtteranceIds(labels);
  const auto a = GenTrials(labels, ids, 0, 4, 1);
  EXPECT_EQ(a.size(), 4u);
  for (const auto& t : a.trials) EXPECT_FALSE(*t.target);
  EXPECT_EQ(GenTrials(labels, ids, 2, 0, 1).size(), 2u);
  EXPECT_THROW(GenTrials(labels, ids, 3, 0, 1), Error);
  EXPECT_THROW(GenTrials(labels, ids, 0, 5, 1), Error);
}

TEST(ToyCorpus, DurationAndDeterminism) {
  ToyCorpusSpec s;
  s.num_speakers = 2;
  s.utts_per_speaker = 2;
  s.duration_s = 1.0;
  const auto a = GenToyCorpus(s), b = GenToyCorpus(s);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].wave.samples.size(), 16000u);
    EXPECT_EQ(a[i].wave.samples, b[i].wave.samples);
    EXPECT_EQ(EncodeWav(a[i].wave), EncodeWav(b[i].wave));
  }
  EXPECT_EQ(a[2].speaker, "spk001");
  EXPECT_EQ(a[3].id, "spk001-utt001");
}

TEST(ToyCorpus, ResonanceSetsFbankPeak) {
  ToyCorpusSpec s;
  s.num_speakers = 2;
  s.utts_per_speaker = 1;
  s.resonance_hz = {500, 2000};
  const auto corpus = GenToyCorpus(s);
  const FeatureConfig cfg;
  const auto centers = MelCenterFrequencies(cfg);
  int peaks[2];
  for (int k = 0; k < 2; ++k) {
    const auto f = Fbank(corpus[k].wave, cfg);
    Eigen::Index arg;
    f.values.colwise().mean().maxCoeff(&arg);
    peaks[k] = static_cast<int>(arg);
    // Nearest mel center to the resonance.
    std::size_t expect = 0;
    for (std::size_t j = 0; j < centers.size(); ++j)
      if (std::abs(centers[j] - s.resonance_hz[k]) < std::abs(centers[expect] - s.resonance_hz[k])) expect = j;
    EXPECT_LE(std::abs(static_cast<long>(arg) - static_cast<long>(expect)), 1);
  }
  EXPECT_NE(peaks[0], peaks[1]);
}

}  // namespace
}  // namespace svkit::synth
