#include <gtest/gtest.h>

#include "oracles.hpp"
#include "svkit/scorenorm.hpp"
#include "svkit/synth.hpp"

namespace svkit::scorenorm {
namespace {

std::vector<double> Draw(Rng& r, int n) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.Normal() * 2 + 0.5;
  return v;
}

TEST(AdaptSnorm, StandardizedCohortsAreIdentity) {
  const std::vector<double> c{-1.0, 1.0};  // mean 0, population sigma 1
  EXPECT_DOUBLE_EQ(AdaptSnorm(0.37, c, c, {}), 0.37);
}

TEST(AdaptSnorm, HandExample) {
  const std::vector<double> c{1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(AdaptSnorm(2.0, c, c, {2}), -1.0);
}

TEST(AdaptSnorm, TopXClampsToCohortSize) {
  Rng r(1);
  const auto e = Draw(r, 50), t = Draw(r, 50);
  EXPECT_EQ(AdaptSnorm(1.3, e, t, {300}), AdaptSnorm(1.3, e, t, {50}));
}

TEST(AdaptSnorm, MatchesOracleForEveryTopX) {
  for (int seed = 0; seed < 20; ++seed) {
    Rng r(seed);
    const auto e = Draw(r, 50), t = Draw(r, 50);
    const double raw = r.Normal() * 3;
    for (int x = 2; x <= 50; ++x)
      ASSERT_NEAR(AdaptSnorm(raw, e, t, {x}), oracle::SnormOracle(raw, e, t, x), 1e-12) << x;
  }
}

TEST(AdaptSnorm, SymmetryMonotonicityShift) {
  for (int seed = 0; seed < 100; ++seed) {
    Rng r(1000 + seed);
    auto e = Draw(r, 50), t = Draw(r, 50);
    const double raw = r.Normal();
    const SnormConfig cfg{static_cast<int>(2 + r.Below(49))};
    const double base = AdaptSnorm(raw, e, t, cfg);
    EXPECT_NEAR(AdaptSnorm(raw, t, e, cfg), base, 1e-12);
    EXPECT_GT(AdaptSnorm(raw + 1e-3, e, t, cfg), base);
    const double c = r.Normal() * 10;
    for (auto& x : e) x += c;
    for (auto& x : t) x += c;
    EXPECT_NEAR(AdaptSnorm(raw + c, e, t, cfg), base, 1e-9);
  }
}

TEST(AdaptSnorm, ConstantSelectionUsesFloor) {
  const std::vector<double> c(5, 2.0);
  EXPECT_EQ(AdaptSnorm(2.0, c, c, {}), 0.0);
  EXPECT_TRUE(std::isfinite(AdaptSnorm(3.0, c, c, {})));
}

TEST(AdaptSnorm, Errors) {
  EXPECT_THROW(AdaptSnorm(0, {1.0}, {1.0, 2.0}, {}), Error);
  EXPECT_THROW(AdaptSnorm(0, {1.0, 2.0}, {1.0, 2.0}, {1}), Error);
}

TEST(Cohort, SingleUtterance) {
  const auto b = backend::Backend::Cosine({Vector::Zero(3)});
  const Matrix x{{3.0, 0.0, 4.0}};
  const auto c = BuildCohort(x, {0}, b);
  EXPECT_LT((c.means.row(0) - Eigen::RowVectorXd{{0.6, 0.0, 0.8}}).norm(), 1e-15);
  // The raw mean is kept when the backend does not length-normalize the mean.
  EXPECT_EQ(c.size(), 1);
}

TEST(Cohort, OpposedPairIsDegenerateUnderCosine) {
  const auto b = backend::Backend::Cosine({Vector::Zero(2)});
  const Matrix x{{1.0, 2.0}, {-1.0, -2.0}};
  EXPECT_THROW(BuildCohort(x, {0, 0}, b), Error);
  EXPECT_THROW(BuildCohort(Matrix(0, 2), {}, b), Error);
}

TEST(Cohort, MatchesPerSpeakerMean) {
  synth::PldaSynthSpec s;
  s.dim = 6;
  s.num_speakers = 10;
  s.utts_per_speaker = 5;
  const auto data = synth::GenPldaData(s);
  backend::BackendConfig cfg;
  cfg.plda.speaker_rank = 2;
  cfg.plda.channel_rank = 2;
  const auto b = backend::TrainBackend(data.embeddings, data.labels, cfg).backend;
  const auto c = BuildCohort(data.embeddings, data.labels, b);
  ASSERT_EQ(c.size(), 10);
  for (int spk = 0; spk < 10; ++spk) {
    Vector m = Vector::Zero(6);
    for (int u = 0; u < 5; ++u) m += b.Preprocess(data.embeddings.row(spk * 5 + u).transpose());
    EXPECT_LT((c.means.row(spk).transpose() - m / 5.0).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Snorm, ScoreSetMatchesPerTrialFormula) {
  synth::PldaSynthSpec s;
  s.dim = 5;
  s.num_speakers = 12;
  s.utts_per_speaker = 3;
  const auto data = synth::GenPldaData(s);
  const auto b = backend::TrainBackend(data.embeddings, data.labels, {backend::Scoring::kCosine}).backend;
  const auto cohort = BuildCohort(data.embeddings, data.labels, b);
  const auto ids = synth::UtteranceIds(data.labels);
  backend::EmbeddingTable table;
  for (std::size_t i = 0; i < ids.size(); ++i) table[ids[i]] = data.embeddings.row(i).transpose();
  const auto trials = synth::GenTrials(data.labels, ids, 10, 10, 3);
  const auto raw = backend::ScoreTrials(b, table, trials);
  const SnormConfig cfg{5};
  const auto norm = Snorm(raw, b, cohort, table, cfg);
  ASSERT_EQ(norm.size(), raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto cs = [&](const std::string& id) {
      std::vector<double> v;
      for (Eigen::Index j = 0; j < cohort.size(); ++j)
        v.push_back(b.Score(b.Preprocess(table[id]), cohort.means.row(j).transpose()));
      return v;
    };
    const auto& t = raw.scores[i];
    EXPECT_EQ(norm.scores[i].enroll, t.enroll);
    EXPECT_NEAR(norm.scores[i].value, oracle::SnormOracle(t.value, cs(t.enroll), cs(t.test), 5), 1e-12);
  }
}

TEST(Cohort, TensorRoundTrip) {
  const Cohort c{Matrix{{0.5, 0.25}, {1.0, -2.0}}};
  EXPECT_EQ(CohortFromTensors(CohortToTensors(c)).means, c.means);
}

}  // namespace
}  // namespace svkit::scorenorm
