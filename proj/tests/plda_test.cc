#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "svkit/plda.hpp"
#include "svkit/synth.hpp"

namespace svkit::backend {
namespace {

synth::PldaData RecoveryData(std::uint64_t seed) {
  synth::PldaSynthSpec s;
  s.seed = seed;
  s.dim = 16;
  s.num_speakers = 50;
  s.utts_per_speaker = 10;
  s.speaker_rank = 2;
  s.channel_rank = 2;
  return synth::GenPldaData(s);
}

PldaConfig Ranks(int rs, int rc, int iters, std::uint64_t seed = 0) {
  PldaConfig c;
  c.speaker_rank = rs;
  c.channel_rank = rc;
  c.em_iterations = iters;
  c.seed = seed;
  return c;
}

void ExpectMonotone(const std::vector<double>& ll) {
  for (std::size_t i = 1; i < ll.size(); ++i)
    EXPECT_GE(ll[i], ll[i - 1] - 1e-8 * std::abs(ll[i - 1])) << "iteration " << i;
}

TEST(PldaEm, RecoversSpeakerSubspace) {
  const auto data = RecoveryData(11);
  const auto r = TrainPlda(data.embeddings, data.labels, Ranks(2, 2, 25));
  EXPECT_EQ(r.log_likelihood.size(), 26u);
  ExpectMonotone(r.log_likelihood);
  EXPECT_LT(oracle::MaxPrincipalAngleDeg(r.model.V, data.model.V), 10.0);
  EXPECT_TRUE((r.model.psi.array() > 0).all());
}

TEST(PldaEm, MonotoneOnFiveSeeds) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = RecoveryData(100 + seed);
    const auto r = TrainPlda(data.embeddings, data.labels, Ranks(2, 2, 25, seed));
    ExpectMonotone(r.log_likelihood);
    EXPECT_GT(r.log_likelihood.back(), r.log_likelihood.front());
  }
}

TEST(PldaEm, Deterministic) {
  const auto data = RecoveryData(2);
  const auto a = TrainPlda(data.embeddings, data.labels, Ranks(2, 2, 5, 9));
  const auto b = TrainPlda(data.embeddings, data.labels, Ranks(2, 2, 5, 9));
  EXPECT_EQ(a.model.V, b.model.V);
  EXPECT_EQ(a.model.U, b.model.U);
  EXPECT_EQ(a.model.psi, b.model.psi);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
}

TEST(PldaEm, SingleUtterancePerSpeakerTerminates) {
  synth::PldaSynthSpec s;
  s.dim = 6;
  s.num_speakers = 40;
  s.utts_per_speaker = 1;
  const auto data = synth::GenPldaData(s);
  const auto r = TrainPlda(data.embeddings, data.labels, Ranks(2, 2, 10));
  EXPECT_TRUE(r.model.V.allFinite());
  EXPECT_TRUE(r.model.U.allFinite());
  EXPECT_TRUE(r.model.psi.allFinite());
  ExpectMonotone(r.log_likelihood);
}

TEST(PldaEm, ZeroChannelRank) {
  const auto data = RecoveryData(3);
  const auto r = TrainPlda(data.embeddings, data.labels, Ranks(2, 0, 10));
  EXPECT_EQ(r.model.U.cols(), 0);
  ExpectMonotone(r.log_likelihood);
}

TEST(PldaEm, Errors) {
  const auto data = RecoveryData(4);
  EXPECT_THROW(TrainPlda(data.embeddings, data.labels, Ranks(17, 2, 5)), Error);
  EXPECT_THROW(TrainPlda(data.embeddings, data.labels, Ranks(2, 17, 5)), Error);
  EXPECT_THROW(TrainPlda(data.embeddings, data.labels, Ranks(2, 2, 0)), Error);
  EXPECT_THROW(TrainPlda(data.embeddings, std::vector<int>(data.labels.size(), 7), Ranks(2, 2, 5)), Error);
}

TEST(PldaEm, LogLikelihoodMatchesStackedDensity) {
  // Small case: evaluate each speaker's stacked vector under its full
  // block covariance.
  synth::PldaSynthSpec s;
  s.seed = 6;
  s.dim = 3;
  s.num_speakers = 4;
  s.utts_per_speaker = 3;
  s.speaker_rank = 1;
  s.channel_rank = 1;
  const auto data = synth::GenPldaData(s);
  const auto& m = data.model;
  double expect = 0;
  for (int spk = 0; spk < 4; ++spk) {
    Eigen::MatrixXd cov(9, 9);
    Eigen::VectorXd x(9);
    for (int i = 0; i < 3; ++i) {
      x.segment(3 * i, 3) = data.embeddings.row(3 * spk + i).transpose() - m.mu;
      for (int j = 0; j < 3; ++j) cov.block(3 * i, 3 * j, 3, 3) = i == j ? Matrix(m.Between() + m.Within()) : m.Between();
    }
    expect += oracle::GaussianLogDensity(x, cov);
  }
  EXPECT_NEAR(PldaLogLikelihood(m, data.embeddings, data.labels), expect, 1e-9 * std::abs(expect));
}

PldaModel RandomModel(int d, std::uint64_t seed) {
  Rng r(seed);
  PldaModel m;
  m.mu = Vector::NullaryExpr(d, [&] { return r.Normal(); });
  m.V = Matrix::NullaryExpr(d, d, [&] { return r.Normal(); });
  m.U = Matrix::NullaryExpr(d, 1, [&] { return 0.5 * r.Normal(); });
  m.psi = Vector::NullaryExpr(d, [&] { return r.Uniform(0.1, 1.0); });
  return m;
}

TEST(PldaLlr, MatchesJointDensityOracle) {
  for (int d = 1; d <= 3; ++d) {
    const auto m = RandomModel(d, 40 + d);
    const PldaScorer scorer(m);
    Rng r(d);
    for (int i = 0; i < 1000; ++i) {
      const Vector e = Vector::NullaryExpr(d, [&] { return 2 * r.Normal(); });
      const Vector t = Vector::NullaryExpr(d, [&] { return 2 * r.Normal(); });
      ASSERT_NEAR(scorer.Llr(e, t), oracle::PldaLlrDirect(m.mu, m.Between(), m.Within(), e, t), 1e-9);
    }
  }
}

TEST(PldaLlr, Symmetric) {
  const auto m = RandomModel(5, 3);
  const PldaScorer scorer(m);
  Rng r(5);
  for (int i = 0; i < 1000; ++i) {
    const Vector e = Vector::NullaryExpr(5, [&] { return r.Normal(); });
    const Vector t = Vector::NullaryExpr(5, [&] { return r.Normal(); });
    ASSERT_NEAR(scorer.Llr(e, t), scorer.Llr(t, e), 1e-10);
  }
}

TEST(PldaLlr, ZeroBetweenGivesZero) {
  auto m = RandomModel(4, 8);
  m.V.setZero();
  const PldaScorer scorer(m);
  Rng r(2);
  for (int i = 0; i < 100; ++i) {
    const Vector e = Vector::NullaryExpr(4, [&] { return r.Normal(); });
    const Vector t = Vector::NullaryExpr(4, [&] { return r.Normal(); });
    EXPECT_NEAR(scorer.Llr(e, t), 0.0, 1e-12);
  }
}

TEST(PldaLlr, NonPositiveWithinThrows) {
  auto m = RandomModel(3, 1);
  m.U.setZero();
  m.psi[1] = -0.5;
  EXPECT_THROW(PldaScorer{m}, Error);
}

}  // namespace
}  // namespace svkit::backend
