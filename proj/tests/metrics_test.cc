#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "svkit/metrics.hpp"

namespace svkit::metrics {
namespace {

void Draw(std::uint64_t seed, std::size_t nt, std::size_t nn, std::vector<double>* t, std::vector<double>* n) {
  Rng r(seed);
  t->clear();
  n->clear();
  // Quantized scores so ties between classes happen.
  for (std::size_t i = 0; i < nt; ++i) t->push_back(std::round((r.Normal() + 1.5) * 20) / 20);
  for (std::size_t i = 0; i < nn; ++i) n->push_back(std::round(r.Normal() * 20) / 20);
}

TEST(ParseTrials, KeyedAndKeyless) {
  const auto k = ParseTrials("1 a.wav b.wav\n0 a.wav c.wav\n");
  ASSERT_EQ(k.size(), 2u);
  EXPECT_TRUE(k.keyed());
  EXPECT_EQ(k.trials[0].enroll, "a.wav");
  EXPECT_EQ(k.trials[0].test, "b.wav");
  EXPECT_TRUE(*k.trials[0].target);
  EXPECT_FALSE(*k.trials[1].target);
  const auto u = ParseTrials("a.wav b.wav\n\n");
  ASSERT_EQ(u.size(), 1u);
  EXPECT_FALSE(u.keyed());
  EXPECT_EQ(ParseTrials(FormatTrials(k)).trials.size(), 2u);
}

void ExpectError(const std::string& text, const std::string& needle) {
  try {
    ParseTrials(text);
    FAIL() << text;
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(ParseTrials, Errors) {
  ExpectError("2 a b\n", "line 1");
  ExpectError("1 a b\na c\n", "line 2");
  ExpectError("1 a b\n0 a b\n", "duplicate");
  ExpectError("a\n", "line 1");
  ExpectError("1 a b c\n", "line 1");
}

TEST(Eer, Conventions) {
  EXPECT_EQ(Eer({2.0, 3.0}, {0.0, 1.0}), 0.0);
  EXPECT_EQ(Eer({1.0, 1.0}, {1.0, 1.0, 1.0}), 50.0);
  EXPECT_EQ(MinDcf({2.0, 3.0}, {0.0, 1.0}), 0.0);
  EXPECT_EQ(MinDcf({1.0, 1.0}, {1.0, 1.0, 1.0}), 1.0);
  EXPECT_EQ(MinDcf({1.0}, {1.0}, {0.01, 1, 1}), 1.0);
  EXPECT_THROW(Eer({}, {1.0}), Error);
  EXPECT_THROW(MinDcf({1.0}, {}), Error);
}

TEST(Eer, MatchesExhaustiveOracle) {
  std::vector<double> t, n;
  for (int seed = 0; seed < 50; ++seed) {
    Draw(seed, 300, 700, &t, &n);
    EXPECT_NEAR(Eer(t, n), oracle::EerOracle(t, n), 1e-12);
    for (double p : {0.01, 0.05})
      EXPECT_NEAR(MinDcf(t, n, {p, 1, 1}), oracle::MinDcfOracle(t, n, p), 1e-12);
  }
}

TEST(Eer, InvariantToIncreasingTransforms) {
  std::vector<double> t, n;
  Draw(5, 200, 200, &t, &n);
  const double eer = Eer(t, n), dcf = MinDcf(t, n);
  auto map = [](std::vector<double> v, auto f) {
    for (auto& x : v) x = f(x);
    return v;
  };
  for (auto f : {+[](double x) { return 2 * x + 1; }, +[](double x) { return std::tanh(x); }}) {
    EXPECT_NEAR(Eer(map(t, f), map(n, f)), eer, 1e-12);
    EXPECT_NEAR(MinDcf(map(t, f), map(n, f)), dcf, 1e-12);
  }
}

TEST(Eer, PermutationInvariantAndBounded) {
  std::vector<double> t, n;
  Draw(8, 100, 150, &t, &n);
  const double eer = Eer(t, n);
  std::reverse(t.begin(), t.end());
  std::rotate(n.begin(), n.begin() + 17, n.end());
  EXPECT_EQ(Eer(t, n), eer);
  EXPECT_GE(eer, 0);
  EXPECT_LE(eer, 50);
  const double dcf = MinDcf(t, n);
  EXPECT_GE(dcf, 0);
  EXPECT_LE(dcf, 1);
}

TEST(Det, HandEnumeratedCorners) {
  const auto pts = DetPoints({1.0}, {0.0});
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0].p_miss, 0);
  EXPECT_EQ(pts[0].p_fa, 1);
  EXPECT_EQ(pts[1].p_miss, 0);
  EXPECT_EQ(pts[1].p_fa, 0);
  EXPECT_EQ(pts[2].p_miss, 1);
  EXPECT_EQ(pts[2].p_fa, 0);
}

TEST(Det, StaircaseMonotone) {
  std::vector<double> t, n;
  for (int seed = 0; seed < 100; ++seed) {
    Draw(100 + seed, 50, 80, &t, &n);
    const auto pts = DetPoints(t, n);
    const auto ref = oracle::ExhaustiveSweep(t, n);
    ASSERT_EQ(pts.size(), ref.size());
    for (std::size_t k = 1; k < pts.size(); ++k) {
      ASSERT_GE(pts[k].p_miss, pts[k - 1].p_miss);
      ASSERT_LE(pts[k].p_fa, pts[k - 1].p_fa);
    }
  }
}

TEST(Metrics, ScoreSetOverloadsCheckTrials) {
  ScoreSet s{{{"a", "b", 2.0}, {"a", "c", 0.0}}};
  TrialList key{{{"a", "b", true}, {"a", "c", false}}};
  EXPECT_EQ(Eer(s, key), 0.0);
  TrialList wrong{{{"a", "b", true}, {"a", "d", false}}};
  EXPECT_THROW(Eer(s, wrong), Error);
  TrialList single{{{"a", "b", true}, {"a", "c", true}}};
  EXPECT_THROW(Eer(s, single), Error);
  EXPECT_THROW(DetPoints(s, single), Error);
}

TEST(Metrics, Format) {
  EXPECT_EQ(FormatMetrics(0, 0, 0.05), "EER=0.000%  minDCF(p=0.05)=0.0000");
  EXPECT_EQ(FormatMetrics(12.3456, 0.1666, 0.01), "EER=12.346%  minDCF(p=0.01)=0.1666");
}

}  // namespace
}  // namespace svkit::metrics
