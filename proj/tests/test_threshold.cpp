#include <gtest/gtest.h>

#include <fstream>
#include <vector>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "varbg/threshold.hpp"

using namespace varbg;

namespace {

Histogram histogram_of(std::initializer_list<std::pair<int, std::int64_t>> bins) {
  Histogram h = Histogram::Zero();
  for (auto [b, c] : bins) h(b) = c;
  return h;
}

ResidualMap busy_to_sixty() {
  ResidualMap r = ResidualMap::Zero(64, 64);
  for (int y = 1; y < 64; y += 4)
    for (int x = 1; x < 64; x += 4) r(y, x) = 60;
  return r;
}

void expect_histograms_equal(const Histogram& got, const std::array<std::int64_t, 256>& want) {
  for (int t = 0; t < 256; ++t) ASSERT_EQ(got(t), want[static_cast<std::size_t>(t)]) << "bin " << t;
}

}  // namespace

TEST(VoteRange, CentreOverZeros) {
  const std::vector<int> n(8, 0);
  EXPECT_EQ(vote_range(10, n), (ThresholdRange{1, 10}));
}

TEST(VoteRange, CentreIsPatchMaximum) {
  // r1 = 50 (centre), r2 = 40, r3 = 30 (second-largest neighbour).
  const std::vector<int> n{40, 30, 5, 0, 12, 3, 7, 1};
  EXPECT_EQ(vote_range(50, n), (ThresholdRange{31, 50}));
}

TEST(VoteRange, FlatPatchIsEmpty) {
  const std::vector<int> n(8, 17);
  EXPECT_FALSE(vote_range(17, n).has_value());
}

TEST(VoteRange, TwoLargerNeighboursIsEmpty) {
  const std::vector<int> n{7, 6, 0, 0, 0, 0, 0, 0};
  EXPECT_FALSE(vote_range(5, n).has_value());
}

TEST(VoteRange, FewNeighboursStartAtZero) {
  const std::vector<int> one{200};
  EXPECT_EQ(vote_range(9, one), (ThresholdRange{0, 9}));
  EXPECT_EQ(vote_range(0, std::span<const int>{}), (ThresholdRange{0, 0}));
}

TEST(HistogramOfThresholds, AllZeroMapIsEmpty) {
  EXPECT_EQ(histogram_of_thresholds(ResidualMap::Zero(7, 9)).sum(), 0);
}

TEST(HistogramOfThresholds, CentreSpikeInThreeByThree) {
  ResidualMap r = ResidualMap::Zero(3, 3);
  r(1, 1) = 10;
  const Histogram h = histogram_of_thresholds(r);
  expect_histograms_equal(h, oracle::threshold_histogram(r));
  for (int t = 1; t <= 10; ++t) EXPECT_EQ(h(t), 1);
  EXPECT_EQ(h(0), 0);
  EXPECT_EQ(h.segment(11, 245).sum(), 0);
}

TEST(HistogramOfThresholds, MatchesBruteForceOnRandomMaps) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int h = 5 + static_cast<int>(seed % 7), w = 4 + static_cast<int>(seed % 5);
    const ResidualMap r = fixture::random_residuals(h, w, seed, seed % 2 ? 255 : 6);
    expect_histograms_equal(histogram_of_thresholds(r), oracle::threshold_histogram(r));
  }
}

TEST(HistogramOfThresholds, DegenerateShapes) {
  for (auto [h, w] : {std::pair{1, 1}, {1, 6}, {6, 1}, {2, 2}}) {
    const ResidualMap r = fixture::random_residuals(h, w, static_cast<std::uint64_t>(h * 10 + w));
    expect_histograms_equal(histogram_of_thresholds(r), oracle::threshold_histogram(r));
  }
}

TEST(ResidualHistogram, CountsValues) {
  ResidualMap r(1, 4);
  r << 0, 0, 0, 10;
  const Histogram h = residual_histogram(r);
  EXPECT_EQ(h(0), 3);
  EXPECT_EQ(h(10), 1);
  EXPECT_EQ(h.sum(), 4);
}

TEST(ValueAtRisk, PointMass) {
  const Histogram h = histogram_of({{7, 12}});
  for (double a : {0.01, 0.5, 0.99, 1.0}) {
    EXPECT_EQ(value_at_risk(h, a), 7);
    EXPECT_NEAR(conditional_value_at_risk(h, a), 7.0, 1e-12);
  }
}

TEST(ValueAtRisk, UniformOverFourValues) {
  const Histogram h = histogram_of({{0, 1}, {1, 1}, {2, 1}, {3, 1}});
  EXPECT_EQ(value_at_risk(h, 0.5), 1);
  EXPECT_NEAR(conditional_value_at_risk(h, 0.5), 2.0, 1e-12);
  EXPECT_EQ(value_at_risk(h, 1.0), 3);
  EXPECT_EQ(value_at_risk(h, 0.25), 0);
  EXPECT_EQ(value_at_risk(h, 0.2500001), 1);
}

TEST(ValueAtRisk, MonotoneAndCvarDominates) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> count(0, 9);
  for (int trial = 0; trial < 50; ++trial) {
    Histogram h;
    for (int b = 0; b < 256; ++b) h(b) = count(rng) < 7 ? 0 : count(rng);
    h(static_cast<int>(rng() % 256)) += 1;
    int prev_var = -1;
    double prev_cvar = -1;
    for (int i = 1; i <= 100; ++i) {
      const double a = i / 100.0;
      const int v = value_at_risk(h, a);
      const double cv = conditional_value_at_risk(h, a);
      EXPECT_GE(v, prev_var);
      EXPECT_GE(cv, prev_cvar - 1e-12);
      EXPECT_GE(cv, v - 1e-12);
      prev_var = v;
      prev_cvar = cv;
    }
  }
}

TEST(ValueAtRisk, RejectsBadInput) {
  const Histogram h = histogram_of({{3, 1}});
  EXPECT_THROW(value_at_risk(h, 0.0), std::invalid_argument);
  EXPECT_THROW(value_at_risk(h, 1.5), std::invalid_argument);
  EXPECT_THROW(value_at_risk(Histogram::Zero(), 0.5), std::invalid_argument);
}

TEST(AlphaOfThreshold, FractionBelow) {
  const Histogram h = histogram_of({{0, 3}, {10, 1}});
  EXPECT_DOUBLE_EQ(alpha_of_threshold(h, 5), 0.75);
  EXPECT_DOUBLE_EQ(alpha_of_threshold(h, 0), 0.0);
  EXPECT_DOUBLE_EQ(alpha_of_threshold(h, 256), 1.0);
  EXPECT_DOUBLE_EQ(alpha_of_threshold(h, 11), 1.0);
}

TEST(SmallestHalfInterval, Examples) {
  EXPECT_EQ(smallest_half_interval(histogram_of({{7, 4}})), (std::pair{7, 7}));
  EXPECT_EQ(smallest_half_interval(Histogram::Ones()), (std::pair{0, 127}));
  EXPECT_EQ(smallest_half_interval(Histogram::Zero()), (std::pair{0, 0}));
}

TEST(SmallestHalfInterval, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    Histogram h;
    for (int b = 0; b < 256; ++b) h(b) = static_cast<std::int64_t>(rng() % 4 == 0 ? rng() % 20 : 0);
    const std::int64_t total = h.sum();
    if (total == 0) continue;
    int best_l = 0, best_r = 255;
    for (int l = 0; l < 256; ++l) {
      std::int64_t s = 0;
      for (int r = l; r < 256; ++r) {
        s += h(r);
        if (2 * s >= total) {
          if (r - l < best_r - best_l) {
            best_l = l;
            best_r = r;
          }
          break;
        }
      }
    }
    EXPECT_EQ(smallest_half_interval(h), (std::pair{best_l, best_r})) << "trial " << trial;
  }
}

TEST(TwoThirdsFloor, Examples) {
  EXPECT_EQ(two_thirds_floor(ResidualMap::Zero(4, 4)), 1);
  ResidualMap r(1, 3);
  r << 20, 0, 10;
  EXPECT_EQ(two_thirds_floor(r), 11);
  EXPECT_EQ(two_thirds_floor(ResidualMap::Constant(3, 3, 255)), 255);
}

TEST(VarThreshold, AllZeroMapGivesHardThreshold) {
  EXPECT_EQ(var_threshold(ResidualMap::Zero(32, 32)), 25);
}

TEST(VarThreshold, BusyToSixtyGivesSixtySix) {
  const ResidualMap r = busy_to_sixty();
  const Histogram h = histogram_of_thresholds(r);
  const double limit = 0.0025 * static_cast<double>(r.size());
  for (int t = 1; t <= 60; ++t) ASSERT_GT(static_cast<double>(h(t)), limit) << t;
  for (int t = 61; t < 256; ++t) ASSERT_LE(static_cast<double>(h(t)), limit) << t;
  EXPECT_EQ(oracle::var_threshold(r), 66);
  EXPECT_EQ(var_threshold(r), 66);
  EXPECT_EQ(var_threshold(r, h, ThresholdConfig{}), 66);
}

TEST(VarThreshold, NeverBelowHardThresholdOrFloor) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const ResidualMap r = fixture::random_residuals(24, 20, seed, static_cast<int>(10 + seed * 6));
    ThresholdConfig cfg;
    cfg.hard_threshold = static_cast<int>(seed % 4) * 15;
    const int t = var_threshold(r, cfg);
    EXPECT_GE(t, cfg.hard_threshold);
    EXPECT_GE(t, two_thirds_floor(r));
    EXPECT_EQ(t, oracle::var_threshold(r, cfg.noise_rate, cfg.hard_threshold, cfg.scan_halfwidth))
        << "seed " << seed;
  }
}

TEST(VarThreshold, SaltNoiseIsLeftBelowThreshold) {
  // Sparse isolated spikes of arbitrary height are what H_T counts; with
  // enough of them the threshold must clear their heights.
  ResidualMap r = ResidualMap::Zero(64, 64);
  std::mt19937_64 rng(12);
  for (int y = 1; y < 64; y += 3)
    for (int x = 1; x < 64; x += 3) r(y, x) = 20 + static_cast<int>(rng() % 21);
  const int t = var_threshold(r);
  EXPECT_GT(t, 40);
  EXPECT_EQ(apply_threshold(r, t).count(), 0);
}

TEST(VarThreshold, StrictLimitWalksToTop) {
  ThresholdConfig cfg;
  cfg.noise_rate = 1e-9;
  ResidualMap r = ResidualMap::Zero(8, 8);
  r(3, 3) = 255;
  EXPECT_EQ(var_threshold(r, cfg), 255);
}

TEST(ThresholdConfig, Validation) {
  ThresholdConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.noise_rate = -0.1;
  EXPECT_ANY_THROW(cfg.validate());
  cfg = {};
  cfg.hard_threshold = 300;
  EXPECT_ANY_THROW(cfg.validate());
  cfg = {};
  cfg.scan_halfwidth = -1;
  EXPECT_ANY_THROW(cfg.validate());
}

TEST(ApplyThreshold, BoundaryInclusion) {
  ResidualMap r(1, 3);
  r << 24, 25, 26;
  const BinaryMask m = apply_threshold(r, 25);
  EXPECT_FALSE(m(0, 0));
  EXPECT_TRUE(m(0, 1));
  EXPECT_TRUE(m(0, 2));
  EXPECT_TRUE(apply_threshold(r, 0).all());
  EXPECT_FALSE(apply_threshold(r, 256).any());
}

TEST(HistogramCsv, HeaderAndAllBins) {
  const auto dir = fixture::temp_dir("hist_csv");
  save_histogram_csv(dir / "h.csv", histogram_of({{3, 9}}));
  std::ifstream in(dir / "h.csv");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 257u);
  EXPECT_EQ(lines[0], "t,count");
  EXPECT_EQ(lines[4], "3,9");
  EXPECT_EQ(lines[256], "255,0");
}
