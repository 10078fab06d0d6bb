#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>

#include "varbg/types.hpp"

namespace varbg {

struct ThresholdConfig {
  double noise_rate = 0.0025;  ///< R: tolerated fraction of isolated noise patterns
  int hard_threshold = 25;     ///< T_h
  int scan_halfwidth = 5;      ///< the scan inspects H_T over [t - halfwidth, t + halfwidth]

  void validate() const;
};

/// Closed interval of thresholds [lo, hi].
struct ThresholdRange {
  int lo;
  int hi;
  bool operator==(const ThresholdRange&) const = default;
};

/// Thresholds t at which the centre is marked (r >= t) while at most one of
/// its 3x3 neighbours is: [second-largest neighbour + 1, centre]. With fewer
/// than two neighbours the lower end is 0. Empty when lo > hi.
std::optional<ThresholdRange> vote_range(int center, std::span<const int> neighbors);

/// H_T(t): number of pixels whose clipped 3x3 patch shows an isolated 1- or
/// 2-pixel pattern when binarised at t. Built by interval voting.
Histogram histogram_of_thresholds(const ResidualMap& rmap);

/// Counts of residual values.
Histogram residual_histogram(const ResidualMap& rmap);

/// VaR_alpha = min{c : P(X <= c) >= alpha} of a non-negative histogram.
template <typename Derived>
int value_at_risk(const Eigen::DenseBase<Derived>& hist, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("value_at_risk: alpha must lie in (0, 1]");
  const double total = static_cast<double>(hist.sum());
  if (!(total > 0.0)) throw std::invalid_argument("value_at_risk: empty histogram");
  const double target = alpha * total;
  double cum = 0.0;
  int last_occupied = 0;
  for (Eigen::Index c = 0; c < hist.size(); ++c) {
    const double count = static_cast<double>(hist(c));
    if (count > 0.0) last_occupied = static_cast<int>(c);
    cum += count;
    if (count > 0.0 && cum >= target) return static_cast<int>(c);
  }
  // Accumulated rounding can leave cum marginally short of alpha = 1.
  return last_occupied;
}

/// CVaR_alpha = E[X | X >= VaR_alpha].
template <typename Derived>
double conditional_value_at_risk(const Eigen::DenseBase<Derived>& hist, double alpha) {
  const int var = value_at_risk(hist, alpha);
  double mass = 0.0, moment = 0.0;
  for (Eigen::Index c = var; c < hist.size(); ++c) {
    const double count = static_cast<double>(hist(c));
    mass += count;
    moment += count * static_cast<double>(c);
  }
  return moment / mass;
}

/// Fraction of residuals strictly below t, t in [0, 256].
double alpha_of_threshold(const Histogram& residuals, int t);

/// Shortest [left, right] whose bin sum is at least half the total; ties
/// go to the smallest left. An empty histogram gives (0, 0).
std::pair<int, int> smallest_half_interval(const Histogram& hist);

/// q + 1 where q is the ceil(2N/3)-th smallest residual, clamped to 255.
int two_thirds_floor(const ResidualMap& rmap);

/// Automatic threshold: start from max(two_thirds_floor, T_h, right end of
/// the smallest half interval of H_T) and advance until every H_T(x) in the
/// scan window is at most R * (pixel count). Returns 255 if no t passes.
int var_threshold(const ResidualMap& rmap, const ThresholdConfig& cfg = {});

/// Same scan given a precomputed histogram of thresholds.
int var_threshold(const ResidualMap& rmap, const Histogram& thresholds, const ThresholdConfig& cfg);

/// mask_i = r_i >= t.
BinaryMask apply_threshold(const ResidualMap& rmap, int t);

/// Writes "t,count" lines (with a header) for all 256 bins.
void save_histogram_csv(const std::filesystem::path& path, const Histogram& hist);

}  // namespace varbg
