#include "varbg/threshold.hpp"

#include <algorithm>
#include <array>
#include <fstream>

namespace varbg {

void ThresholdConfig::validate() const {
  if (!(noise_rate > 0.0 && noise_rate < 1.0)) throw std::invalid_argument("noise_rate must lie in (0, 1)");
  if (hard_threshold < 0 || hard_threshold > 255) throw std::invalid_argument("hard_threshold must lie in [0, 255]");
  if (scan_halfwidth < 0) throw std::invalid_argument("scan_halfwidth must be >= 0");
}

std::optional<ThresholdRange> vote_range(int center, std::span<const int> neighbors) {
  int first = -1, second = -1;
  for (int v : neighbors) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  const ThresholdRange range{second + 1, center};
  if (range.lo > range.hi) return std::nullopt;
  return range;
}

Histogram histogram_of_thresholds(const ResidualMap& rmap) {
  const auto h = static_cast<int>(rmap.rows()), w = static_cast<int>(rmap.cols());
  // Difference array: +1 at lo, -1 past hi.
  std::array<std::int64_t, 257> delta{};
  std::array<int, 8> neighbors{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        const int ny = y + dy;
        if (ny < 0 || ny >= h) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          if ((dy == 0 && dx == 0) || nx < 0 || nx >= w) continue;
          neighbors[n++] = rmap(ny, nx);
        }
      }
      if (const auto r = vote_range(rmap(y, x), std::span<const int>(neighbors.data(), n))) {
        const int lo = std::clamp(r->lo, 0, 256), hi = std::clamp(r->hi, -1, 255);
        if (lo <= hi) {
          ++delta[static_cast<std::size_t>(lo)];
          --delta[static_cast<std::size_t>(hi + 1)];
        }
      }
    }
  }
  Histogram hist;
  std::int64_t running = 0;
  for (int t = 0; t < 256; ++t) {
    running += delta[static_cast<std::size_t>(t)];
    hist(t) = running;
  }
  return hist;
}

Histogram residual_histogram(const ResidualMap& rmap) {
  Histogram hist = Histogram::Zero();
  for (Eigen::Index i = 0; i < rmap.size(); ++i) {
    const int v = rmap.data()[i];
    if (v < 0 || v > 255) throw std::out_of_range("residual_histogram: residual outside [0, 255]");
    ++hist(v);
  }
  return hist;
}

double alpha_of_threshold(const Histogram& residuals, int t) {
  const auto total = residuals.sum();
  if (total <= 0) throw std::invalid_argument("alpha_of_threshold: empty histogram");
  const int end = std::clamp(t, 0, 256);
  return static_cast<double>(residuals.head(end).sum()) / static_cast<double>(total);
}

std::pair<int, int> smallest_half_interval(const Histogram& hist) {
  const std::int64_t total = hist.sum();
  if (total <= 0) return {0, 0};
  std::pair<int, int> best{0, 255};
  int left = 0;
  std::int64_t window = 0;
  // For each right end, shrink from the left while the window still holds half.
  for (int right = 0; right < 256; ++right) {
    window += hist(right);
    while (left < right && 2 * (window - hist(left)) >= total) window -= hist(left++);
    if (2 * window >= total && right - left < best.second - best.first) best = {left, right};
  }
  // Ties at the minimal length: the scan keeps the first (smallest-left) one.
  return best;
}

int two_thirds_floor(const ResidualMap& rmap) {
  if (rmap.size() == 0) throw std::invalid_argument("two_thirds_floor: empty map");
  const Histogram hist = residual_histogram(rmap);
  const std::int64_t n = rmap.size();
  const std::int64_t rank = (2 * n + 2) / 3;  // ceil(2N/3), 1-based
  std::int64_t cum = 0;
  for (int q = 0; q < 256; ++q) {
    cum += hist(q);
    if (cum >= rank) return std::min(q + 1, 255);
  }
  return 255;
}

int var_threshold(const ResidualMap& rmap, const Histogram& thresholds, const ThresholdConfig& cfg) {
  cfg.validate();
  if (rmap.size() == 0) throw std::invalid_argument("var_threshold: empty map");
  const int m_right = smallest_half_interval(thresholds).second;
  const double limit = cfg.noise_rate * static_cast<double>(rmap.size());
  for (int t = std::max({two_thirds_floor(rmap), cfg.hard_threshold, m_right}); t <= 255; ++t) {
    const int lo = std::max(0, t - cfg.scan_halfwidth), hi = std::min(255, t + cfg.scan_halfwidth);
    bool quiet = true;
    for (int x = lo; x <= hi && quiet; ++x) quiet = static_cast<double>(thresholds(x)) <= limit;
    if (quiet) return t;
  }
  return 255;
}

int var_threshold(const ResidualMap& rmap, const ThresholdConfig& cfg) {
  return var_threshold(rmap, histogram_of_thresholds(rmap), cfg);
}

BinaryMask apply_threshold(const ResidualMap& rmap, int t) { return rmap >= t; }

void save_histogram_csv(const std::filesystem::path& path, const Histogram& hist) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << "t,count\n";
  for (int t = 0; t < 256; ++t) out << t << ',' << hist(t) << '\n';
}

}  // namespace varbg
