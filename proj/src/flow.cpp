#include "varbg/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "varbg/imageio.hpp"

namespace varbg {

namespace {

using Plane = Image<float>;

// 5-tap binomial blur followed by 2x decimation; borders are clamped.
Plane downsample(const Plane& src) {
  static constexpr float taps[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};
  const Eigen::Index h = src.rows(), w = src.cols();
  Plane horiz(h, w / 2);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w / 2; ++x) {
      float acc = 0.f;
      for (int k = -2; k <= 2; ++k) acc += taps[k + 2] * src(y, std::clamp<Eigen::Index>(2 * x + k, 0, w - 1));
      horiz(y, x) = acc;
    }
  }
  Plane out(h / 2, w / 2);
  for (Eigen::Index y = 0; y < h / 2; ++y) {
    for (Eigen::Index x = 0; x < w / 2; ++x) {
      float acc = 0.f;
      for (int k = -2; k <= 2; ++k) acc += taps[k + 2] * horiz(std::clamp<Eigen::Index>(2 * y + k, 0, h - 1), x);
      out(y, x) = acc;
    }
  }
  return out;
}

std::vector<Plane> build_pyramid(const Frame& frame, int min_side) {
  std::vector<Plane> levels{frame.cast<float>()};
  while (std::min(levels.back().rows(), levels.back().cols()) / 2 >= min_side) levels.push_back(downsample(levels.back()));
  return levels;
}

float sample_bilinear(const Plane& p, double y, double x) {
  y = std::clamp(y, 0.0, static_cast<double>(p.rows() - 1));
  x = std::clamp(x, 0.0, static_cast<double>(p.cols() - 1));
  const auto y0 = static_cast<Eigen::Index>(y), x0 = static_cast<Eigen::Index>(x);
  const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, p.rows() - 1), x1 = std::min<Eigen::Index>(x0 + 1, p.cols() - 1);
  const double ty = y - static_cast<double>(y0), tx = x - static_cast<double>(x0);
  return static_cast<float>((1 - ty) * ((1 - tx) * p(y0, x0) + tx * p(y0, x1)) + ty * ((1 - tx) * p(y1, x0) + tx * p(y1, x1)));
}

// Regular block layout along one axis.
struct BlockAxis {
  int size;
  int stride;
  int count;

  BlockAxis(Eigen::Index extent, int block, int step)
      : size(static_cast<int>(std::min<Eigen::Index>(block, extent))),
        stride(step),
        count(static_cast<int>((extent - std::min<Eigen::Index>(block, extent)) / step + 1)) {}

  int origin(int k) const { return k * stride; }
  double centre(int k) const { return origin(k) + (size - 1) / 2.0; }
};

// Interpolates block vectors (indexed by block grid) to a per-pixel field.
Plane interpolate_blocks(const Plane& blocks, const BlockAxis& ay, const BlockAxis& ax, Eigen::Index h, Eigen::Index w) {
  Plane dense(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    const double gy = std::clamp((static_cast<double>(y) - ay.centre(0)) / ay.stride, 0.0, static_cast<double>(ay.count - 1));
    for (Eigen::Index x = 0; x < w; ++x) {
      const double gx = std::clamp((static_cast<double>(x) - ax.centre(0)) / ax.stride, 0.0, static_cast<double>(ax.count - 1));
      dense(y, x) = sample_bilinear(blocks, gy, gx);
    }
  }
  return dense;
}

// Doubles the resolution and magnitude of a coarse-level dense field.
Plane upsample_field(const Plane& coarse, Eigen::Index h, Eigen::Index w) {
  Plane fine(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      fine(y, x) = 2.f * sample_bilinear(coarse, (y + 0.5) / 2.0 - 0.5, (x + 0.5) / 2.0 - 0.5);
    }
  }
  return fine;
}

float block_sad(const Plane& prev, const Plane& cur, int oy, int ox, int by, int bx, int dy, int dx) {
  const Eigen::Index h = cur.rows() - 1, w = cur.cols() - 1;
  float sad = 0.f;
  for (int y = oy; y < oy + by; ++y) {
    const Eigen::Index cy = std::clamp<Eigen::Index>(y + dy, 0, h);
    for (int x = ox; x < ox + bx; ++x) {
      sad += std::abs(prev(y, x) - cur(cy, std::clamp<Eigen::Index>(x + dx, 0, w)));
    }
  }
  return sad;
}

// True when displacement a is preferred over b at equal cost: smaller
// magnitude first, then a fixed scan order.
bool closer_to_zero(int ady, int adx, int bdy, int bdx) {
  const int ma = ady * ady + adx * adx, mb = bdy * bdy + bdx * bdx;
  if (ma != mb) return ma < mb;
  return ady != bdy ? ady < bdy : adx < bdx;
}

}  // namespace

VelocityField BlockMatchingFlow::estimate(const Frame& prev, const Frame& cur) const {
  if (prev.rows() != cur.rows() || prev.cols() != cur.cols()) throw std::invalid_argument("estimate_flow: dimension mismatch");
  if (cfg_.block_size < 1 || cfg_.block_stride < 1 || cfg_.search_radius < 0) throw std::invalid_argument("estimate_flow: bad config");
  const auto prev_pyr = build_pyramid(prev, cfg_.min_level_side);
  const auto cur_pyr = build_pyramid(cur, cfg_.min_level_side);

  Plane field_u, field_v;
  for (auto level = static_cast<int>(prev_pyr.size()) - 1; level >= 0; --level) {
    const Plane& p = prev_pyr[static_cast<std::size_t>(level)];
    const Plane& c = cur_pyr[static_cast<std::size_t>(level)];
    Plane pred_u = Plane::Zero(p.rows(), p.cols()), pred_v = Plane::Zero(p.rows(), p.cols());
    if (field_u.size() > 0) {
      pred_u = upsample_field(field_u, p.rows(), p.cols());
      pred_v = upsample_field(field_v, p.rows(), p.cols());
    }
    const BlockAxis ay(p.rows(), cfg_.block_size, cfg_.block_stride);
    const BlockAxis ax(p.cols(), cfg_.block_size, cfg_.block_stride);
    Plane block_u(ay.count, ax.count), block_v(ay.count, ax.count);
    for (int j = 0; j < ay.count; ++j) {
      for (int i = 0; i < ax.count; ++i) {
        const int oy = ay.origin(j), ox = ax.origin(i);
        const auto cy = static_cast<Eigen::Index>(std::lround(ay.centre(j)));
        const auto cx = static_cast<Eigen::Index>(std::lround(ax.centre(i)));
        const int py = static_cast<int>(std::lround(pred_v(cy, cx)));
        const int px = static_cast<int>(std::lround(pred_u(cy, cx)));
        float best = std::numeric_limits<float>::infinity();
        int best_dy = 0, best_dx = 0;
        for (int dy = py - cfg_.search_radius; dy <= py + cfg_.search_radius; ++dy) {
          for (int dx = px - cfg_.search_radius; dx <= px + cfg_.search_radius; ++dx) {
            const float sad = block_sad(p, c, oy, ox, ay.size, ax.size, dy, dx);
            if (sad < best || (sad == best && closer_to_zero(dy, dx, best_dy, best_dx))) {
              best = sad;
              best_dy = dy;
              best_dx = dx;
            }
          }
        }
        block_u(j, i) = static_cast<float>(best_dx);
        block_v(j, i) = static_cast<float>(best_dy);
      }
    }
    field_u = interpolate_blocks(block_u, ay, ax, p.rows(), p.cols());
    field_v = interpolate_blocks(block_v, ay, ax, p.rows(), p.cols());
  }
  return {field_u.cast<double>(), field_v.cast<double>()};
}

VelocityField estimate_flow(const Frame& prev, const Frame& cur, const FlowConfig& cfg) {
  return BlockMatchingFlow(cfg).estimate(prev, cur);
}

WeightMap weights_from_flow(const VelocityField& field) {
  const WeightMap speed2 = field.u.array().square() + field.v.array().square();
  std::vector<double> sorted(speed2.data(), speed2.data() + speed2.size());
  if (sorted.empty()) return WeightMap(speed2.rows(), speed2.cols());
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double median = *mid;
  if (median <= 0.0) return WeightMap::Ones(speed2.rows(), speed2.cols());
  // Clamp keeps far-moving points strictly positive after underflow.
  return (-speed2 / (2.0 * median)).exp().max(std::numeric_limits<double>::min());
}

void save_weight_map(const std::filesystem::path& path, const WeightMap& weights) {
  const Frame scaled = (weights * 255.0 + 0.5).floor().min(255.0).max(0.0).cast<std::uint8_t>().matrix();
  save_pgm(path, scaled);
}

}  // namespace varbg
