#pragma once

#include <filesystem>

#include "varbg/types.hpp"

namespace varbg {

/// Per-pixel displacement (pixels) from the previous frame to the current one.
struct VelocityField {
  Image<double> u;  ///< horizontal
  Image<double> v;  ///< vertical

  Eigen::Index rows() const { return u.rows(); }
  Eigen::Index cols() const { return u.cols(); }
};

struct FlowConfig {
  int block_size = 8;
  int block_stride = 4;
  int search_radius = 4;
  int min_level_side = 16;  ///< coarsest pyramid level keeps min(h, w) >= this
};

/// Source of velocity fields for the loss weighting. Implementations may wrap
/// an external optical-flow engine or precomputed fields.
class FlowProvider {
 public:
  virtual ~FlowProvider() = default;
  virtual VelocityField estimate(const Frame& prev, const Frame& cur) const = 0;
};

/// Coarse-to-fine integer block matching over a binomial Gaussian pyramid.
class BlockMatchingFlow final : public FlowProvider {
 public:
  explicit BlockMatchingFlow(FlowConfig cfg = {}) : cfg_(cfg) {}
  VelocityField estimate(const Frame& prev, const Frame& cur) const override;

 private:
  FlowConfig cfg_;
};

VelocityField estimate_flow(const Frame& prev, const Frame& cur, const FlowConfig& cfg = {});

/// w_i = exp(-|v_i|^2 / (2 m)), m the median of |v|^2 over the image
/// (element floor(N/2) of the sorted values). m == 0 yields all ones.
WeightMap weights_from_flow(const VelocityField& field);

/// Debug dump: w scaled by 255 and rounded, written as P5.
void save_weight_map(const std::filesystem::path& path, const WeightMap& weights);

}  // namespace varbg
