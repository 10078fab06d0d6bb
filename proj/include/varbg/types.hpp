#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace varbg {

/// Row-major dense image, rows = height, cols = width.
template <typename Scalar>
using Image = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit grayscale frame with intensities in [0, 255].
using Frame = Image<std::uint8_t>;

/// Single-channel image normalised to [-0.5, 0.5].
template <typename Scalar>
using NormTensor = Image<Scalar>;

/// Foreground flags; true marks an anomaly.
using BinaryMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-pixel loss weights in (0, 1].
using WeightMap = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Integral residuals in [0, 255]; stored as int to keep arithmetic signed.
using ResidualMap = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 256-bin count histogram indexed by intensity or threshold value.
using Histogram = Eigen::Array<std::int64_t, 256, 1>;

}  // namespace varbg
