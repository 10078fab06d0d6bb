#pragma once

#include <filesystem>

#include "varbg/autoencoder.hpp"

namespace varbg::ae {

/// Checkpoint layout (all integers and floats little-endian):
///   "VBAE" | u32 version | u32 layer count | per layer: u32 kind, 3x u32 in,
///   3x u32 out, u32 kernel, stride, padding, output_padding | i64 step |
///   for parameters, first moments, second moments in turn, per parametric
///   layer: u32 rows, u32 cols, f32 weight[rows*cols], u32 n, f32 bias[n].
inline constexpr std::uint32_t checkpoint_version = 1;

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const NetworkParams<Scalar>& params);

template <typename Scalar>
NetworkParams<Scalar> load_checkpoint(const std::filesystem::path& path);

}  // namespace varbg::ae
