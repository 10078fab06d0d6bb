#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "varbg/types.hpp"

namespace varbg {

/// Raised for unreadable, malformed or unsupported image files.
class ImageError : public std::runtime_error {
 public:
  ImageError(const std::filesystem::path& path, const std::string& reason)
      : std::runtime_error(path.string() + ": " + reason) {}
};

enum class ResizeMode { bilinear, nearest };

/// Loads a binary P5 PGM (maxval 255) or an 8-bit gray/RGB PNG.
/// RGB input is converted with to_grayscale.
Frame load_frame(const std::filesystem::path& path);

void save_pgm(const std::filesystem::path& path, const Frame& frame);
void save_png(const std::filesystem::path& path, const Frame& frame);

/// Writes a mask as P5 with values {0, 255}.
void save_mask(const std::filesystem::path& path, const BinaryMask& mask);

/// BT.601 luma, rounded half up.
std::uint8_t to_grayscale(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Half-pixel-centre resampling (src = (dst + 0.5) * scale - 0.5). Returns an
/// exact copy when the size already matches.
Frame resize(const Frame& frame, int out_width, int out_height,
             ResizeMode mode = ResizeMode::bilinear);
BinaryMask resize(const BinaryMask& mask, int out_width, int out_height);

template <typename Scalar = float>
NormTensor<Scalar> normalize(const Frame& frame) {
  return (frame.cast<Scalar>() / Scalar(255)).array() - Scalar(0.5);
}

template <typename Derived>
Frame denormalize(const Eigen::MatrixBase<Derived>& tensor) {
  using Scalar = typename Derived::Scalar;
  return tensor.unaryExpr([](Scalar v) {
    const double scaled = std::floor((static_cast<double>(v) + 0.5) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
  });
}

}  // namespace varbg
