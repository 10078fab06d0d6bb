#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "varbg/types.hpp"

namespace varbg::ae {

enum class LayerKind { conv, transposed_conv, fully_connected, tanh, half_tanh, reshape };

std::string to_string(LayerKind kind);

struct TensorShape {
  int channels = 0;
  int height = 0;
  int width = 0;

  int pixels() const { return height * width; }
  int size() const { return channels * height * width; }
  bool operator==(const TensorShape&) const = default;
};

struct LayerSpec {
  LayerKind kind;
  TensorShape in;
  TensorShape out;
  int kernel = 0;
  int stride = 0;
  int padding = 0;
  int output_padding = 0;

  bool has_params() const {
    return kind == LayerKind::conv || kind == LayerKind::transposed_conv || kind == LayerKind::fully_connected;
  }
  /// Xavier fan-in / fan-out (PyTorch convention for each weight layout).
  int fan_in() const;
  int fan_out() const;
};

using NetworkSpec = std::vector<LayerSpec>;

/// The encoder/bottleneck/decoder stack: four 5x5 stride-2 convolutions, two
/// fully-connected layers around the bottleneck, four transposed
/// convolutions and a 0.5*tanh output head. `channels` is the hidden width;
/// 64 is the standard network, smaller values give cheap variants
/// of the same topology. Requires height and width divisible by 16.
NetworkSpec build_network(int height, int width, int bottleneck, int channels = 64);

/// One image or activation: rows = channels, cols = height*width. Dense
/// activations use shape (n, 1).
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Batch = std::vector<Tensor<Scalar>>;

template <typename Scalar>
struct LayerParams {
  /// conv: (out, in*k*k); transposed conv: (in, out*k*k); FC: (out, in).
  Tensor<Scalar> weight;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;
};

template <typename Scalar>
using Gradients = std::vector<LayerParams<Scalar>>;

template <typename Scalar>
struct NetworkParams {
  NetworkSpec spec;
  std::vector<LayerParams<Scalar>> layers;  ///< parallel to spec; empty for parameter-free layers
  std::vector<LayerParams<Scalar>> first_moment;
  std::vector<LayerParams<Scalar>> second_moment;
  std::int64_t step = 0;

  std::size_t parameter_count() const;
  TensorShape input_shape() const { return spec.front().in; }
};

/// Weights ~ U(-a, a), a = sqrt(6 / (fan_in + fan_out)); zero biases and
/// optimizer state. Samples are drawn in double, so float and double
/// networks built from the same seed hold the same values up to rounding.
template <typename Scalar>
NetworkParams<Scalar> xavier_init(NetworkSpec spec, std::uint64_t seed);

/// Activations recorded by forward; entry l is the input of layer l and the
/// last entry is the network output.
template <typename Scalar>
struct ForwardCache {
  std::vector<Batch<Scalar>> activations;
  std::int64_t step = -1;
  std::size_t layer_count = 0;
};

template <typename Scalar>
Batch<Scalar> forward(const NetworkParams<Scalar>& params, const Batch<Scalar>& input,
                      ForwardCache<Scalar>* cache = nullptr);

template <typename Scalar>
struct LossResult {
  double loss = 0.0;
  Batch<Scalar> grad;  ///< d loss / d reconstruction
};

/// L = sum_{c,i} w_i |I(c,i) - B(c,i)|, grad = -w_i sign(I - B), sign(0) = 0.
/// One weight map is shared by every batch member.
template <typename Scalar>
LossResult<Scalar> weighted_l1_loss(const Batch<Scalar>& input, const Batch<Scalar>& recon, const WeightMap& weights);

/// Reverse-mode gradients of sum(upstream .* output) with respect to every
/// parameter. Throws if the cache does not belong to the current parameters.
template <typename Scalar>
Gradients<Scalar> backward(const NetworkParams<Scalar>& params, const ForwardCache<Scalar>& cache,
                           const Batch<Scalar>& upstream);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One Adam update. Returns false and leaves params untouched when any
/// gradient is non-finite.
template <typename Scalar>
[[nodiscard]] bool step(NetworkParams<Scalar>& params, const Gradients<Scalar>& grads, const AdamConfig& cfg = {});

// Single-layer kernels, exposed for testing and reuse.

/// 2-D convolution of one (c_in, h*w) tensor.
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const LayerSpec& spec, const LayerParams<Scalar>& p);

/// Transposed convolution (adjoint of conv2d in its input) plus bias.
template <typename Scalar>
Tensor<Scalar> conv_transpose2d(const Tensor<Scalar>& input, const LayerSpec& spec, const LayerParams<Scalar>& p);

}  // namespace varbg::ae
