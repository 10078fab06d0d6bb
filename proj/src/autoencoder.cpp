#include "varbg/autoencoder.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace varbg::ae {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::transposed_conv: return "transposed_conv";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::tanh: return "tanh";
    case LayerKind::half_tanh: return "half_tanh";
    case LayerKind::reshape: return "reshape";
  }
  return "unknown";
}

int LayerSpec::fan_in() const {
  switch (kind) {
    case LayerKind::conv: return in.channels * kernel * kernel;
    case LayerKind::transposed_conv: return out.channels * kernel * kernel;
    case LayerKind::fully_connected: return in.size();
    default: return 0;
  }
}

int LayerSpec::fan_out() const {
  switch (kind) {
    case LayerKind::conv: return out.channels * kernel * kernel;
    case LayerKind::transposed_conv: return in.channels * kernel * kernel;
    case LayerKind::fully_connected: return out.size();
    default: return 0;
  }
}

NetworkSpec build_network(int height, int width, int bottleneck, int channels) {
  constexpr int stages = 4;
  constexpr int kernel = 5, stride = 2, padding = 2;
  if (height <= 0 || width <= 0 || height % 16 != 0 || width % 16 != 0) {
    throw std::invalid_argument("build_network: height and width must be positive multiples of 16, got " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
  if (bottleneck < 1 || channels < 1) throw std::invalid_argument("build_network: bottleneck and channels must be >= 1");

  NetworkSpec net;
  auto activation = [&net](LayerKind kind) { net.push_back({kind, net.back().out, net.back().out}); };

  TensorShape shape{1, height, width};
  for (int s = 0; s < stages; ++s) {
    const TensorShape next{channels, shape.height / 2, shape.width / 2};
    net.push_back({LayerKind::conv, shape, next, kernel, stride, padding, 0});
    activation(LayerKind::tanh);
    shape = next;
  }
  const TensorShape grid = shape;
  const TensorShape flat{grid.size(), 1, 1};
  const TensorShape code{bottleneck, 1, 1};
  net.push_back({LayerKind::reshape, grid, flat});
  net.push_back({LayerKind::fully_connected, flat, code});
  activation(LayerKind::tanh);
  net.push_back({LayerKind::fully_connected, code, flat});
  activation(LayerKind::tanh);
  net.push_back({LayerKind::reshape, flat, grid});
  shape = grid;
  for (int s = 0; s < stages; ++s) {
    const bool last = s + 1 == stages;
    const TensorShape next{last ? 1 : channels, shape.height * 2, shape.width * 2};
    net.push_back({LayerKind::transposed_conv, shape, next, kernel, stride, padding, 1});
    activation(last ? LayerKind::half_tanh : LayerKind::tanh);
    shape = next;
  }
  return net;
}

template <typename Scalar>
std::size_t NetworkParams<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

namespace {

template <typename Scalar>
LayerParams<Scalar> zeros_like(const LayerParams<Scalar>& p) {
  return {Tensor<Scalar>::Zero(p.weight.rows(), p.weight.cols()),
          Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(p.bias.size())};
}

Eigen::Index weight_rows(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::conv: return s.out.channels;
    case LayerKind::transposed_conv: return s.in.channels;
    case LayerKind::fully_connected: return s.out.size();
    default: return 0;
  }
}

Eigen::Index weight_cols(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::conv: return s.in.channels * s.kernel * s.kernel;
    case LayerKind::transposed_conv: return s.out.channels * s.kernel * s.kernel;
    case LayerKind::fully_connected: return s.in.size();
    default: return 0;
  }
}

// Gathers k*k patches of src (channels, src_h*src_w) for every point of a
// (grid_h, grid_w) grid; grid point (y, x) reads src at
// (y*stride - pad + ky, x*stride - pad + kx). Out-of-range taps are zero.
template <typename Scalar>
Tensor<Scalar> gather_patches(const Tensor<Scalar>& src, int channels, int src_h, int src_w, int grid_h, int grid_w,
                              int k, int stride, int pad) {
  Tensor<Scalar> cols = Tensor<Scalar>::Zero(channels * k * k, grid_h * grid_w);
  for (int c = 0; c < channels; ++c) {
    const Scalar* plane = src.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        Scalar* dst = cols.row((c * k + ky) * k + kx).data();
        for (int y = 0; y < grid_h; ++y) {
          const int sy = y * stride - pad + ky;
          if (sy < 0 || sy >= src_h) continue;
          for (int x = 0; x < grid_w; ++x) {
            const int sx = x * stride - pad + kx;
            if (sx >= 0 && sx < src_w) dst[y * grid_w + x] = plane[sy * src_w + sx];
          }
        }
      }
    }
  }
  return cols;
}

// Adjoint of gather_patches: accumulates columns back onto the source grid.
template <typename Scalar>
Tensor<Scalar> scatter_patches(const Tensor<Scalar>& cols, int channels, int src_h, int src_w, int grid_h, int grid_w,
                               int k, int stride, int pad) {
  Tensor<Scalar> out = Tensor<Scalar>::Zero(channels, src_h * src_w);
  for (int c = 0; c < channels; ++c) {
    Scalar* plane = out.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Scalar* col = cols.row((c * k + ky) * k + kx).data();
        for (int y = 0; y < grid_h; ++y) {
          const int sy = y * stride - pad + ky;
          if (sy < 0 || sy >= src_h) continue;
          for (int x = 0; x < grid_w; ++x) {
            const int sx = x * stride - pad + kx;
            if (sx >= 0 && sx < src_w) plane[sy * src_w + sx] += col[y * grid_w + x];
          }
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> conv_patches(const Tensor<Scalar>& input, const LayerSpec& s) {
  return gather_patches(input, s.in.channels, s.in.height, s.in.width, s.out.height, s.out.width, s.kernel, s.stride,
                        s.padding);
}

template <typename Scalar>
Tensor<Scalar> reshaped(const Tensor<Scalar>& t, const TensorShape& shape) {
  return Eigen::Map<const Tensor<Scalar>>(t.data(), shape.channels, shape.pixels());
}

template <typename Scalar>
Tensor<Scalar> layer_forward(const LayerSpec& s, const LayerParams<Scalar>& p, const Tensor<Scalar>& x) {
  switch (s.kind) {
    case LayerKind::conv: return conv2d(x, s, p);
    case LayerKind::transposed_conv: return conv_transpose2d(x, s, p);
    case LayerKind::fully_connected: return (p.weight * x).colwise() + p.bias;
    case LayerKind::tanh: return x.array().tanh().matrix();
    case LayerKind::half_tanh: return (Scalar(0.5) * x.array().tanh()).matrix();
    case LayerKind::reshape: return reshaped(x, s.out);
  }
  throw std::logic_error("unknown layer kind");
}

// Propagates delta (d loss / d output) through one layer, accumulating
// parameter gradients into g. Returns d loss / d input.
template <typename Scalar>
Tensor<Scalar> layer_backward(const LayerSpec& s, const LayerParams<Scalar>& p, const Tensor<Scalar>& x,
                              const Tensor<Scalar>& y, const Tensor<Scalar>& delta, LayerParams<Scalar>& g) {
  switch (s.kind) {
    case LayerKind::conv: {
      const Tensor<Scalar> cols = conv_patches(x, s);
      g.weight.noalias() += delta * cols.transpose();
      g.bias += delta.rowwise().sum();
      const Tensor<Scalar> dcols = p.weight.transpose() * delta;
      return scatter_patches(dcols, s.in.channels, s.in.height, s.in.width, s.out.height, s.out.width, s.kernel,
                             s.stride, s.padding);
    }
    case LayerKind::transposed_conv: {
      const Tensor<Scalar> dcols = gather_patches(delta, s.out.channels, s.out.height, s.out.width, s.in.height,
                                                  s.in.width, s.kernel, s.stride, s.padding);
      g.weight.noalias() += x * dcols.transpose();
      g.bias += delta.rowwise().sum();
      return p.weight * dcols;
    }
    case LayerKind::fully_connected:
      g.weight.noalias() += delta * x.transpose();
      g.bias += delta;
      return p.weight.transpose() * delta;
    case LayerKind::tanh: return (delta.array() * (Scalar(1) - y.array().square())).matrix();
    case LayerKind::half_tanh:
      return (delta.array() * Scalar(0.5) * (Scalar(1) - (Scalar(2) * y.array()).square())).matrix();
    case LayerKind::reshape: return reshaped(delta, s.in);
  }
  throw std::logic_error("unknown layer kind");
}

template <typename Scalar>
void check_tensor(const Tensor<Scalar>& t, const TensorShape& shape, const char* what) {
  if (t.rows() != shape.channels || t.cols() != shape.pixels()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch, expected " + std::to_string(shape.channels) +
                                "x" + std::to_string(shape.pixels()) + ", got " + std::to_string(t.rows()) + "x" +
                                std::to_string(t.cols()));
  }
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const LayerSpec& s, const LayerParams<Scalar>& p) {
  check_tensor(input, s.in, "conv2d");
  Tensor<Scalar> out = p.weight * conv_patches(input, s);
  out.colwise() += p.bias;
  return out;
}

template <typename Scalar>
Tensor<Scalar> conv_transpose2d(const Tensor<Scalar>& input, const LayerSpec& s, const LayerParams<Scalar>& p) {
  check_tensor(input, s.in, "conv_transpose2d");
  const Tensor<Scalar> cols = p.weight.transpose() * input;
  Tensor<Scalar> out = scatter_patches(cols, s.out.channels, s.out.height, s.out.width, s.in.height, s.in.width,
                                       s.kernel, s.stride, s.padding);
  out.colwise() += p.bias;
  return out;
}

template <typename Scalar>
NetworkParams<Scalar> xavier_init(NetworkSpec spec, std::uint64_t seed) {
  for (std::size_t l = 1; l < spec.size(); ++l) {
    if (!(spec[l - 1].out == spec[l].in)) throw std::invalid_argument("xavier_init: layer shapes do not chain");
  }
  NetworkParams<Scalar> params;
  params.spec = std::move(spec);
  std::mt19937_64 rng(seed);
  for (const auto& s : params.spec) {
    LayerParams<Scalar> p;
    if (s.has_params()) {
      const double a = std::sqrt(6.0 / static_cast<double>(s.fan_in() + s.fan_out()));
      std::uniform_real_distribution<double> dist(-a, a);
      p.weight.resize(weight_rows(s), weight_cols(s));
      for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = static_cast<Scalar>(dist(rng));
      p.bias = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(s.out.channels);
    }
    params.first_moment.push_back(zeros_like(p));
    params.second_moment.push_back(zeros_like(p));
    params.layers.push_back(std::move(p));
  }
  return params;
}

template <typename Scalar>
Batch<Scalar> forward(const NetworkParams<Scalar>& params, const Batch<Scalar>& input, ForwardCache<Scalar>* cache) {
  const auto& spec = params.spec;
  if (spec.empty()) throw std::invalid_argument("forward: empty network");
  for (const auto& t : input) check_tensor(t, spec.front().in, "forward");
  if (cache) {
    cache->activations.assign(spec.size() + 1, {});
    cache->activations[0] = input;
    cache->step = params.step;
    cache->layer_count = spec.size();
  }
  Batch<Scalar> current = input;
  for (std::size_t l = 0; l < spec.size(); ++l) {
    for (auto& t : current) t = layer_forward(spec[l], params.layers[l], t);
    if (cache) cache->activations[l + 1] = current;
  }
  return current;
}

template <typename Scalar>
LossResult<Scalar> weighted_l1_loss(const Batch<Scalar>& input, const Batch<Scalar>& recon, const WeightMap& weights) {
  if (input.size() != recon.size()) throw std::invalid_argument("weighted_l1_loss: batch size mismatch");
  LossResult<Scalar> result;
  result.grad.reserve(input.size());
  const Eigen::Map<const Eigen::Array<double, 1, Eigen::Dynamic>> w(weights.data(), weights.size());
  for (std::size_t s = 0; s < input.size(); ++s) {
    const auto& a = input[s];
    const auto& b = recon[s];
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.cols() != weights.size()) {
      throw std::invalid_argument("weighted_l1_loss: shape mismatch");
    }
    Tensor<Scalar> g(a.rows(), a.cols());
    for (Eigen::Index c = 0; c < a.rows(); ++c) {
      const Eigen::Array<double, 1, Eigen::Dynamic> diff = (a.row(c) - b.row(c)).array().template cast<double>();
      result.loss += (w * diff.abs()).sum();
      g.row(c) = (-w * diff.sign()).template cast<Scalar>().matrix();
    }
    result.grad.push_back(std::move(g));
  }
  return result;
}

template <typename Scalar>
Gradients<Scalar> backward(const NetworkParams<Scalar>& params, const ForwardCache<Scalar>& cache,
                           const Batch<Scalar>& upstream) {
  const auto& spec = params.spec;
  if (cache.layer_count != spec.size() || cache.activations.size() != spec.size() + 1) {
    throw std::invalid_argument("backward: cache does not match network");
  }
  if (cache.step != params.step) throw std::invalid_argument("backward: stale cache (parameters changed since forward)");
  const auto& outputs = cache.activations.back();
  if (upstream.size() != outputs.size()) throw std::invalid_argument("backward: batch size mismatch");

  Gradients<Scalar> grads;
  grads.reserve(spec.size());
  for (const auto& p : params.layers) grads.push_back(zeros_like(p));

  for (std::size_t s = 0; s < upstream.size(); ++s) {
    check_tensor(upstream[s], spec.back().out, "backward");
    Tensor<Scalar> delta = upstream[s];
    for (std::size_t l = spec.size(); l-- > 0;) {
      delta = layer_backward(spec[l], params.layers[l], cache.activations[l][s], cache.activations[l + 1][s], delta,
                             grads[l]);
    }
  }
  return grads;
}

template <typename Scalar>
bool step(NetworkParams<Scalar>& params, const Gradients<Scalar>& grads, const AdamConfig& cfg) {
  if (grads.size() != params.layers.size()) throw std::invalid_argument("step: gradient layout mismatch");
  for (std::size_t l = 0; l < grads.size(); ++l) {
    if (grads[l].weight.rows() != params.layers[l].weight.rows() ||
        grads[l].weight.cols() != params.layers[l].weight.cols() ||
        grads[l].bias.size() != params.layers[l].bias.size()) {
      throw std::invalid_argument("step: gradient shape mismatch at layer " + std::to_string(l));
    }
    if (!grads[l].weight.allFinite() || !grads[l].bias.allFinite()) return false;
  }
  ++params.step;
  const auto t = static_cast<double>(params.step);
  const auto b1 = static_cast<Scalar>(cfg.beta1), b2 = static_cast<Scalar>(cfg.beta2);
  const auto correction1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, t));
  const auto correction2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, t));
  const auto lr = static_cast<Scalar>(cfg.learning_rate), eps = static_cast<Scalar>(cfg.epsilon);

  auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
    theta.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < grads.size(); ++l) {
    if (!params.spec[l].has_params()) continue;
    update(params.layers[l].weight, params.first_moment[l].weight, params.second_moment[l].weight, grads[l].weight);
    update(params.layers[l].bias, params.first_moment[l].bias, params.second_moment[l].bias, grads[l].bias);
  }
  return true;
}

#define VARBG_INSTANTIATE(S)                                                                                       \
  template struct NetworkParams<S>;                                                                                \
  template NetworkParams<S> xavier_init<S>(NetworkSpec, std::uint64_t);                                            \
  template Batch<S> forward<S>(const NetworkParams<S>&, const Batch<S>&, ForwardCache<S>*);                        \
  template LossResult<S> weighted_l1_loss<S>(const Batch<S>&, const Batch<S>&, const WeightMap&);                 \
  template Gradients<S> backward<S>(const NetworkParams<S>&, const ForwardCache<S>&, const Batch<S>&);             \
  template bool step<S>(NetworkParams<S>&, const Gradients<S>&, const AdamConfig&);                                \
  template Tensor<S> conv2d<S>(const Tensor<S>&, const LayerSpec&, const LayerParams<S>&);                         \
  template Tensor<S> conv_transpose2d<S>(const Tensor<S>&, const LayerSpec&, const LayerParams<S>&);

VARBG_INSTANTIATE(float)
VARBG_INSTANTIATE(double)

#undef VARBG_INSTANTIATE

}  // namespace varbg::ae
