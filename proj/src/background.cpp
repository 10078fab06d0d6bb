#include "varbg/background.hpp"

#include <algorithm>
#include <stdexcept>

#include "varbg/imageio.hpp"

namespace varbg {

FrameHistory::FrameHistory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("FrameHistory: capacity must be >= 1");
}

void FrameHistory::push(Frame frame) {
  if (!frames_.empty() && (frame.rows() != frames_.front().rows() || frame.cols() != frames_.front().cols())) {
    throw std::invalid_argument("FrameHistory: frame size changed mid-stream");
  }
  if (frames_.size() == capacity_) frames_.pop_front();
  frames_.push_back(std::move(frame));
}

std::vector<std::size_t> subset_indices(std::size_t len, std::size_t n) {
  if (len == 0) throw std::invalid_argument("select_subset: empty history");
  if (n == 0) throw std::invalid_argument("select_subset: n must be >= 1");
  if (n == 1) return {len - 1};
  std::vector<std::size_t> idx(n);
  // Integer round-half-up of j (len-1) / (n-1).
  for (std::size_t j = 0; j < n; ++j) idx[j] = (2 * j * (len - 1) + (n - 1)) / (2 * (n - 1));
  return idx;
}

std::vector<Frame> select_subset(const FrameHistory& history, std::size_t n) {
  std::vector<Frame> out;
  for (std::size_t i : subset_indices(history.size(), n)) out.push_back(history[i]);
  return out;
}

Frame median_background(const FrameHistory& history) {
  if (history.empty()) throw std::invalid_argument("median_background: empty history");
  const Frame& first = history[0];
  const std::size_t count = history.size();
  const std::size_t mid = (count - 1) / 2;
  Frame out(first.rows(), first.cols());
  std::vector<std::uint8_t> values(count);
  for (Eigen::Index i = 0; i < first.size(); ++i) {
    for (std::size_t k = 0; k < count; ++k) values[k] = history[k].data()[i];
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    out.data()[i] = values[mid];
  }
  return out;
}

BackgroundBatch MedianModel::update(const FrameHistory& history, const WeightMap&) {
  if (history.empty()) throw std::invalid_argument("MedianModel: empty history");
  const std::pair dims{history.newest().rows(), history.newest().cols()};
  if (dims_ && *dims_ != dims) throw std::invalid_argument("MedianModel: frame size changed mid-stream");
  dims_ = dims;
  return {median_background(history)};
}

AutoencoderModel::AutoencoderModel(const AutoencoderSettings& settings)
    : AutoencoderModel(settings, ae::xavier_init<float>(ae::build_network(settings.height, settings.width,
                                                                          settings.bottleneck, settings.channels),
                                                        settings.seed)) {}

AutoencoderModel::AutoencoderModel(const AutoencoderSettings& settings, ae::NetworkParams<float> params)
    : settings_(settings), params_(std::move(params)) {
  const auto in = params_.input_shape();
  if (in.channels != 1 || in.height != settings_.height || in.width != settings_.width) {
    throw std::invalid_argument("AutoencoderModel: network input does not match the standard frame size");
  }
  if (settings_.batch == 0) throw std::invalid_argument("AutoencoderModel: batch must be >= 1");
}

BackgroundBatch AutoencoderModel::update(const FrameHistory& history, const WeightMap& weights) {
  if (history.empty()) throw std::invalid_argument("AutoencoderModel: empty history");
  const Frame& newest = history.newest();
  if (newest.rows() != settings_.height || newest.cols() != settings_.width) {
    throw std::invalid_argument("AutoencoderModel: frame size does not match the network");
  }
  ae::Batch<float> input;
  for (const Frame& f : select_subset(history, settings_.batch)) {
    const NormTensor<float> t = normalize<float>(f);
    input.emplace_back(Eigen::Map<const ae::Tensor<float>>(t.data(), 1, t.size()));
  }
  ae::ForwardCache<float> cache;
  const ae::Batch<float> recon = ae::forward(params_, input, &cache);
  const auto loss = ae::weighted_l1_loss(input, recon, weights);
  const auto grads = ae::backward(params_, cache, loss.grad);
  last_loss_ = loss.loss;
  if (!ae::step(params_, grads, settings_.adam)) ++skipped_steps_;

  BackgroundBatch out;
  out.reserve(recon.size());
  for (const auto& r : recon) {
    out.push_back(denormalize(Eigen::Map<const NormTensor<float>>(r.data(), settings_.height, settings_.width)));
  }
  return out;
}

std::unique_ptr<BackgroundModel> make_model(const std::string& token, const AutoencoderSettings& settings) {
  if (token == "median") return std::make_unique<MedianModel>();
  if (token == "autoencoder") return std::make_unique<AutoencoderModel>(settings);
  throw std::invalid_argument("unknown model '" + token + "' (expected autoencoder or median)");
}

}  // namespace varbg
