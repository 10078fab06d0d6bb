#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "varbg/autoencoder.hpp"
#include "varbg/types.hpp"

namespace varbg {

/// Most recent frames of a stream, oldest first, FIFO eviction.
class FrameHistory {
 public:
  explicit FrameHistory(std::size_t capacity = 50);

  void push(Frame frame);
  void clear() { frames_.clear(); }

  std::size_t size() const { return frames_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return frames_.empty(); }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }
  const Frame& newest() const { return frames_.back(); }

  auto begin() const { return frames_.begin(); }
  auto end() const { return frames_.end(); }

 private:
  std::size_t capacity_;
  std::deque<Frame> frames_;
};

/// Indices round(j (len-1) / (n-1)), j = 0..n-1, into a history of length
/// len. For n == 1 the newest frame is selected.
std::vector<std::size_t> subset_indices(std::size_t len, std::size_t n);

/// n frames spread uniformly over the history, time-ordered; duplicates
/// appear when the history is shorter than n.
std::vector<Frame> select_subset(const FrameHistory& history, std::size_t n);

/// Per-pixel temporal median; for even counts the lower of the two middle values.
Frame median_background(const FrameHistory& history);

/// Reconstructed backgrounds in the 8-bit domain, all the same size.
using BackgroundBatch = std::vector<Frame>;

/// A generator of "what is normal". update() is called once per frame after
/// the history has received the current frame.
class BackgroundModel {
 public:
  virtual ~BackgroundModel() = default;

  virtual std::string name() const = 0;
  virtual BackgroundBatch update(const FrameHistory& history, const WeightMap& weights) = 0;
  /// Training loss of the last update, when the model trains.
  virtual std::optional<double> last_loss() const { return std::nullopt; }
};

class MedianModel final : public BackgroundModel {
 public:
  std::string name() const override { return "median"; }
  BackgroundBatch update(const FrameHistory& history, const WeightMap& weights) override;

 private:
  std::optional<std::pair<Eigen::Index, Eigen::Index>> dims_;
};

struct AutoencoderSettings {
  int height = 576;
  int width = 704;
  int bottleneck = 2048;
  int channels = 64;
  std::size_t batch = 10;
  std::uint64_t seed = 0;
  ae::AdamConfig adam;
};

/// Incrementally trained convolutional autoencoder. Each update runs one
/// forward pass over a subset of the history, one weighted-L1 backward pass
/// and one Adam step; the reconstructions of that forward pass are returned.
class AutoencoderModel final : public BackgroundModel {
 public:
  explicit AutoencoderModel(const AutoencoderSettings& settings);
  AutoencoderModel(const AutoencoderSettings& settings, ae::NetworkParams<float> params);

  std::string name() const override { return "autoencoder"; }
  BackgroundBatch update(const FrameHistory& history, const WeightMap& weights) override;
  std::optional<double> last_loss() const override { return last_loss_; }

  const ae::NetworkParams<float>& params() const { return params_; }
  /// Updates dropped because of non-finite gradients.
  std::size_t skipped_steps() const { return skipped_steps_; }

 private:
  AutoencoderSettings settings_;
  ae::NetworkParams<float> params_;
  std::optional<double> last_loss_;
  std::size_t skipped_steps_ = 0;
};

/// Creates a model from its configuration token: "autoencoder" or "median".
std::unique_ptr<BackgroundModel> make_model(const std::string& token, const AutoencoderSettings& settings);

}  // namespace varbg
