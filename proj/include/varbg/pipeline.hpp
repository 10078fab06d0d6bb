#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "varbg/background.hpp"
#include "varbg/config.hpp"
#include "varbg/evaluation.hpp"
#include "varbg/flow.hpp"

namespace varbg {

/// Persistent state of one stream across frames and passes.
struct StreamState {
  FrameHistory history;
  std::unique_ptr<BackgroundModel> model;
  std::unique_ptr<FlowProvider> flow;
  std::optional<Frame> previous;  ///< previous standardised frame
  std::optional<std::pair<Eigen::Index, Eigen::Index>> input_dims;
  std::int64_t frame_counter = 0;
  int pass = 0;

  /// Forgets frame history at a pass boundary; model weights are kept.
  void reset_history();
};

/// Builds the model for frames of native size native_width x native_height
/// (used when the configured standard size is 0).
StreamState make_stream_state(const PipelineConfig& cfg, int native_width, int native_height);

/// What process_frame did, in order, plus the values it chose.
struct Diagnostics {
  bool warmup = false;  ///< no flow pair yet: mask is all background
  int threshold = -1;
  double alpha = 0.0;
  double cvar = 0.0;
  std::optional<double> loss;
  std::vector<std::string> trace;

  Frame standardized;
  WeightMap weights;
  BackgroundBatch backgrounds;
  ResidualMap residuals;
  Histogram threshold_histogram = Histogram::Zero();
  Histogram residual_histogram = Histogram::Zero();
};

/// One incremental step: standardise, update history, flow weights, model
/// update and reconstruction, residuals, threshold, mask at the input size.
/// `gt` (input resolution) is required when the threshold mode is gt.
std::pair<BinaryMask, Diagnostics> process_frame(StreamState& state, const Frame& frame, const PipelineConfig& cfg,
                                                 const GroundTruth* gt = nullptr);

struct NumberedFile {
  int number;
  std::filesystem::path path;
};

/// Image files (.pgm/.png) of a directory ordered by the numeric suffix of
/// their stems. Names without one are rejected.
std::vector<NumberedFile> list_frames(const std::filesystem::path& dir);

struct RunReport {
  std::size_t frames = 0;  ///< frames in the final pass
  int passes = 0;
  double mean_threshold = 0.0;  ///< over non-warm-up frames of the final pass
  std::vector<std::optional<double>> pass_start_loss;
  std::size_t scored_frames = 0;
  std::optional<EvaluationReport> evaluation;
};

/// Processes the whole input directory `passes` times; only the final pass
/// writes masks, dumps and scores.
RunReport run(const PipelineConfig& cfg);

}  // namespace varbg
