#include "varbg/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <stdexcept>

#include "varbg/checkpoint.hpp"
#include "varbg/imageio.hpp"
#include "varbg/residual.hpp"
#include "varbg/threshold.hpp"

namespace varbg {

namespace fs = std::filesystem;

void StreamState::reset_history() {
  history.clear();
  previous.reset();
}

StreamState make_stream_state(const PipelineConfig& cfg, int native_width, int native_height) {
  const int width = cfg.width > 0 ? cfg.width : native_width;
  const int height = cfg.height > 0 ? cfg.height : native_height;
  AutoencoderSettings s;
  s.width = width;
  s.height = height;
  s.bottleneck = cfg.bottleneck;
  s.channels = cfg.channels;
  s.batch = cfg.batch;
  s.seed = cfg.seed;
  s.adam.learning_rate = cfg.learning_rate;

  StreamState state{FrameHistory(cfg.history), nullptr, std::make_unique<BlockMatchingFlow>(cfg.flow), {}, {}, 0, 0};
  if (cfg.model == "autoencoder" && !cfg.checkpoint_in.empty()) {
    state.model = std::make_unique<AutoencoderModel>(s, ae::load_checkpoint<float>(cfg.checkpoint_in));
  } else {
    state.model = make_model(cfg.model, s);
  }
  return state;
}

namespace {

GroundTruth resize_truth(const GroundTruth& gt, int width, int height) {
  return {resize(gt.foreground, width, height), resize(gt.ignore, width, height)};
}

}  // namespace

std::pair<BinaryMask, Diagnostics> process_frame(StreamState& state, const Frame& frame, const PipelineConfig& cfg,
                                                 const GroundTruth* gt) {
  if (frame.size() == 0) throw std::invalid_argument("process_frame: empty frame");
  const std::pair dims{frame.rows(), frame.cols()};
  if (state.input_dims && *state.input_dims != dims) throw std::invalid_argument("process_frame: frame size changed mid-stream");
  state.input_dims = dims;
  ++state.frame_counter;

  Diagnostics diag;
  const int width = cfg.width > 0 ? cfg.width : static_cast<int>(frame.cols());
  const int height = cfg.height > 0 ? cfg.height : static_cast<int>(frame.rows());
  diag.standardized = resize(frame, width, height, ResizeMode::bilinear);
  diag.trace.emplace_back("standardize");

  state.history.push(diag.standardized);
  diag.trace.emplace_back("history");

  if (!state.previous) {
    state.previous = diag.standardized;
    diag.warmup = true;
    return {BinaryMask::Zero(frame.rows(), frame.cols()), std::move(diag)};
  }

  diag.weights = weights_from_flow(state.flow->estimate(*state.previous, diag.standardized));
  diag.trace.emplace_back("flow_weights");

  diag.backgrounds = state.model->update(state.history, diag.weights);
  diag.loss = state.model->last_loss();
  diag.trace.emplace_back("model_update");

  diag.residuals = residual_map(diag.standardized, diag.backgrounds, cfg.vicinity);
  diag.trace.emplace_back("residual");

  diag.threshold_histogram = histogram_of_thresholds(diag.residuals);
  diag.residual_histogram = residual_histogram(diag.residuals);
  switch (cfg.threshold_mode) {
    case ThresholdMode::automatic:
      diag.threshold = var_threshold(diag.residuals, diag.threshold_histogram, cfg.threshold);
      break;
    case ThresholdMode::hard: diag.threshold = cfg.threshold.hard_threshold; break;
    case ThresholdMode::ground_truth: {
      if (!gt) throw std::invalid_argument("process_frame: threshold mode gt needs a ground-truth frame");
      const GroundTruth std_gt = resize_truth(*gt, width, height);
      diag.threshold = gt_threshold(diag.residuals, std_gt.foreground, std_gt.ignore);
      break;
    }
  }
  diag.alpha = alpha_of_threshold(diag.residual_histogram, diag.threshold);
  // alpha = 0 means every residual is at or above t; CVaR then is the mean.
  diag.cvar = conditional_value_at_risk(diag.residual_histogram, std::max(diag.alpha, 1e-12));
  const BinaryMask mask = apply_threshold(diag.residuals, diag.threshold);
  diag.trace.emplace_back("threshold");

  BinaryMask out = resize(mask, static_cast<int>(frame.cols()), static_cast<int>(frame.rows()));
  diag.trace.emplace_back("resize_back");

  state.previous = diag.standardized;
  return {std::move(out), std::move(diag)};
}

std::vector<NumberedFile> list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + ": not a directory");
  std::vector<NumberedFile> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".pgm" && ext != ".png") continue;
    const std::string stem = entry.path().stem().string();
    const auto digits = stem.find_last_not_of("0123456789");
    const std::size_t start = digits == std::string::npos ? 0 : digits + 1;
    if (start >= stem.size() || stem.size() - start > 9) {
      throw std::runtime_error(entry.path().string() + ": frame name has no numeric suffix");
    }
    files.push_back({std::stoi(stem.substr(start)), entry.path()});
  }
  std::sort(files.begin(), files.end(), [](const NumberedFile& a, const NumberedFile& b) {
    return a.number != b.number ? a.number < b.number : a.path < b.path;
  });
  for (std::size_t i = 1; i < files.size(); ++i) {
    if (files[i].number == files[i - 1].number) {
      throw std::runtime_error(files[i].path.string() + ": duplicate frame number " + std::to_string(files[i].number));
    }
  }
  return files;
}

namespace {

std::string numbered(const char* prefix, int number, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%06d%s", prefix, number, ext);
  return buf;
}

// cdnet layout: <category>/<video>/input; otherwise the directory name.
std::string video_name(const fs::path& input) {
  fs::path dir = fs::absolute(input).lexically_normal();
  if (dir.filename().empty()) dir = dir.parent_path();
  if (dir.filename() == "input" && !dir.parent_path().filename().empty()) return dir.parent_path().filename().string();
  return dir.filename().string();
}

}  // namespace

RunReport run(const PipelineConfig& cfg) {
  cfg.validate();
  const auto frames = list_frames(cfg.input);
  if (frames.empty()) throw std::runtime_error(cfg.input.string() + ": no input frames");
  if (frames.size() < 2) throw std::runtime_error(cfg.input.string() + ": need at least 2 frames");

  std::map<int, fs::path> truth;
  if (!cfg.ground_truth.empty()) {
    for (const auto& f : list_frames(cfg.ground_truth)) truth[f.number] = f.path;
  }
  const LabelPolicy policy = cfg.labels.empty() ? LabelPolicy::cdnet() : LabelPolicy::parse(cfg.labels);
  const std::string video = cfg.video.empty() ? video_name(cfg.input) : cfg.video;

  fs::create_directories(cfg.output);
  if (cfg.dump_backgrounds) fs::create_directories(cfg.output / "backgrounds");
  if (cfg.dump_residuals) fs::create_directories(cfg.output / "residuals");
  if (cfg.dump_histograms) fs::create_directories(cfg.output / "histograms");
  if (cfg.dump_weights) fs::create_directories(cfg.output / "weights");

  const Frame first = load_frame(frames.front().path);
  StreamState state = make_stream_state(cfg, static_cast<int>(first.cols()), static_cast<int>(first.rows()));

  RunReport report;
  report.passes = cfg.passes;
  std::vector<FrameScore> scores;
  std::ofstream diag_csv(cfg.output / "diagnostics.csv");
  if (!diag_csv) throw std::runtime_error((cfg.output / "diagnostics.csv").string() + ": cannot open for writing");
  diag_csv << std::setprecision(10) << "frame,threshold,alpha,cvar,loss\n";
  double threshold_sum = 0.0;
  std::size_t threshold_count = 0;

  for (int pass = 1; pass <= cfg.passes; ++pass) {
    const bool final_pass = pass == cfg.passes;
    state.pass = pass;
    state.reset_history();
    std::optional<double> start_loss;
    for (const auto& file : frames) {
      const Frame frame = load_frame(file.path);
      std::optional<GroundTruth> gt;
      const auto gt_it = truth.find(file.number);
      if (!truth.empty() && gt_it != truth.end() && (final_pass || cfg.threshold_mode == ThresholdMode::ground_truth)) {
        gt = split_labels(load_frame(gt_it->second), policy);
      }
      if (cfg.threshold_mode == ThresholdMode::ground_truth && !gt) {
        throw std::runtime_error(file.path.string() + ": no ground-truth frame for threshold mode gt");
      }
      auto [mask, diag] = process_frame(state, frame, cfg, gt ? &*gt : nullptr);
      if (!start_loss && diag.loss) start_loss = diag.loss;
      if (!final_pass) continue;

      ++report.frames;
      save_mask(cfg.output / numbered("bin", file.number, ".pgm"), mask);
      diag_csv << file.number << ',';
      if (diag.warmup) {
        diag_csv << ",,,";
      } else {
        threshold_sum += diag.threshold;
        ++threshold_count;
        diag_csv << diag.threshold << ',' << diag.alpha << ',' << diag.cvar << ',';
      }
      if (diag.loss) diag_csv << *diag.loss;
      diag_csv << '\n';

      if (!diag.warmup) {
        if (cfg.dump_backgrounds) {
          for (std::size_t c = 0; c < diag.backgrounds.size(); ++c) {
            save_pgm(cfg.output / "backgrounds" / (numbered("bg", file.number, "") + "_" + std::to_string(c) + ".pgm"),
                     diag.backgrounds[c]);
          }
        }
        if (cfg.dump_residuals) save_residual_map(cfg.output / "residuals" / numbered("res", file.number, ".pgm"), diag.residuals);
        if (cfg.dump_histograms) {
          save_histogram_csv(cfg.output / "histograms" / numbered("thresholds", file.number, ".csv"), diag.threshold_histogram);
          save_histogram_csv(cfg.output / "histograms" / numbered("residuals", file.number, ".csv"), diag.residual_histogram);
        }
        if (cfg.dump_weights) save_weight_map(cfg.output / "weights" / numbered("w", file.number, ".pgm"), diag.weights);
      }
      if (gt) {
        if (cfg.skip_empty_masks && !mask.any()) continue;
        scores.push_back({cfg.category, video, file.number, confusion(mask, *gt)});
      }
    }
    report.pass_start_loss.push_back(start_loss);
  }

  report.mean_threshold = threshold_count ? threshold_sum / static_cast<double>(threshold_count) : 0.0;
  report.scored_frames = scores.size();
  if (!cfg.ground_truth.empty()) {
    write_metrics_csv(cfg.output / "metrics.csv", scores);
    if (!scores.empty()) {
      report.evaluation = aggregate(scores);
      write_summary_csv(cfg.output / "summary.csv", *report.evaluation);
    }
  }
  if (!cfg.checkpoint_out.empty()) {
    const auto* ae_model = dynamic_cast<const AutoencoderModel*>(state.model.get());
    if (!ae_model) throw std::runtime_error("checkpoint_out is only supported for the autoencoder model");
    ae::save_checkpoint(cfg.checkpoint_out, ae_model->params());
  }
  return report;
}

}  // namespace varbg
