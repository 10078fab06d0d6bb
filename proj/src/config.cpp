#include "varbg/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>

namespace varbg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  throw std::invalid_argument("config: " + key + " = '" + value + "': " + why);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "not a valid number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "expected true or false");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "input",          "gt",            "out",          "model",           "width",
      "height",         "history",       "batch",        "vicinity",        "noise_rate",
      "hard_threshold", "scan_halfwidth", "threshold",   "passes",          "seed",
      "learning_rate",  "bottleneck",    "channels",     "flow_block",      "flow_stride",
      "flow_radius",    "dump_backgrounds", "dump_residuals", "dump_histograms", "dump_weights",
      "checkpoint_in",  "checkpoint_out", "category",    "video",           "labels",
      "skip_empty_masks"};
  return keys;
}

bool is_flag_key(const std::string& key) {
  return key.starts_with("dump_") || key == "skip_empty_masks";
}

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "input") cfg.input = value;
  else if (key == "gt") cfg.ground_truth = value;
  else if (key == "out") cfg.output = value;
  else if (key == "model") cfg.model = value;
  else if (key == "width") cfg.width = parse_number<int>(key, value);
  else if (key == "height") cfg.height = parse_number<int>(key, value);
  else if (key == "history") cfg.history = parse_number<std::size_t>(key, value);
  else if (key == "batch") cfg.batch = parse_number<std::size_t>(key, value);
  else if (key == "vicinity") cfg.vicinity = parse_number<int>(key, value);
  else if (key == "noise_rate") cfg.threshold.noise_rate = parse_number<double>(key, value);
  else if (key == "hard_threshold") cfg.threshold.hard_threshold = parse_number<int>(key, value);
  else if (key == "scan_halfwidth") cfg.threshold.scan_halfwidth = parse_number<int>(key, value);
  else if (key == "threshold") {
    if (value == "auto") cfg.threshold_mode = ThresholdMode::automatic;
    else if (value == "hard") cfg.threshold_mode = ThresholdMode::hard;
    else if (value == "gt") cfg.threshold_mode = ThresholdMode::ground_truth;
    else bad_value(key, value, "expected auto, hard or gt");
  }
  else if (key == "passes") cfg.passes = parse_number<int>(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "learning_rate") cfg.learning_rate = parse_number<double>(key, value);
  else if (key == "bottleneck") cfg.bottleneck = parse_number<int>(key, value);
  else if (key == "channels") cfg.channels = parse_number<int>(key, value);
  else if (key == "flow_block") cfg.flow.block_size = parse_number<int>(key, value);
  else if (key == "flow_stride") cfg.flow.block_stride = parse_number<int>(key, value);
  else if (key == "flow_radius") cfg.flow.search_radius = parse_number<int>(key, value);
  else if (key == "dump_backgrounds") cfg.dump_backgrounds = parse_bool(key, value);
  else if (key == "dump_residuals") cfg.dump_residuals = parse_bool(key, value);
  else if (key == "dump_histograms") cfg.dump_histograms = parse_bool(key, value);
  else if (key == "dump_weights") cfg.dump_weights = parse_bool(key, value);
  else if (key == "checkpoint_in") cfg.checkpoint_in = value;
  else if (key == "checkpoint_out") cfg.checkpoint_out = value;
  else if (key == "category") cfg.category = value;
  else if (key == "video") cfg.video = value;
  else if (key == "labels") cfg.labels = value;
  else if (key == "skip_empty_masks") cfg.skip_empty_masks = parse_bool(key, value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

void PipelineConfig::validate() const {
  if (input.empty()) throw std::invalid_argument("config: input directory is required");
  if (output.empty()) throw std::invalid_argument("config: output directory is required");
  if (model != "autoencoder" && model != "median") throw std::invalid_argument("config: model must be autoencoder or median");
  if (width < 0 || height < 0 || (width == 0) != (height == 0)) {
    throw std::invalid_argument("config: width and height must both be positive, or both 0 for the native size");
  }
  if (model == "autoencoder" && (width % 16 != 0 || height % 16 != 0)) {
    throw std::invalid_argument("config: the autoencoder needs width and height divisible by 16");
  }
  if (passes < 1) throw std::invalid_argument("config: passes must be >= 1");
  if (batch < 1 || history < batch) throw std::invalid_argument("config: need history >= batch >= 1");
  if (vicinity != 1 && vicinity != 3 && vicinity != 5) throw std::invalid_argument("config: vicinity must be 1, 3 or 5");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning_rate must be positive");
  if (bottleneck < 1 || channels < 1) throw std::invalid_argument("config: bottleneck and channels must be >= 1");
  if (threshold_mode == ThresholdMode::ground_truth && ground_truth.empty()) {
    throw std::invalid_argument("config: threshold = gt requires a ground-truth directory");
  }
  threshold.validate();
}

std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open config file");
  std::map<std::string, std::string> entries;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    entries[trim(text.substr(0, eq))] = trim(text.substr(eq + 1));
  }
  return entries;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  PipelineConfig cfg;
  for (const auto& [key, value] : parse_config_file(path)) apply_setting(cfg, key, value);
  return cfg;
}

}  // namespace varbg
