#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "varbg/flow.hpp"
#include "varbg/threshold.hpp"

namespace varbg {

enum class ThresholdMode { automatic, hard, ground_truth };

struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path ground_truth;  ///< empty: no scoring
  std::filesystem::path output;
  std::string model = "autoencoder";
  int width = 704;   ///< standard width; 0 keeps the native frame size
  int height = 576;  ///< standard height; 0 keeps the native frame size
  std::size_t history = 50;
  std::size_t batch = 10;
  int vicinity = 3;
  ThresholdConfig threshold;
  ThresholdMode threshold_mode = ThresholdMode::automatic;
  int passes = 3;
  std::uint64_t seed = 0;
  double learning_rate = 1e-4;
  int bottleneck = 2048;
  int channels = 64;
  FlowConfig flow;
  bool dump_backgrounds = false;
  bool dump_residuals = false;
  bool dump_histograms = false;
  bool dump_weights = false;
  std::filesystem::path checkpoint_in;
  std::filesystem::path checkpoint_out;
  std::string category = "default";
  std::string video;   ///< empty: name of the input directory
  std::string labels;  ///< label policy overrides, see LabelPolicy::parse
  bool skip_empty_masks = false;

  /// Throws std::invalid_argument naming the offending setting.
  void validate() const;
};

/// Every key accepted by apply_setting, in documentation order.
const std::vector<std::string>& config_keys();

/// Keys whose value is a boolean flag.
bool is_flag_key(const std::string& key);

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// Parses a flat UTF-8 "key = value" file; '#' starts a comment line.
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path);

PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace varbg
