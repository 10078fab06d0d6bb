#include <exception>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "varbg/config.hpp"
#include "varbg/pipeline.hpp"

namespace {

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

void print_report(const varbg::RunReport& report) {
  std::cout << "frames: " << report.frames << "\n"
            << "passes: " << report.passes << "\n"
            << "mean threshold: " << report.mean_threshold << "\n";
  for (std::size_t p = 0; p < report.pass_start_loss.size(); ++p) {
    if (report.pass_start_loss[p]) std::cout << "pass " << p + 1 << " start loss: " << *report.pass_start_loss[p] << "\n";
  }
  if (report.evaluation) {
    const auto& m = report.evaluation->overall;
    std::cout << "scored frames: " << report.scored_frames << "\n"
              << "recall " << m.recall << " specificity " << m.specificity << " fpr " << m.fpr << " fnr " << m.fnr
              << " precision " << m.precision << " f1 " << m.f1 << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming background subtraction with value-at-risk thresholding"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Process a directory of frames and write foreground masks");
  std::string config_path;
  run->add_option("--config", config_path, "Flat 'key = value' configuration file")->check(CLI::ExistingFile);

  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  for (const auto& key : varbg::config_keys()) {
    if (varbg::is_flag_key(key)) {
      flags[key] = false;
      run->add_flag("--" + dashed(key), flags[key], "Enable " + key);
    } else {
      values[key];
      std::string name = "--" + dashed(key);
      if (key == "threshold") name += ",--threshold-mode";
      run->add_option(name, values[key], "Overrides '" + key + "'");
    }
  }

  CLI11_PARSE(app, argc, argv);

  try {
    varbg::PipelineConfig cfg = config_path.empty() ? varbg::PipelineConfig{} : varbg::load_config(config_path);
    for (const auto& [key, value] : values) {
      if (run->count("--" + dashed(key)) > 0) varbg::apply_setting(cfg, key, value);
    }
    for (const auto& [key, on] : flags) {
      if (on) varbg::apply_setting(cfg, key, "true");
    }
    print_report(varbg::run(cfg));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
