#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support/fixtures.hpp"
#include "varbg/config.hpp"
#include "varbg/imageio.hpp"
#include "varbg/pipeline.hpp"

using namespace varbg;
namespace fs = std::filesystem;

namespace {

PipelineConfig median_config() {
  PipelineConfig cfg;
  cfg.model = "median";
  cfg.width = 0;
  cfg.height = 0;
  cfg.passes = 1;
  return cfg;
}

PipelineConfig tiny_autoencoder_config() {
  PipelineConfig cfg;
  cfg.width = 32;
  cfg.height = 32;
  cfg.bottleneck = 16;
  cfg.channels = 4;
  cfg.batch = 4;
  cfg.history = 8;
  cfg.learning_rate = 1e-3;
  cfg.seed = 5;
  return cfg;
}

/// Frames of a textured scene with a bright square drifting right.
fs::path write_sequence(const std::string& name, int count, int h = 48, int w = 64, bool with_gt = false) {
  const auto dir = fixture::temp_dir(name);
  fs::create_directories(dir / "input");
  if (with_gt) fs::create_directories(dir / "groundtruth");
  const Frame bg = fixture::textured_background(h, w, 1);
  for (int i = 1; i <= count; ++i) {
    Frame f = bg;
    Frame gt = Frame::Zero(h, w);
    const int x0 = (2 * i) % (w - 12);
    f.block(10, x0, 12, 12).array() += 120;
    gt.block(10, x0, 12, 12).setConstant(255);
    char buf[32];
    std::snprintf(buf, sizeof buf, "in%06d.pgm", i);
    save_pgm(dir / "input" / buf, f);
    if (with_gt) {
      std::snprintf(buf, sizeof buf, "gt%06d.png", i);
      save_png(dir / "groundtruth" / buf, gt);
    }
  }
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_files(const fs::path& dir, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().starts_with(prefix)) ++n;
  return n;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + VARBG_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ProcessFrame, ConstantStreamGivesHardThresholdAndEmptyMask) {
  const PipelineConfig cfg = median_config();
  StreamState state = make_stream_state(cfg, 32, 24);
  const Frame f = Frame::Constant(24, 32, 77);
  for (int i = 0; i < 6; ++i) {
    auto [mask, diag] = process_frame(state, f, cfg);
    EXPECT_EQ(diag.warmup, i == 0);
    EXPECT_FALSE(mask.any());
    if (i == 0) continue;
    EXPECT_EQ(diag.residuals.maxCoeff(), 0);
    EXPECT_EQ(diag.threshold, 25);
    ASSERT_EQ(diag.backgrounds.size(), 1u);
    EXPECT_EQ(diag.backgrounds[0], f);
  }
}

TEST(ProcessFrame, InsertedBlockIsDetected) {
  const PipelineConfig cfg = median_config();
  StreamState state = make_stream_state(cfg, 96, 96);
  const Frame bg = Frame::Constant(96, 96, 80);
  for (int i = 1; i < 60; ++i) process_frame(state, bg, cfg);
  Frame f = bg;
  f.block(30, 20, 40, 40).array() += 120;
  auto [mask, diag] = process_frame(state, f, cfg);
  const auto hit = mask.block(30, 20, 40, 40).count();
  const auto outside = mask.count() - hit;
  EXPECT_GE(hit, static_cast<Eigen::Index>(0.9 * 1600));
  EXPECT_LE(static_cast<double>(outside), 0.005 * (96 * 96 - 1600));
}

TEST(ProcessFrame, TraceOrderAndDimensions) {
  PipelineConfig cfg = tiny_autoencoder_config();
  StreamState state = make_stream_state(cfg, 50, 30);
  const Frame a = fixture::random_frame(30, 50, 1), b = fixture::random_frame(30, 50, 2);
  auto first = process_frame(state, a, cfg);
  EXPECT_TRUE(first.second.warmup);
  EXPECT_EQ(first.second.trace, (std::vector<std::string>{"standardize", "history"}));
  auto [mask, diag] = process_frame(state, b, cfg);
  EXPECT_EQ(diag.trace, (std::vector<std::string>{"standardize", "history", "flow_weights", "model_update", "residual",
                                                  "threshold", "resize_back"}));
  EXPECT_EQ(mask.rows(), 30);
  EXPECT_EQ(mask.cols(), 50);
  EXPECT_EQ(diag.standardized.rows(), 32);
  EXPECT_EQ(diag.backgrounds.size(), 4u);
  EXPECT_TRUE(diag.loss.has_value());
  EXPECT_THROW(process_frame(state, Frame::Zero(30, 51), cfg), std::invalid_argument);
}

TEST(ProcessFrame, HardModeUsesFixedThreshold) {
  PipelineConfig cfg = median_config();
  cfg.threshold_mode = ThresholdMode::hard;
  cfg.threshold.hard_threshold = 9;
  StreamState state = make_stream_state(cfg, 16, 16);
  process_frame(state, fixture::random_frame(16, 16, 1), cfg);
  const auto [mask, diag] = process_frame(state, fixture::random_frame(16, 16, 2), cfg);
  EXPECT_EQ(diag.threshold, 9);
  EXPECT_EQ(mask.cast<int>().matrix(), (diag.residuals >= 9).cast<int>().matrix());
}

TEST(ProcessFrame, GroundTruthModeNeedsTruth) {
  PipelineConfig cfg = median_config();
  cfg.threshold_mode = ThresholdMode::ground_truth;
  StreamState state = make_stream_state(cfg, 16, 16);
  process_frame(state, fixture::random_frame(16, 16, 1), cfg);
  EXPECT_THROW(process_frame(state, fixture::random_frame(16, 16, 2), cfg), std::invalid_argument);
}

TEST(ListFrames, NumericOrderAndErrors) {
  const auto dir = fixture::temp_dir("list_frames");
  for (const char* n : {"in10.pgm", "in2.pgm", "in1.png", "notes.txt"}) std::ofstream(dir / n) << "x";
  const auto files = list_frames(dir);
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[0].number, 1);
  EXPECT_EQ(files[1].number, 2);
  EXPECT_EQ(files[2].number, 10);
  std::ofstream(dir / "in002.pgm") << "x";
  EXPECT_THROW(list_frames(dir), std::runtime_error);
  fs::remove(dir / "in002.pgm");
  std::ofstream(dir / "cover.pgm") << "x";
  EXPECT_THROW(list_frames(dir), std::runtime_error);
  EXPECT_THROW(list_frames(dir / "missing"), std::runtime_error);
}

TEST(Run, OneMaskPerFrame) {
  const auto dir = write_sequence("run_count", 10);
  PipelineConfig cfg = median_config();
  cfg.input = dir / "input";
  cfg.output = dir / "out";
  const RunReport r = run(cfg);
  EXPECT_EQ(r.frames, 10u);
  EXPECT_EQ(count_files(cfg.output, "bin"), 10u);
  EXPECT_EQ(count_lines(cfg.output / "diagnostics.csv"), 11u);
  EXPECT_FALSE(load_frame(cfg.output / "bin000001.pgm").any());
}

TEST(Run, GroundTruthProducesOneRowPerScoredFrame) {
  const auto dir = write_sequence("run_gt", 12, 48, 64, true);
  PipelineConfig cfg = median_config();
  cfg.input = dir / "input";
  cfg.ground_truth = dir / "groundtruth";
  cfg.output = dir / "out";
  cfg.category = "synthetic";
  const RunReport r = run(cfg);
  EXPECT_EQ(r.scored_frames, 12u);
  EXPECT_EQ(count_lines(cfg.output / "metrics.csv"), 13u);
  ASSERT_TRUE(r.evaluation.has_value());
  EXPECT_EQ(r.evaluation->categories[0].category, "synthetic");
  EXPECT_EQ(r.evaluation->categories[0].videos[0].video, "varbg_test_run_gt");
  EXPECT_TRUE(fs::exists(cfg.output / "summary.csv"));
}

TEST(Run, DumpsAreWritten) {
  const auto dir = write_sequence("run_dumps", 4);
  PipelineConfig cfg = median_config();
  cfg.input = dir / "input";
  cfg.output = dir / "out";
  cfg.dump_backgrounds = cfg.dump_residuals = cfg.dump_histograms = cfg.dump_weights = true;
  run(cfg);
  EXPECT_EQ(count_files(cfg.output / "backgrounds", "bg"), 3u);
  EXPECT_EQ(count_files(cfg.output / "residuals", "res"), 3u);
  EXPECT_EQ(count_files(cfg.output / "histograms", "thresholds"), 3u);
  EXPECT_EQ(count_files(cfg.output / "histograms", "residuals"), 3u);
  EXPECT_EQ(count_files(cfg.output / "weights", "w"), 3u);
}

TEST(Run, IdenticalSeedsGiveIdenticalOutputs) {
  const auto dir = write_sequence("run_determinism", 8, 32, 48, true);
  PipelineConfig cfg = tiny_autoencoder_config();
  cfg.passes = 2;
  cfg.input = dir / "input";
  cfg.ground_truth = dir / "groundtruth";
  for (const char* out : {"a", "b"}) {
    cfg.output = dir / out;
    run(cfg);
  }
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    const auto other = dir / "b" / e.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path().filename();
    ++compared;
  }
  EXPECT_EQ(compared, 8u + 3u);  // masks, diagnostics, metrics, summary
}

TEST(Run, LaterPassesStartFromLowerLoss) {
  const auto dir = write_sequence("run_passes", 12, 32, 32);
  PipelineConfig cfg = tiny_autoencoder_config();
  cfg.passes = 3;
  cfg.input = dir / "input";
  cfg.output = dir / "out";
  const RunReport r = run(cfg);
  ASSERT_EQ(r.pass_start_loss.size(), 3u);
  ASSERT_TRUE(r.pass_start_loss[0] && r.pass_start_loss[2]);
  EXPECT_LE(*r.pass_start_loss[2], *r.pass_start_loss[0]);
  EXPECT_EQ(count_files(cfg.output, "bin"), 12u);
}

TEST(Run, CheckpointRoundTrip) {
  const auto dir = write_sequence("run_ckpt", 5, 32, 32);
  PipelineConfig cfg = tiny_autoencoder_config();
  cfg.passes = 1;
  cfg.input = dir / "input";
  cfg.output = dir / "out1";
  cfg.checkpoint_out = dir / "model.bin";
  run(cfg);
  ASSERT_TRUE(fs::exists(cfg.checkpoint_out));
  cfg.checkpoint_in = cfg.checkpoint_out;
  cfg.checkpoint_out.clear();
  cfg.output = dir / "out2";
  EXPECT_NO_THROW(run(cfg));
}

TEST(Config, ParsesFileWithComments) {
  const auto dir = fixture::temp_dir("config");
  std::ofstream(dir / "c.cfg") << "# comment\ninput = /data/in\nout=/data/out\nmodel = median\n\n"
                                  "threshold = hard\nhard_threshold = 30\nnoise_rate = 0.01\ndump_histograms = true\n";
  const PipelineConfig cfg = load_config(dir / "c.cfg");
  EXPECT_EQ(cfg.input, fs::path("/data/in"));
  EXPECT_EQ(cfg.output, fs::path("/data/out"));
  EXPECT_EQ(cfg.model, "median");
  EXPECT_EQ(cfg.threshold_mode, ThresholdMode::hard);
  EXPECT_EQ(cfg.threshold.hard_threshold, 30);
  EXPECT_DOUBLE_EQ(cfg.threshold.noise_rate, 0.01);
  EXPECT_TRUE(cfg.dump_histograms);
  EXPECT_EQ(cfg.passes, 3);
  EXPECT_EQ(cfg.width, 704);
}

TEST(Config, RejectsBadSettings) {
  PipelineConfig cfg;
  EXPECT_THROW(apply_setting(cfg, "colour", "1"), std::invalid_argument);
  EXPECT_THROW(apply_setting(cfg, "passes", "three"), std::invalid_argument);
  EXPECT_THROW(apply_setting(cfg, "threshold", "maybe"), std::invalid_argument);
  EXPECT_THROW(apply_setting(cfg, "dump_weights", "sure"), std::invalid_argument);
  const auto dir = fixture::temp_dir("config_bad");
  std::ofstream(dir / "c.cfg") << "input /data\n";
  EXPECT_THROW(load_config(dir / "c.cfg"), std::invalid_argument);
}

TEST(Config, Validation) {
  PipelineConfig cfg = median_config();
  EXPECT_THROW(cfg.validate(), std::invalid_argument);  // no input
  cfg.input = "in";
  cfg.output = "out";
  EXPECT_NO_THROW(cfg.validate());
  cfg.vicinity = 4;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = tiny_autoencoder_config();
  cfg.input = "in";
  cfg.output = "out";
  cfg.width = 40;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.width = 32;
  cfg.threshold_mode = ThresholdMode::ground_truth;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Cli, ExitCodes) {
  const auto dir = write_sequence("cli", 4);
  std::ofstream(dir / "run.cfg") << "model = median\nwidth = 0\nheight = 0\npasses = 1\n";
  const std::string base = "run --config \"" + (dir / "run.cfg").string() + "\" --input \"" +
                           (dir / "input").string() + "\" --out \"" + (dir / "out").string() + "\"";
  EXPECT_EQ(run_cli(base), 0);
  EXPECT_EQ(count_files(dir / "out", "bin"), 4u);
  EXPECT_EQ(run_cli(base + " --threshold hard --dump-histograms"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "histograms"));
  EXPECT_NE(run_cli(base + " --threshold maybe"), 0);
  EXPECT_NE(run_cli("run --input \"" + (dir / "nowhere").string() + "\" --out \"" + (dir / "o").string() + "\""), 0);
  EXPECT_NE(run_cli(""), 0);
}
