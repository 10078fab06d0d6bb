#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "varbg/types.hpp"

namespace varbg {

enum class LabelClass : std::uint8_t { unknown, background, foreground, ignored };

/// Maps ground-truth label values to classes. The default follows cdnet:
/// 255 foreground, 0 and 50 (shadow) background, 85 (outside ROI) and 170
/// (unknown motion) ignored; every other value is rejected.
class LabelPolicy {
 public:
  LabelPolicy();

  static LabelPolicy cdnet() { return {}; }
  /// Parses "value:class,value:class,..." with class in {fg, bg, ignore};
  /// entries override the cdnet defaults.
  static LabelPolicy parse(const std::string& spec);

  void set(std::uint8_t value, LabelClass cls) { classes_[value] = cls; }
  LabelClass classify(std::uint8_t value) const { return classes_[value]; }

 private:
  std::array<LabelClass, 256> classes_{};
};

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

struct MetricsRecord {
  double recall = 0;
  double specificity = 0;
  double fpr = 0;
  double fnr = 0;
  double precision = 0;
  double f1 = 0;
};

/// Splits a labelled ground-truth frame into foreground and ignore masks.
struct GroundTruth {
  BinaryMask foreground;
  BinaryMask ignore;
};
GroundTruth split_labels(const Frame& labels, const LabelPolicy& policy = {});

/// Threshold in [0, 255] minimising the mismatch between (r >= t) and the
/// foreground mask over non-ignored pixels; ties go to the smallest t.
int gt_threshold(const ResidualMap& rmap, const BinaryMask& gt, const BinaryMask& ignore);

ConfusionCounts confusion(const BinaryMask& pred, const Frame& labels, const LabelPolicy& policy = {});
ConfusionCounts confusion(const BinaryMask& pred, const GroundTruth& gt);

/// Recall, specificity, error rates, precision and F1; any 0/0 ratio is reported as 0.
MetricsRecord metrics(const ConfusionCounts& c);

struct FrameScore {
  std::string category;
  std::string video;
  int frame = 0;
  ConfusionCounts counts;
};

struct VideoReport {
  std::string category;
  std::string video;
  ConfusionCounts counts;
  MetricsRecord metrics;  ///< from the pooled counts of the video
};

struct CategoryReport {
  std::string category;
  std::vector<VideoReport> videos;
  MetricsRecord metrics;  ///< unweighted mean over videos
};

struct EvaluationReport {
  std::vector<CategoryReport> categories;
  MetricsRecord overall;  ///< unweighted mean over categories
};

/// Pools counts per video, averages video metrics per category and category
/// metrics overall.
EvaluationReport aggregate(const std::vector<FrameScore>& scores);

/// Per-frame CSV: category,video,first_frame,last_frame, six metrics, raw counts.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<FrameScore>& scores);

/// Summary CSV: one row per video, per category ("*" video) and overall.
void write_summary_csv(const std::filesystem::path& path, const EvaluationReport& report);

}  // namespace varbg
