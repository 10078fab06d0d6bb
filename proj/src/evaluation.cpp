#include "varbg/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace varbg {

LabelPolicy::LabelPolicy() {
  classes_.fill(LabelClass::unknown);
  classes_[0] = LabelClass::background;
  classes_[50] = LabelClass::background;
  classes_[85] = LabelClass::ignored;
  classes_[170] = LabelClass::ignored;
  classes_[255] = LabelClass::foreground;
}

LabelPolicy LabelPolicy::parse(const std::string& spec) {
  LabelPolicy policy;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("label policy: expected value:class, got '" + item + "'");
    const int value = std::stoi(item.substr(0, colon));
    std::string cls = item.substr(colon + 1);
    cls.erase(0, cls.find_first_not_of(" \t"));
    cls.erase(cls.find_last_not_of(" \t") + 1);
    if (value < 0 || value > 255) throw std::invalid_argument("label policy: value out of range in '" + item + "'");
    if (cls == "fg") policy.set(static_cast<std::uint8_t>(value), LabelClass::foreground);
    else if (cls == "bg") policy.set(static_cast<std::uint8_t>(value), LabelClass::background);
    else if (cls == "ignore") policy.set(static_cast<std::uint8_t>(value), LabelClass::ignored);
    else throw std::invalid_argument("label policy: unknown class '" + cls + "'");
  }
  return policy;
}

GroundTruth split_labels(const Frame& labels, const LabelPolicy& policy) {
  GroundTruth gt{BinaryMask(labels.rows(), labels.cols()), BinaryMask(labels.rows(), labels.cols())};
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const LabelClass cls = policy.classify(labels.data()[i]);
    if (cls == LabelClass::unknown) {
      throw std::invalid_argument("ground truth: unknown label value " + std::to_string(labels.data()[i]));
    }
    gt.foreground.data()[i] = cls == LabelClass::foreground;
    gt.ignore.data()[i] = cls == LabelClass::ignored;
  }
  return gt;
}

namespace {

template <typename A, typename B>
void require_same_size(const A& a, const B& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

int gt_threshold(const ResidualMap& rmap, const BinaryMask& gt, const BinaryMask& ignore) {
  require_same_size(rmap, gt, "gt_threshold");
  require_same_size(rmap, ignore, "gt_threshold");
  // Per-value counts of foreground and background residuals.
  std::array<std::int64_t, 257> fg{}, bg{};
  for (Eigen::Index i = 0; i < rmap.size(); ++i) {
    if (ignore.data()[i]) continue;
    const int v = std::clamp(rmap.data()[i], 0, 255);
    (gt.data()[i] ? fg : bg)[static_cast<std::size_t>(v)]++;
  }
  // mismatch(t) = #fg with r < t + #bg with r >= t.
  std::int64_t missed = 0;
  std::int64_t false_alarms = 0;
  for (std::int64_t c : bg) false_alarms += c;
  std::int64_t best = missed + false_alarms;
  int best_t = 0;
  for (int t = 1; t <= 255; ++t) {
    missed += fg[static_cast<std::size_t>(t - 1)];
    false_alarms -= bg[static_cast<std::size_t>(t - 1)];
    if (missed + false_alarms < best) {
      best = missed + false_alarms;
      best_t = t;
    }
  }
  return best_t;
}

ConfusionCounts confusion(const BinaryMask& pred, const GroundTruth& gt) {
  require_same_size(pred, gt.foreground, "confusion");
  require_same_size(pred, gt.ignore, "confusion");
  ConfusionCounts c;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (gt.ignore.data()[i]) continue;
    const bool p = pred.data()[i], g = gt.foreground.data()[i];
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ConfusionCounts confusion(const BinaryMask& pred, const Frame& labels, const LabelPolicy& policy) {
  require_same_size(pred, labels, "confusion");
  return confusion(pred, split_labels(labels, policy));
}

MetricsRecord metrics(const ConfusionCounts& c) {
  MetricsRecord m;
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.fpr = ratio(c.fp, c.fp + c.tn);
  m.fnr = ratio(c.fn, c.fn + c.tp);
  m.precision = ratio(c.tp, c.tp + c.fp);
  const double denom = m.precision + m.recall;
  m.f1 = denom == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / denom;
  return m;
}

namespace {

MetricsRecord& operator+=(MetricsRecord& a, const MetricsRecord& b) {
  a.recall += b.recall;
  a.specificity += b.specificity;
  a.fpr += b.fpr;
  a.fnr += b.fnr;
  a.precision += b.precision;
  a.f1 += b.f1;
  return a;
}

MetricsRecord operator/(MetricsRecord a, double n) {
  a.recall /= n;
  a.specificity /= n;
  a.fpr /= n;
  a.fnr /= n;
  a.precision /= n;
  a.f1 /= n;
  return a;
}

void write_metrics(std::ostream& out, const MetricsRecord& m) {
  out << m.recall << ',' << m.specificity << ',' << m.fpr << ',' << m.fnr << ',' << m.precision << ',' << m.f1;
}

void write_counts(std::ostream& out, const ConfusionCounts& c) {
  out << c.tp << ',' << c.fp << ',' << c.tn << ',' << c.fn;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << std::setprecision(10);
  return out;
}

}  // namespace

EvaluationReport aggregate(const std::vector<FrameScore>& scores) {
  if (scores.empty()) throw std::invalid_argument("aggregate: no scored frames");
  // Ordered maps keep the report layout deterministic.
  std::map<std::string, std::map<std::string, ConfusionCounts>> pooled;
  for (const auto& s : scores) pooled[s.category][s.video] += s.counts;

  EvaluationReport report;
  for (const auto& [category, videos] : pooled) {
    CategoryReport cat{category, {}, {}};
    for (const auto& [video, counts] : videos) {
      cat.videos.push_back({category, video, counts, metrics(counts)});
      cat.metrics += cat.videos.back().metrics;
    }
    cat.metrics = cat.metrics / static_cast<double>(cat.videos.size());
    report.overall += cat.metrics;
    report.categories.push_back(std::move(cat));
  }
  report.overall = report.overall / static_cast<double>(report.categories.size());
  return report;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<FrameScore>& scores) {
  auto out = open_csv(path);
  out << "category,video,first_frame,last_frame,recall,specificity,fpr,fnr,precision,f1,tp,fp,tn,fn\n";
  for (const auto& s : scores) {
    out << s.category << ',' << s.video << ',' << s.frame << ',' << s.frame << ',';
    write_metrics(out, metrics(s.counts));
    out << ',';
    write_counts(out, s.counts);
    out << '\n';
  }
}

void write_summary_csv(const std::filesystem::path& path, const EvaluationReport& report) {
  auto out = open_csv(path);
  out << "category,video,recall,specificity,fpr,fnr,precision,f1,tp,fp,tn,fn\n";
  for (const auto& cat : report.categories) {
    ConfusionCounts total;
    for (const auto& v : cat.videos) {
      out << v.category << ',' << v.video << ',';
      write_metrics(out, v.metrics);
      out << ',';
      write_counts(out, v.counts);
      out << '\n';
      total += v.counts;
    }
    out << cat.category << ",*,";
    write_metrics(out, cat.metrics);
    out << ',';
    write_counts(out, total);
    out << '\n';
  }
  out << "Overall,*,";
  write_metrics(out, report.overall);
  out << ",,,,\n";
}

}  // namespace varbg
