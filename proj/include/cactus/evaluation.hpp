#pragma once

// Classification metrics, the average-relative-change stability metric and
// top-k overlap between importance rankings.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cactus/error.hpp"
#include "cactus/importance.hpp"
#include "cactus/tabular.hpp"

namespace cactus {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

// Class 1 is the positive class.
inline ConfusionMatrix confusion(const LabelVector& pred, const LabelVector& truth) {
  if (pred.size() != truth.size())
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(pred.size()) + " predictions for " + std::to_string(truth.size()) + " labels");
  if (pred.empty()) throw Error(ErrorCode::Empty, "no predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == 1;
    const bool t = truth[i] == 1;
    if (p && t)
      ++cm.tp;
    else if (p)
      ++cm.fp;
    else if (t)
      ++cm.fn;
    else
      ++cm.tn;
  }
  return cm;
}

// nullopt marks an undefined value (zero denominator).
using Metric = std::optional<double>;

struct MetricSet {
  Metric balanced_accuracy;
  Metric recall;
  Metric precision;
  Metric f1;
  Metric accuracy;

  bool operator==(const MetricSet&) const = default;
};

inline constexpr std::array<std::string_view, 5> kMetricNames{"balanced_accuracy", "recall", "precision", "f1",
                                                              "accuracy"};

inline std::array<Metric, 5> as_array(const MetricSet& m) {
  return {m.balanced_accuracy, m.recall, m.precision, m.f1, m.accuracy};
}

namespace detail {
inline Metric ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace detail

// F1 is the harmonic mean of precision and recall, so it is undefined when
// either is undefined or both are zero.
inline MetricSet metrics(const ConfusionMatrix& cm) {
  MetricSet m;
  m.recall = detail::ratio(cm.tp, cm.tp + cm.fn);
  m.precision = detail::ratio(cm.tp, cm.tp + cm.fp);
  const Metric specificity = detail::ratio(cm.tn, cm.tn + cm.fp);
  if (m.recall && specificity) m.balanced_accuracy = (*m.recall + *specificity) / 2.0;
  if (m.recall && m.precision && *m.recall + *m.precision > 0.0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  m.accuracy = detail::ratio(cm.tp + cm.tn, cm.total());
  return m;
}

// ---------------------------------------------------------------------------
// Stability

struct FeatureStability {
  std::string feature;
  double baseline = 0.0;             // importance on the complete data
  std::vector<double> changes;       // |I_m - I_0| / I_0, one per level
  double mean_change = 0.0;
};

struct StabilityReport {
  std::string model_name;
  std::size_t k = 0;
  std::vector<double> levels;
  std::vector<FeatureStability> per_feature;  // complete-data top-k order
  double aggregate_mean = 0.0;
  double aggregate_std = 0.0;  // population standard deviation of mean_change
};

using ReportsByLevel = std::map<double, ImportanceReport>;

inline double population_std(const std::vector<double>& xs, double mean) {
  if (xs.empty()) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Average relative change of the complete report's top-k features across
// the level reports. A feature absent from a level report counts as 0.
inline StabilityReport relative_change(const ImportanceReport& complete, const ReportsByLevel& by_level,
                                       std::size_t k) {
  const auto head = top_k(complete, k);
  StabilityReport out;
  out.model_name = complete.model_name();
  out.k = k;
  for (const auto& [level, _] : by_level) out.levels.push_back(level);

  std::vector<double> means;
  for (const auto& e : head.entries()) {
    if (e.importance <= 0.0)
      throw Error(ErrorCode::ZeroBaselineImportance, "top-" + std::to_string(k) + " feature '" + e.feature +
                                                         "' has zero importance on the complete data");
    FeatureStability fs{e.feature, e.importance, {}, 0.0};
    for (const auto& [level, report] : by_level) {
      const double im = report.importance_of(e.feature).value_or(0.0);
      fs.changes.push_back(std::abs(im - e.importance) / e.importance);
    }
    fs.mean_change = mean_of(fs.changes);
    means.push_back(fs.mean_change);
    out.per_feature.push_back(std::move(fs));
  }
  out.aggregate_mean = mean_of(means);
  out.aggregate_std = population_std(means, out.aggregate_mean);
  return out;
}

struct OverlapPoint {
  double level = 0.0;
  double percent = 0.0;
  bool operator==(const OverlapPoint&) const = default;
};

struct OverlapCurve {
  std::string model_name;
  std::size_t k = 0;
  std::vector<OverlapPoint> points;  // (0, 100) first, then ascending levels
};

inline double top_k_overlap_percent(const ImportanceReport& a, const ImportanceReport& b, std::size_t k) {
  const auto head_a = top_k(a, k);
  const auto head_b = top_k(b, k);
  std::set<std::string> sa;
  for (const auto& e : head_a.entries()) sa.insert(e.feature);
  std::size_t shared = 0;
  for (const auto& e : head_b.entries()) shared += sa.count(e.feature);
  return 100.0 * static_cast<double>(shared) / static_cast<double>(k);
}

inline OverlapCurve overlap_curve(const ImportanceReport& complete, const ReportsByLevel& by_level, std::size_t k) {
  OverlapCurve out;
  out.model_name = complete.model_name();
  out.k = k;
  top_k(complete, k);  // validates k
  out.points.push_back({0.0, 100.0});
  for (const auto& [level, report] : by_level) {
    if (level == 0.0) continue;
    out.points.push_back({level, top_k_overlap_percent(complete, report, k)});
  }
  return out;
}

}  // namespace cactus
