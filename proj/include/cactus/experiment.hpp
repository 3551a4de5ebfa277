#pragma once

// Repeated missingness experiment: for every repeat and level, inject MCAR
// cells into the whole dataset, split, fit each model on the training part,
// score the test part and collect training-data importance reports.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cactus/abstraction.hpp"
#include "cactus/baselines.hpp"
#include "cactus/classifier.hpp"
#include "cactus/detail/parallel.hpp"
#include "cactus/evaluation.hpp"
#include "cactus/missingness.hpp"
#include "cactus/random.hpp"
#include "cactus/tabular.hpp"

namespace cactus {

struct ExperimentConfig {
  std::vector<double> levels{0.10, 0.20, 0.30};  // the complete level 0 is always run
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  double alpha = 1.0;
  std::size_t top_k = 10;
  double test_fraction = 0.3;
  bool include_forest = true;
  ForestParams forest;
  std::size_t threads = 1;  // 0: hardware concurrency
};

struct MetricSummary {
  Metric mean;
  Metric std;  // population standard deviation over repeats
  std::size_t defined = 0;
};

struct LevelMetrics {
  double level = 0.0;
  std::array<MetricSummary, 5> summary;  // indexed like kMetricNames
  std::vector<MetricSet> per_repeat;
};

struct ModelResult {
  std::string model;
  std::vector<LevelMetrics> metrics;  // one per level, ascending
  ReportsByLevel mean_importance;     // includes level 0
  StabilityReport stability;
  OverlapCurve overlap;
};

struct ExperimentResult {
  std::string dataset;
  std::vector<double> levels;  // ascending, starts with 0
  std::vector<ModelResult> models;
};

// "total" for the complete data, "total+10%" for level 0.10.
inline std::string level_tag(const std::string& base, double level) {
  if (level == 0.0) return base;
  return base + "+" + format_number(std::round(level * 100.0 * 1e6) / 1e6) + "%";
}

// Inverse of level_tag; tags without a "+N%" suffix are the complete data.
inline double level_from_tag(std::string_view tag) {
  if (!tag.ends_with('%')) return 0.0;
  const auto plus = tag.rfind('+');
  if (plus == std::string_view::npos) return 0.0;
  const auto pct = parse_number(tag.substr(plus + 1, tag.size() - plus - 2));
  if (!pct) return 0.0;
  return *pct / 100.0;
}

inline std::vector<double> normalized_levels(const std::vector<double>& requested) {
  std::vector<double> levels{0.0};
  for (double m : requested) {
    MissingnessLevel check(m);
    if (m != 0.0) levels.push_back(check.fraction());
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

namespace detail {

struct JobOutput {
  std::vector<MetricSet> metrics;         // per model
  std::vector<ImportanceReport> reports;  // per model
};

inline MetricSummary summarize(const std::vector<Metric>& xs) {
  std::vector<double> defined;
  for (const auto& x : xs)
    if (x) defined.push_back(*x);
  MetricSummary s;
  s.defined = defined.size();
  if (!defined.empty()) {
    s.mean = mean_of(defined);
    s.std = population_std(defined, *s.mean);
  }
  return s;
}

}  // namespace detail

inline ExperimentResult run_experiment(const Dataset& d, const ExperimentConfig& cfg) {
  if (cfg.repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  if (cfg.top_k < 1) throw Error(ErrorCode::InvalidArgument, "top_k must be >= 1");
  const auto levels = normalized_levels(cfg.levels);
  const std::size_t n_models = cfg.include_forest ? 2 : 1;
  const std::size_t n_jobs = cfg.repeats * levels.size();

  std::vector<detail::JobOutput> jobs(n_jobs);
  detail::parallel_for(n_jobs, cfg.threads, [&](std::size_t job) {
    const std::size_t r = job / levels.size();
    const std::size_t li = job % levels.size();
    const auto repeat_seed = derive_seed(cfg.seed, r);
    const auto tag = level_tag(d.name(), levels[li]);

    const Dataset data =
        li == 0 ? d
                : inject_mcar(d, {MissingnessLevel(levels[li]), derive_seed(derive_seed(repeat_seed, "inject"), li), true});
    // The split seed is shared across levels so each level sees the same rows.
    const auto parts = split(data, {cfg.test_fraction, derive_seed(repeat_seed, "split"), true});

    auto& out = jobs[job];
    const auto model = fit_abstraction(parts.train);
    const auto train_abs = apply_abstraction(model, parts.train);
    const auto profiles = fit_profiles(train_abs, cfg.alpha);
    const auto predicted = labels_of(classify_all(profiles, apply_abstraction(model, parts.test)));
    out.metrics.push_back(metrics(confusion(predicted, parts.test.target())));
    out.reports.push_back(significance(train_abs, tag));

    if (cfg.include_forest) {
      auto fp = cfg.forest;
      fp.seed = derive_seed(derive_seed(repeat_seed, "forest"), li);
      fp.threads = 1;
      const auto forest = fit_forest(parts.train, fp);
      out.metrics.push_back(metrics(confusion(forest_predict(forest, parts.test).labels, parts.test.target())));
      out.reports.push_back(forest_importance(forest, tag));
    }
  });

  ExperimentResult result;
  result.dataset = d.name();
  result.levels = levels;
  for (std::size_t m = 0; m < n_models; ++m) {
    ModelResult mr;
    mr.model = jobs.front().reports[m].model_name();
    for (std::size_t li = 0; li < levels.size(); ++li) {
      LevelMetrics lm;
      lm.level = levels[li];
      for (std::size_t r = 0; r < cfg.repeats; ++r) lm.per_repeat.push_back(jobs[r * levels.size() + li].metrics[m]);
      for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
        std::vector<Metric> xs;
        for (const auto& ms : lm.per_repeat) xs.push_back(as_array(ms)[k]);
        lm.summary[k] = detail::summarize(xs);
      }
      mr.metrics.push_back(std::move(lm));

      // Mean importance per feature over repeats; absent features count as 0.
      std::vector<ImportanceEntry> entries;
      for (const auto& col : d.columns()) {
        double sum = 0.0;
        for (std::size_t r = 0; r < cfg.repeats; ++r)
          sum += jobs[r * levels.size() + li].reports[m].importance_of(col.name()).value_or(0.0);
        entries.push_back({col.name(), sum / static_cast<double>(cfg.repeats)});
      }
      mr.mean_importance.emplace(levels[li],
                                 ImportanceReport(mr.model, level_tag(d.name(), levels[li]), std::move(entries)));
    }
    ReportsByLevel perturbed(std::next(mr.mean_importance.begin()), mr.mean_importance.end());
    mr.stability = relative_change(mr.mean_importance.at(0.0), perturbed, cfg.top_k);
    mr.overlap = overlap_curve(mr.mean_importance.at(0.0), perturbed, cfg.top_k);
    result.models.push_back(std::move(mr));
  }
  return result;
}

}  // namespace cactus
