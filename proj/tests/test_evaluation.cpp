#include <gtest/gtest.h>

#include "cactus/evaluation.hpp"
#include "cactus/experiment.hpp"
#include "cactus/synthetic.hpp"

using namespace cactus;

namespace {

ImportanceReport rep(std::vector<ImportanceEntry> e, std::string model = "m") {
  return ImportanceReport(std::move(model), "t", std::move(e));
}

ImportanceReport ranked(std::size_t n, std::size_t offset = 0) {
  std::vector<ImportanceEntry> e;
  for (std::size_t i = 0; i < n; ++i)
    e.push_back({"f" + std::to_string(i + offset), static_cast<double>(n - i)});
  return rep(std::move(e));
}

}  // namespace

TEST(Confusion, HandTally) {
  const LabelVector truth{1, 1, 1, 0, 0, 0, 0, 1};
  const LabelVector pred{1, 0, 1, 0, 1, 0, 0, 1};
  EXPECT_EQ(confusion(pred, truth), (ConfusionMatrix{3, 1, 3, 1}));
}

TEST(Confusion, Errors) {
  try {
    confusion({1}, {1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
  try {
    confusion({}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Empty);
  }
}

TEST(Metrics, Examples) {
  const auto m = metrics({3, 1, 3, 1});
  EXPECT_DOUBLE_EQ(*m.recall, 0.75);
  EXPECT_DOUBLE_EQ(*m.precision, 0.75);
  EXPECT_DOUBLE_EQ(*m.f1, 0.75);
  EXPECT_DOUBLE_EQ(*m.balanced_accuracy, 0.75);
  EXPECT_DOUBLE_EQ(*m.accuracy, 0.75);

  const auto all_negative = metrics({0, 0, 5, 0});
  EXPECT_FALSE(all_negative.recall);
  EXPECT_FALSE(all_negative.precision);
  EXPECT_FALSE(all_negative.f1);
  EXPECT_FALSE(all_negative.balanced_accuracy);
  EXPECT_DOUBLE_EQ(*all_negative.accuracy, 1.0);

  const auto all_wrong = metrics({0, 2, 0, 3});
  EXPECT_DOUBLE_EQ(*all_wrong.recall, 0.0);
  EXPECT_DOUBLE_EQ(*all_wrong.precision, 0.0);
  EXPECT_FALSE(all_wrong.f1);
  EXPECT_DOUBLE_EQ(*all_wrong.balanced_accuracy, 0.0);
}

TEST(Metrics, IdentitiesOverAllSmallMatrices) {
  for (std::size_t tp = 0; tp <= 12; ++tp)
    for (std::size_t fp = 0; fp <= 12; ++fp)
      for (std::size_t tn = 0; tn <= 12; ++tn)
        for (std::size_t fn = 0; fn <= 12; ++fn) {
          const ConfusionMatrix cm{tp, fp, tn, fn};
          if (cm.total() == 0) continue;
          const auto m = metrics(cm);
          ASSERT_EQ(m.recall.has_value(), tp + fn > 0);
          ASSERT_EQ(m.precision.has_value(), tp + fp > 0);
          ASSERT_EQ(m.balanced_accuracy.has_value(), tp + fn > 0 && tn + fp > 0);
          ASSERT_EQ(m.f1.has_value(), tp > 0);
          if (m.f1) {
            ASSERT_NEAR(*m.f1, 2.0 * tp / (2.0 * tp + fp + fn), 1e-12);
          }
          if (m.balanced_accuracy) {
            ASSERT_NEAR(*m.balanced_accuracy, 0.5 * (double(tp) / (tp + fn) + double(tn) / (tn + fp)), 1e-12);
          }
          ASSERT_NEAR(*m.accuracy, double(tp + tn) / cm.total(), 1e-12);
        }
}

TEST(RelativeChange, IdenticalReportsAreZero) {
  const auto r = ranked(12);
  const auto s = relative_change(r, {{0.1, r}, {0.2, r}, {0.3, r}}, 10);
  EXPECT_EQ(s.aggregate_mean, 0.0);
  EXPECT_EQ(s.aggregate_std, 0.0);
  EXPECT_EQ(s.per_feature.size(), 10u);
  EXPECT_EQ(s.levels, (std::vector<double>{0.1, 0.2, 0.3}));
}

TEST(RelativeChange, SingleFeatureExample) {
  const auto complete = rep({{"a", 1.0}, {"b", 0.5}});
  const auto s = relative_change(complete,
                                 {{0.1, rep({{"a", 0.75}, {"b", 0.5}})},
                                  {0.2, rep({{"a", 1.25}, {"b", 0.5}})},
                                  {0.3, rep({{"a", 1.0}, {"b", 0.1}})}},
                                 1);
  ASSERT_EQ(s.per_feature.size(), 1u);
  EXPECT_EQ(s.per_feature[0].feature, "a");
  EXPECT_DOUBLE_EQ(s.per_feature[0].changes[0], 0.25);
  EXPECT_DOUBLE_EQ(s.per_feature[0].changes[1], 0.25);
  EXPECT_DOUBLE_EQ(s.per_feature[0].changes[2], 0.0);
  EXPECT_DOUBLE_EQ(s.aggregate_mean, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(s.aggregate_std, 0.0);
}

TEST(RelativeChange, AbsentFeatureCountsAsZero) {
  const auto complete = rep({{"a", 2.0}, {"b", 1.0}});
  const auto s = relative_change(complete, {{0.1, rep({{"b", 1.0}})}}, 2);
  EXPECT_DOUBLE_EQ(s.per_feature[0].mean_change, 1.0);
  EXPECT_DOUBLE_EQ(s.per_feature[1].mean_change, 0.0);
  EXPECT_DOUBLE_EQ(s.aggregate_mean, 0.5);
  EXPECT_DOUBLE_EQ(s.aggregate_std, 0.5);
}

TEST(RelativeChange, EverythingVanishesIsExactlyOne) {
  const auto complete = ranked(10);
  const auto gone = rep({{"zz", 1.0}});
  const auto s = relative_change(complete, {{0.1, gone}, {0.2, gone}, {0.3, gone}}, 10);
  EXPECT_EQ(s.aggregate_mean, 1.0);
  EXPECT_EQ(s.aggregate_std, 0.0);
}

TEST(RelativeChange, ScaleInvariant) {
  const auto complete = rep({{"a", 0.7}, {"b", 0.4}, {"c", 0.1}, {"d", 0.05}});
  const auto noisy = rep({{"a", 0.5}, {"b", 0.45}, {"c", 0.2}, {"d", 0.01}});
  const auto scale = [](const ImportanceReport& r, double c) {
    std::vector<ImportanceEntry> e;
    for (const auto& x : r.entries()) e.push_back({x.feature, x.importance * c});
    return rep(std::move(e));
  };
  const auto base = relative_change(complete, {{0.1, noisy}}, 3);
  for (double c : {1e-6, 0.3, 17.0, 1e6}) {
    const auto s = relative_change(scale(complete, c), {{0.1, scale(noisy, c)}}, 3);
    EXPECT_NEAR(s.aggregate_mean, base.aggregate_mean, 1e-12 * base.aggregate_mean);
  }
}

TEST(RelativeChange, Errors) {
  const auto zero = rep({{"a", 1.0}, {"b", 0.0}});
  try {
    relative_change(zero, {{0.1, zero}}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroBaselineImportance);
  }
  try {
    relative_change(zero, {{0.1, zero}}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KTooLarge);
  }
}

TEST(Overlap, Examples) {
  const auto a = ranked(20);
  EXPECT_DOUBLE_EQ(top_k_overlap_percent(a, a, 10), 100.0);
  EXPECT_DOUBLE_EQ(top_k_overlap_percent(a, ranked(20, 10), 10), 0.0);
  EXPECT_DOUBLE_EQ(top_k_overlap_percent(a, ranked(20, 3), 10), 70.0);
}

TEST(Overlap, CurveStartsAtFullOverlap) {
  const auto a = ranked(20);
  const auto c = overlap_curve(a, {{0.0, a}, {0.1, ranked(20, 1)}, {0.3, ranked(20, 5)}}, 10);
  ASSERT_EQ(c.points.size(), 3u);
  EXPECT_EQ(c.points[0], (OverlapPoint{0.0, 100.0}));
  EXPECT_EQ(c.points[1], (OverlapPoint{0.1, 90.0}));
  EXPECT_EQ(c.points[2], (OverlapPoint{0.3, 50.0}));
}

// Only the order matters, not the importance values.
TEST(Overlap, InvariantUnderMonotoneRescoring) {
  const auto a = ranked(15);
  const auto b = ranked(15, 4);
  std::vector<ImportanceEntry> e;
  for (const auto& x : b.entries()) e.push_back({x.feature, std::exp(x.importance)});
  EXPECT_DOUBLE_EQ(top_k_overlap_percent(a, b, 8), top_k_overlap_percent(a, rep(e), 8));
}

TEST(LevelTag, RoundTrip) {
  EXPECT_EQ(level_tag("total", 0.0), "total");
  EXPECT_EQ(level_tag("total", 0.1), "total+10%");
  EXPECT_EQ(level_tag("total", 0.3), "total+30%");
  EXPECT_EQ(level_tag("x", 0.125), "x+12.5%");
  for (double m : {0.0, 0.05, 0.1, 0.2, 0.3, 0.125})
    EXPECT_NEAR(level_from_tag(level_tag("total", m)), m, 1e-12);
  EXPECT_EQ(level_from_tag("plain"), 0.0);
}

TEST(Experiment, SingleRepeatCompleteOnly) {
  const auto d = make_benchmark_cohort(1).data;
  ExperimentConfig cfg;
  cfg.levels = {};
  cfg.repeats = 1;
  cfg.include_forest = false;
  const auto r = run_experiment(d, cfg);
  EXPECT_EQ(r.levels, (std::vector<double>{0.0}));
  ASSERT_EQ(r.models.size(), 1u);
  EXPECT_EQ(r.models[0].model, "CACTUS");
  EXPECT_EQ(r.models[0].metrics.size(), 1u);
  EXPECT_EQ(r.models[0].overlap.points.size(), 1u);
  EXPECT_EQ(r.models[0].stability.aggregate_mean, 0.0);
  EXPECT_EQ(*r.models[0].metrics[0].summary[0].std, 0.0);
}

TEST(Experiment, DeterministicAndThreadInvariant) {
  const auto d = make_benchmark_cohort(2).data;
  ExperimentConfig cfg;
  cfg.repeats = 3;
  cfg.seed = 5;
  cfg.forest.n_trees = 10;
  const auto a = run_experiment(d, cfg);
  cfg.threads = 4;
  const auto b = run_experiment(d, cfg);
  ASSERT_EQ(a.models.size(), 2u);
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_EQ(a.models[m].mean_importance, b.models[m].mean_importance);
    EXPECT_EQ(a.models[m].stability.aggregate_mean, b.models[m].stability.aggregate_mean);
    for (std::size_t l = 0; l < a.levels.size(); ++l)
      EXPECT_EQ(a.models[m].metrics[l].per_repeat, b.models[m].metrics[l].per_repeat);
  }
}

TEST(Experiment, InformativeSyntheticIsWellClassified) {
  const auto cohort = make_benchmark_cohort(4);
  ExperimentConfig cfg;
  cfg.repeats = 3;
  cfg.include_forest = false;
  const auto r = run_experiment(cohort.data, cfg);
  EXPECT_GE(*r.models[0].metrics[0].summary[0].mean, 0.95);
  const auto& complete = r.models[0].mean_importance.at(0.0);
  const auto head = top_k(complete, 10);
  std::size_t hits = 0;
  for (const auto& e : head.entries())
    hits += std::count(cohort.informative.begin(), cohort.informative.end(), e.feature);
  EXPECT_GE(hits, 9u);
}
