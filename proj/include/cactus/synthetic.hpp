#pragma once

// Seeded synthetic cohorts: a binary target, a few informative continuous
// features (class-conditional location shift) and pure-noise features.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cactus/random.hpp"
#include "cactus/tabular.hpp"

namespace cactus {

struct SyntheticSpec {
  std::string name = "synthetic";
  std::string target_name = "target";
  std::size_t rows = 600;
  std::size_t informative = 10;
  std::size_t noise = 20;
  double positive_fraction = 0.35;
  // Shift of the class-1 mean in units of the (unit) standard deviation.
  double effect_size = 2.0;
  // Optional per-informative-feature shifts; overrides effect_size.
  std::vector<double> effect_sizes;
  // Baseline missingness drawn per feature uniformly from this range.
  double min_missing = 0.0;
  double max_missing = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticCohort {
  Dataset data;
  std::vector<std::string> informative;  // names of the shifted features
};

inline SyntheticCohort make_synthetic(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  const auto n = spec.rows;
  const auto positives = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.positive_fraction));
  LabelVector y(n, 0);
  for (std::size_t i = 0; i < positives && i < n; ++i) y[i] = 1;
  rng.shuffle(std::span<Label>(y));

  const auto p = spec.informative + spec.noise;
  // Which feature slots carry signal is itself random, so column position
  // and name order say nothing about informativeness.
  std::vector<std::size_t> slots(p);
  for (std::size_t i = 0; i < p; ++i) slots[i] = i;
  rng.shuffle(std::span<std::size_t>(slots));
  std::vector<double> shift(p, 0.0);
  for (std::size_t k = 0; k < spec.informative; ++k)
    shift[slots[k]] = k < spec.effect_sizes.size() ? spec.effect_sizes[k] : spec.effect_size;

  const int width = p >= 100 ? 3 : 2;
  std::vector<FeatureColumn> cols;
  std::vector<std::string> informative;
  for (std::size_t f = 0; f < p; ++f) {
    std::string idx = std::to_string(f + 1);
    std::string name = "f" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(idx.size()))), '0') + idx;
    const double miss = spec.min_missing + (spec.max_missing - spec.min_missing) * rng.uniform();
    std::vector<std::optional<double>> values(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double v = rng.normal() + (y[r] == 1 ? shift[f] : 0.0);
      if (miss > 0.0 && rng.uniform() < miss) continue;
      // Rounded like a lab measurement; also keeps CSV output short.
      values[r] = std::round(v * 1e4) / 1e4;
    }
    if (shift[f] != 0.0) informative.push_back(name);
    cols.push_back(FeatureColumn::continuous(std::move(name), std::move(values)));
  }
  std::sort(informative.begin(), informative.end());
  return {Dataset(spec.name, std::move(cols), std::move(y), spec.target_name), std::move(informative)};
}

// Desk-scale analogue of the evaluation cohort: 600 rows, 10 informative
// features with effect size 2.0, 20 noise features, 35% positives.
inline SyntheticCohort make_benchmark_cohort(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  return make_synthetic(spec);
}

// Same table layout as the clinical cohort: 568 patients (201 positive),
// 89 features of which one is the categorical "sex" column (130 female,
// 438 male), 3-24% baseline missingness in the continuous features, and
// target column "BlaCA_noBlaCA".
inline SyntheticCohort make_cohort_shaped(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.name = "cohort";
  spec.target_name = "BlaCA_noBlaCA";
  spec.rows = 568;
  spec.positive_fraction = 201.0 / 568.0;
  spec.informative = 10;
  spec.noise = 78;
  spec.effect_sizes = {1.2, 1.1, 1.0, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.65};
  spec.min_missing = 0.03;
  spec.max_missing = 0.24;
  spec.seed = seed;
  auto cohort = make_synthetic(spec);

  Rng rng(derive_seed(seed, "sex"));
  std::vector<std::optional<std::string>> sex(spec.rows, std::string("male"));
  for (std::size_t i = 0; i < 130; ++i) sex[i] = std::string("female");
  rng.shuffle(std::span<std::optional<std::string>>(sex));
  auto cols = cohort.data.columns();
  cols.insert(cols.begin(), FeatureColumn::categorical("sex", sex));
  return {cohort.data.with_columns(std::move(cols)), std::move(cohort.informative)};
}

}  // namespace cactus
