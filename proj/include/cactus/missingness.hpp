#pragma once

// MCAR missingness injection with an exact cell budget.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "cactus/error.hpp"
#include "cactus/random.hpp"
#include "cactus/tabular.hpp"

namespace cactus {

class MissingnessLevel {
 public:
  constexpr MissingnessLevel() = default;
  explicit MissingnessLevel(double fraction) : fraction_(fraction) {
    if (!(fraction >= 0.0 && fraction < 1.0))
      throw Error(ErrorCode::InvalidArgument, "missingness level must lie in [0,1), got " + format_number(fraction));
  }
  constexpr double fraction() const noexcept { return fraction_; }
  constexpr auto operator<=>(const MissingnessLevel&) const = default;

 private:
  double fraction_ = 0.0;
};

inline const std::vector<double>& canonical_levels() {
  static const std::vector<double> levels{0.0, 0.10, 0.20, 0.30};
  return levels;
}

struct InjectionPlan {
  MissingnessLevel level;
  std::uint64_t seed = 0;
  bool protect_target = true;
};

inline std::size_t total_feature_cells(const Dataset& d) { return d.row_count() * d.feature_count(); }

inline std::size_t missing_cell_count(const Dataset& d) {
  std::size_t n = 0;
  for (const auto& c : d.columns()) n += c.missing_count();
  return n;
}

inline double missing_fraction(const Dataset& d) {
  const auto total = total_feature_cells(d);
  return total == 0 ? 0.0 : static_cast<double>(missing_cell_count(d)) / static_cast<double>(total);
}

// floor(fraction * cells); the epsilon absorbs representation error such
// as 0.29 * 100 == 28.999999999999996.
inline std::size_t injection_budget(double fraction, std::size_t cells) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(cells) + 1e-9));
}

// Removes exactly floor(fraction * feature cells) currently observed feature
// cells, uniformly without replacement. The target is never touched.
inline Dataset inject_mcar(const Dataset& d, const InjectionPlan& plan) {
  const auto budget = injection_budget(plan.level.fraction(), total_feature_cells(d));
  if (budget == 0) return d;

  // Observed cells in column-major order.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pool;
  pool.reserve(total_feature_cells(d));
  for (std::size_t c = 0; c < d.feature_count(); ++c)
    for (std::size_t r = 0; r < d.row_count(); ++r)
      if (!d.column(c).is_missing(r)) pool.emplace_back(static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(r));
  if (pool.size() < budget)
    throw Error(ErrorCode::InfeasibleFraction, "requested " + std::to_string(budget) + " additional missing cells but only " +
                                                   std::to_string(pool.size()) + " are observed");

  Rng rng(plan.seed);
  auto columns = d.columns();
  for (auto i : rng.sample_without_replacement(pool.size(), budget)) {
    const auto [c, r] = pool[i];
    columns[c].set_missing(r);
  }
  return d.with_columns(std::move(columns));
}

}  // namespace cactus
