#pragma once

// Independent brute-force reference computations. Nothing here calls into
// the code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

namespace oracle {

struct Threshold {
  double threshold = 0.0;
  double j = 0.0;  // |TPR - FPR|
  bool high_is_up = true;
};

// Every candidate cut (-inf, each midpoint of consecutive distinct values,
// +inf) is scored by recounting all rows from scratch. First maximum wins.
inline Threshold exhaustive_threshold(const std::vector<std::optional<double>>& values, const std::vector<int>& labels) {
  std::set<double> distinct;
  std::int64_t P = 0, N = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) continue;
    distinct.insert(*values[i]);
    (labels[i] == 1 ? P : N) += 1;
  }
  if (distinct.size() == 1) return {*distinct.begin(), 0.0, true};

  std::vector<double> candidates{-std::numeric_limits<double>::infinity()};
  for (auto it = distinct.begin(); std::next(it) != distinct.end(); ++it)
    candidates.push_back(std::midpoint(*it, *std::next(it)));
  candidates.push_back(std::numeric_limits<double>::infinity());

  Threshold best{candidates.front(), 0.0, true};
  std::int64_t best_score = 0;
  for (double t : candidates) {
    std::int64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!values[i] || !(*values[i] > t)) continue;
      (labels[i] == 1 ? tp : fp) += 1;
    }
    const std::int64_t score = tp * N - fp * P;  // (TPR - FPR) * P * N
    if (std::llabs(score) > std::llabs(best_score)) {
      best_score = score;
      best = {t, 0.0, score >= 0};
    }
  }
  best.j = static_cast<double>(std::llabs(best_score)) / static_cast<double>(P * N);
  return best;
}

struct LevelCounts {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
};

// Largest |TPR - FPR| over every assignment of levels to {Up, Down}, and all
// Up-sets attaining it (bit l set = level l is Up).
struct PartitionOptimum {
  double separation = 0.0;
  std::vector<unsigned> optimal_sets;
};

inline PartitionOptimum best_partition(const std::vector<LevelCounts>& levels) {
  std::int64_t P = 0, N = 0;
  for (const auto& l : levels) {
    P += l.pos;
    N += l.neg;
  }
  PartitionOptimum out;
  std::int64_t best = -1;
  for (unsigned mask = 0; mask < (1u << levels.size()); ++mask) {
    std::int64_t tp = 0, fp = 0;
    for (std::size_t l = 0; l < levels.size(); ++l)
      if (mask & (1u << l)) {
        tp += levels[l].pos;
        fp += levels[l].neg;
      }
    const std::int64_t score = std::llabs(tp * N - fp * P);
    if (score > best) {
      best = score;
      out.optimal_sets.clear();
    }
    if (score == best) out.optimal_sets.push_back(mask);
  }
  out.separation = static_cast<double>(best) / static_cast<double>(P * N);
  return out;
}

// Naive Bayes posterior by direct multiplication of probabilities.
// record[i]: 0 = missing, 1 = down, 2 = up.
inline int naive_bayes_label(const std::vector<double>& p_up0, const std::vector<double>& p_up1, double prior0,
                             double prior1, const std::vector<int>& record) {
  long double like0 = prior0, like1 = prior1;
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (record[i] == 0) continue;
    like0 *= record[i] == 2 ? p_up0[i] : 1.0L - p_up0[i];
    like1 *= record[i] == 2 ? p_up1[i] : 1.0L - p_up1[i];
  }
  return like1 > like0 ? 1 : 0;
}

inline double gini(double c0, double c1) {
  const double n = c0 + c1;
  if (n == 0) return 0.0;
  return 1.0 - (c0 / n) * (c0 / n) - (c1 / n) * (c1 / n);
}

// Best impurity decrease n*G(parent) - n_l*G(left) - n_r*G(right) over every
// feature and every midpoint cut, for fully observed continuous data.
struct GiniSplit {
  double decrease = 0.0;
  std::size_t feature = 0;
  double threshold = 0.0;
};

inline GiniSplit best_gini_split(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                 const std::vector<std::size_t>& rows, std::size_t min_leaf) {
  double c0 = 0, c1 = 0;
  for (auto r : rows) (y[r] ? c1 : c0) += 1;
  const double parent = (c0 + c1) * gini(c0, c1);
  GiniSplit best{-1.0, 0, 0.0};
  for (std::size_t f = 0; f < x.size(); ++f) {
    std::set<double> distinct;
    for (auto r : rows) distinct.insert(x[f][r]);
    for (auto it = distinct.begin(); std::next(it) != distinct.end(); ++it) {
      const double t = std::midpoint(*it, *std::next(it));
      double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
      for (auto r : rows) {
        if (x[f][r] <= t)
          (y[r] ? l1 : l0) += 1;
        else
          (y[r] ? r1 : r0) += 1;
      }
      if (l0 + l1 < min_leaf || r0 + r1 < min_leaf) continue;
      const double dec = parent - (l0 + l1) * gini(l0, l1) - (r0 + r1) * gini(r0, r1);
      if (dec > best.decrease) best = {dec, f, t};
    }
  }
  return best;
}

}  // namespace oracle
