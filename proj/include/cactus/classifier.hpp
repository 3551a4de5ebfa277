#pragma once

// Naive-Bayes-style classification over abstracted (Up/Down) records.
// Missing cells contribute no evidence; each class is scored by its prior
// plus the log-likelihood of the observed cells only.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cactus/abstraction.hpp"
#include "cactus/error.hpp"
#include "cactus/importance.hpp"

namespace cactus {

inline constexpr std::string_view kCactusModelName = "CACTUS";

class ClassProfiles {
 public:
  ClassProfiles() = default;

  const std::vector<std::string>& features() const noexcept { return features_; }
  std::size_t feature_count() const noexcept { return features_.size(); }
  double alpha() const noexcept { return alpha_; }
  double prior(Label c) const { return prior_.at(static_cast<std::size_t>(c)); }
  // Smoothed P(Up | class c) for feature i.
  double p_up(Label c, std::size_t i) const { return p_up_.at(static_cast<std::size_t>(c)).at(i); }

  std::optional<std::size_t> find(std::string_view feature) const {
    auto it = index_.find(std::string(feature));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Log-likelihood term of one observed cell.
  double term(Label c, std::size_t i, AbstractCell cell) const {
    const auto k = static_cast<std::size_t>(c);
    return cell == AbstractCell::Up ? log_up_[k][i] : log_down_[k][i];
  }
  double log_prior(Label c) const { return log_prior_.at(static_cast<std::size_t>(c)); }

  friend ClassProfiles fit_profiles(const AbstractedDataset& a, double alpha);
  // Builds profiles directly from probabilities; used for what-if scoring.
  static ClassProfiles from_probabilities(std::vector<std::string> features, std::array<std::vector<double>, 2> p_up,
                                          std::array<double, 2> prior, double alpha = 1.0) {
    ClassProfiles p;
    p.features_ = std::move(features);
    p.p_up_ = std::move(p_up);
    p.prior_ = prior;
    p.alpha_ = alpha;
    for (const auto& v : p.p_up_)
      if (v.size() != p.features_.size()) throw Error(ErrorCode::LengthMismatch, "profile size mismatch");
    p.finalize();
    return p;
  }

 private:
  void finalize() {
    index_.clear();
    for (std::size_t i = 0; i < features_.size(); ++i) index_.emplace(features_[i], i);
    for (std::size_t c = 0; c < 2; ++c) {
      log_prior_[c] = std::log(prior_[c]);
      log_up_[c].resize(features_.size());
      log_down_[c].resize(features_.size());
      for (std::size_t i = 0; i < features_.size(); ++i) {
        log_up_[c][i] = std::log(p_up_[c][i]);
        log_down_[c][i] = std::log1p(-p_up_[c][i]);
      }
    }
  }

  std::vector<std::string> features_;
  std::array<std::vector<double>, 2> p_up_;
  std::array<double, 2> prior_{0.5, 0.5};
  double alpha_ = 1.0;
  std::unordered_map<std::string, std::size_t> index_;
  std::array<double, 2> log_prior_{};
  std::array<std::vector<double>, 2> log_up_;
  std::array<std::vector<double>, 2> log_down_;
};

struct UpCounts {
  std::array<std::size_t, 2> up{0, 0};
  std::array<std::size_t, 2> observed{0, 0};
};

inline UpCounts count_up(const AbstractedColumn& col, const LabelVector& target) {
  UpCounts c;
  for (std::size_t r = 0; r < col.cells.size(); ++r) {
    if (col.cells[r] == AbstractCell::Missing) continue;
    const auto k = static_cast<std::size_t>(target[r]);
    ++c.observed[k];
    if (col.cells[r] == AbstractCell::Up) ++c.up[k];
  }
  return c;
}

// p(c,f) = (up + alpha) / (observed + 2 alpha). Degenerate features are left out.
inline ClassProfiles fit_profiles(const AbstractedDataset& a, double alpha = 1.0) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidArgument, "smoothing alpha must be > 0");
  require_two_classes(a.target);
  ClassProfiles p;
  p.alpha_ = alpha;
  const auto n = static_cast<double>(a.row_count());
  const auto pos = static_cast<double>(std::count(a.target.begin(), a.target.end(), 1));
  p.prior_ = {(n - pos) / n, pos / n};
  for (const auto& col : a.columns) {
    if (col.degenerate) continue;
    const auto counts = count_up(col, a.target);
    p.features_.push_back(col.name);
    for (std::size_t c = 0; c < 2; ++c)
      p.p_up_[c].push_back((static_cast<double>(counts.up[c]) + alpha) /
                           (static_cast<double>(counts.observed[c]) + 2.0 * alpha));
  }
  p.finalize();
  return p;
}

struct Classification {
  Label label = 0;
  double score0 = 0.0;
  double score1 = 0.0;
  bool tie = false;
};

struct RecordCell {
  std::string feature;
  AbstractCell value = AbstractCell::Missing;
};

namespace detail {
inline Classification decide(double s0, double s1) { return {s1 > s0 ? 1 : 0, s0, s1, s0 == s1}; }
}  // namespace detail

inline Classification classify(const ClassProfiles& profiles, std::span<const RecordCell> record) {
  double s0 = profiles.log_prior(0);
  double s1 = profiles.log_prior(1);
  for (const auto& cell : record) {
    const auto i = profiles.find(cell.feature);
    if (!i) throw Error(ErrorCode::UnknownFeature, "feature '" + cell.feature + "' has no class profile");
    if (cell.value == AbstractCell::Missing) continue;
    s0 += profiles.term(0, *i, cell.value);
    s1 += profiles.term(1, *i, cell.value);
  }
  return detail::decide(s0, s1);
}

// Scores every row of `a`. Degenerate columns carry no evidence and are
// skipped; any other column must have a profile.
inline std::vector<Classification> classify_all(const ClassProfiles& profiles, const AbstractedDataset& a) {
  std::vector<std::pair<std::size_t, std::size_t>> used;  // (column, profile index)
  for (std::size_t c = 0; c < a.columns.size(); ++c) {
    const auto& col = a.columns[c];
    const auto i = profiles.find(col.name);
    if (!i) {
      if (col.degenerate) continue;
      throw Error(ErrorCode::UnknownFeature, "feature '" + col.name + "' has no class profile");
    }
    used.emplace_back(c, *i);
  }
  std::vector<Classification> out(a.row_count());
  for (std::size_t r = 0; r < a.row_count(); ++r) {
    double s0 = profiles.log_prior(0);
    double s1 = profiles.log_prior(1);
    for (const auto& [c, i] : used) {
      const auto cell = a.columns[c].cells[r];
      if (cell == AbstractCell::Missing) continue;
      s0 += profiles.term(0, i, cell);
      s1 += profiles.term(1, i, cell);
    }
    out[r] = detail::decide(s0, s1);
  }
  return out;
}

inline LabelVector labels_of(const std::vector<Classification>& cs) {
  LabelVector y;
  y.reserve(cs.size());
  for (const auto& c : cs) y.push_back(c.label);
  return y;
}

// Discriminative strength |P(Up|1) - P(Up|0)| from raw observed proportions.
// A feature with no observed cells in some class scores 0.
inline ImportanceReport significance(const AbstractedDataset& a, std::string dataset_tag = {}) {
  require_two_classes(a.target);
  std::vector<ImportanceEntry> entries;
  entries.reserve(a.columns.size());
  for (const auto& col : a.columns) {
    double s = 0.0;
    if (!col.degenerate) {
      const auto c = count_up(col, a.target);
      if (c.observed[0] > 0 && c.observed[1] > 0) {
        const double r1 = static_cast<double>(c.up[1]) / static_cast<double>(c.observed[1]);
        const double r0 = static_cast<double>(c.up[0]) / static_cast<double>(c.observed[0]);
        s = std::clamp(std::abs(r1 - r0), 0.0, 1.0);
      }
    }
    entries.push_back({col.name, s});
  }
  return ImportanceReport(std::string(kCactusModelName), std::move(dataset_tag), std::move(entries));
}

}  // namespace cactus
