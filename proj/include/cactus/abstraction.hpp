#pragma once

// Two-category (Up/Down) abstraction of feature values. Continuous features
// are cut at the ROC operating point maximizing Youden's J; categorical
// levels go Up when their class-1 rate exceeds the feature's overall rate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cactus/detail/parallel.hpp"
#include "cactus/error.hpp"
#include "cactus/tabular.hpp"
#include "json.hpp"

namespace cactus {

enum class AbstractCell : std::uint8_t { Missing, Down, Up };

enum class Direction { HighIsUp, LowIsUp };

constexpr std::string_view to_string(Direction d) noexcept {
  return d == Direction::HighIsUp ? "high_is_up" : "low_is_up";
}

struct LevelAssignment {
  std::string level;
  AbstractCell category = AbstractCell::Down;
  bool operator==(const LevelAssignment&) const = default;
};

struct FeatureAbstraction {
  std::string feature;
  FeatureKind kind = FeatureKind::Continuous;
  double threshold = 0.0;                  // continuous only
  std::vector<LevelAssignment> level_map;  // categorical only, sorted by level
  Direction direction = Direction::HighIsUp;
  double separation = 0.0;  // |TPR - FPR| at the chosen cut
  bool degenerate = false;  // a class had no observed values; excluded downstream

  AbstractCell map(double v) const {
    const bool up = direction == Direction::HighIsUp ? v > threshold : v <= threshold;
    return up ? AbstractCell::Up : AbstractCell::Down;
  }

  AbstractCell map(std::string_view level) const {
    auto it = std::lower_bound(level_map.begin(), level_map.end(), level,
                               [](const LevelAssignment& a, std::string_view l) { return a.level < l; });
    if (it == level_map.end() || it->level != level) return AbstractCell::Missing;
    return it->category;
  }

  bool operator==(const FeatureAbstraction&) const = default;
};

namespace detail {

struct ClassTotals {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
};

inline void check_lengths(std::size_t values, std::size_t labels) {
  if (values != labels)
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(values) + " values but " + std::to_string(labels) + " labels");
}

inline void require_both_classes(const ClassTotals& t, std::string_view feature) {
  if (t.pos == 0 || t.neg == 0)
    throw Error(ErrorCode::DegenerateFeature,
                "feature '" + std::string(feature) + "' has no observed values in one class");
}

}  // namespace detail

// Sweeps the midpoints between consecutive distinct observed values plus the
// two infinite sentinels. The score tp*N - fp*P is kept in integers so that
// ties in |J| are exact; the first (smallest) threshold wins a tie.
inline FeatureAbstraction roc_threshold(std::span<const std::optional<double>> values, std::span<const Label> labels,
                                        std::string feature = {}) {
  detail::check_lengths(values.size(), labels.size());
  std::vector<std::pair<double, Label>> obs;
  obs.reserve(values.size());
  detail::ClassTotals totals;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) continue;
    obs.emplace_back(*values[i], labels[i]);
    (labels[i] == 1 ? totals.pos : totals.neg) += 1;
  }
  detail::require_both_classes(totals, feature);
  std::sort(obs.begin(), obs.end());

  FeatureAbstraction out;
  out.feature = std::move(feature);
  out.kind = FeatureKind::Continuous;

  if (obs.front().first == obs.back().first) {
    out.threshold = obs.front().first;
    return out;
  }

  const std::int64_t P = totals.pos;
  const std::int64_t N = totals.neg;
  // Counts of rows strictly above the current threshold.
  std::int64_t tp = P;
  std::int64_t fp = N;
  double best_threshold = -std::numeric_limits<double>::infinity();
  std::int64_t best_score = 0;

  for (std::size_t i = 0; i < obs.size();) {
    const double v = obs[i].first;
    for (; i < obs.size() && obs[i].first == v; ++i) (obs[i].second == 1 ? tp : fp) -= 1;
    const double t = i < obs.size() ? std::midpoint(v, obs[i].first) : std::numeric_limits<double>::infinity();
    const std::int64_t score = tp * N - fp * P;
    if (std::abs(score) > std::abs(best_score)) {
      best_score = score;
      best_threshold = t;
    }
  }

  out.threshold = best_threshold;
  out.direction = best_score < 0 ? Direction::LowIsUp : Direction::HighIsUp;
  out.separation = static_cast<double>(std::abs(best_score)) / static_cast<double>(P * N);
  return out;
}

// `codes` index into `levels`. Levels never observed map to Missing later.
inline FeatureAbstraction abstract_categorical(std::span<const std::optional<std::uint32_t>> codes,
                                               std::span<const std::string> levels, std::span<const Label> labels,
                                               std::string feature = {}) {
  detail::check_lengths(codes.size(), labels.size());
  std::vector<detail::ClassTotals> per_level(levels.size());
  detail::ClassTotals totals;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (!codes[i]) continue;
    auto& slot = per_level.at(*codes[i]);
    if (labels[i] == 1) {
      ++slot.pos;
      ++totals.pos;
    } else {
      ++slot.neg;
      ++totals.neg;
    }
  }
  detail::require_both_classes(totals, feature);

  FeatureAbstraction out;
  out.feature = std::move(feature);
  out.kind = FeatureKind::Categorical;
  std::int64_t tp_up = 0;
  std::int64_t fp_up = 0;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& c = per_level[l];
    if (c.pos + c.neg == 0) continue;
    // pos/(pos+neg) > P/(P+N)  <=>  pos*N > neg*P
    const bool up = c.pos * totals.neg > c.neg * totals.pos;
    if (up) {
      tp_up += c.pos;
      fp_up += c.neg;
    }
    out.level_map.push_back({levels[l], up ? AbstractCell::Up : AbstractCell::Down});
  }
  const std::int64_t score = tp_up * totals.neg - fp_up * totals.pos;
  out.separation = static_cast<double>(std::abs(score)) / static_cast<double>(totals.pos * totals.neg);
  return out;
}

struct AbstractionModel {
  std::string fitted_on;
  std::size_t fitted_rows = 0;
  std::vector<FeatureAbstraction> features;

  const FeatureAbstraction* find(std::string_view feature) const {
    for (const auto& f : features)
      if (f.feature == feature) return &f;
    return nullptr;
  }

  bool operator==(const AbstractionModel&) const = default;
};

inline void require_two_classes(const LabelVector& target) {
  const auto pos = std::count(target.begin(), target.end(), 1);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(target.size()))
    throw Error(ErrorCode::SingleClassTraining, "training data must contain both classes");
}

inline FeatureAbstraction abstract_column(const FeatureColumn& col, const LabelVector& target) {
  try {
    if (col.is_continuous()) return roc_threshold(col.numbers(), target, col.name());
    return abstract_categorical(col.codes(), col.levels(), target, col.name());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateFeature) throw;
    FeatureAbstraction out;
    out.feature = col.name();
    out.kind = col.kind();
    out.degenerate = true;
    return out;
  }
}

// Features are fitted independently; each result lands in its own slot so
// the model does not depend on the thread count.
inline AbstractionModel fit_abstraction(const Dataset& train, std::size_t threads = 1) {
  require_two_classes(train.target());
  AbstractionModel model;
  model.fitted_on = train.name();
  model.fitted_rows = train.row_count();
  model.features.resize(train.feature_count());
  detail::parallel_for(train.feature_count(), threads,
                       [&](std::size_t i) { model.features[i] = abstract_column(train.column(i), train.target()); });
  return model;
}

struct AbstractedColumn {
  std::string name;
  std::vector<AbstractCell> cells;
  bool degenerate = false;
  bool operator==(const AbstractedColumn&) const = default;
};

struct AbstractedDataset {
  std::string name;
  std::vector<AbstractedColumn> columns;
  LabelVector target;

  std::size_t row_count() const noexcept { return target.size(); }
  bool operator==(const AbstractedDataset&) const = default;
};

// Degenerate features come out all-Missing and flagged.
inline AbstractedDataset apply_abstraction(const AbstractionModel& model, const Dataset& d) {
  AbstractedDataset out;
  out.name = d.name();
  out.target = d.target();
  out.columns.reserve(d.feature_count());
  for (const auto& col : d.columns()) {
    const auto* fa = model.find(col.name());
    if (!fa) throw Error(ErrorCode::UnknownFeature, "feature '" + col.name() + "' is not in the abstraction model");
    if (fa->kind != col.kind())
      throw Error(ErrorCode::FeatureMismatch, "feature '" + col.name() + "' is " + std::string(to_string(col.kind())) +
                                                  " but was fitted as " + std::string(to_string(fa->kind)));
    AbstractedColumn ac{col.name(), std::vector<AbstractCell>(d.row_count(), AbstractCell::Missing), fa->degenerate};
    if (!fa->degenerate) {
      for (std::size_t r = 0; r < d.row_count(); ++r) {
        if (col.is_missing(r)) continue;
        ac.cells[r] = col.is_continuous() ? fa->map(*col.number(r)) : fa->map(col.levels()[*col.code(r)]);
      }
    }
    out.columns.push_back(std::move(ac));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json threshold_to_json(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  return t;
}

inline double threshold_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::SchemaViolation, "bad threshold '" + s + "'");
  }
  if (!j.is_number()) throw Error(ErrorCode::SchemaViolation, "threshold must be a number");
  return j.get<double>();
}

inline nlohmann::json to_json(const FeatureAbstraction& f) {
  nlohmann::json j;
  j["feature"] = f.feature;
  j["kind"] = std::string(to_string(f.kind));
  if (f.kind == FeatureKind::Continuous) {
    j["threshold"] = threshold_to_json(f.threshold);
  } else {
    auto map = nlohmann::json::object();
    for (const auto& a : f.level_map) map[a.level] = a.category == AbstractCell::Up ? "up" : "down";
    j["level_map"] = std::move(map);
  }
  j["direction"] = std::string(to_string(f.direction));
  j["separation"] = f.separation;
  j["degenerate"] = f.degenerate;
  return j;
}

inline nlohmann::json to_json(const AbstractionModel& m) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : m.features) features.push_back(to_json(f));
  return {{"fitted_on", {{"name", m.fitted_on}, {"rows", m.fitted_rows}}}, {"features", std::move(features)}};
}

inline AbstractionModel abstraction_model_from_json(const nlohmann::json& j) {
  try {
    AbstractionModel m;
    m.fitted_on = j.at("fitted_on").at("name").get<std::string>();
    m.fitted_rows = j.at("fitted_on").at("rows").get<std::size_t>();
    for (const auto& fj : j.at("features")) {
      FeatureAbstraction f;
      f.feature = fj.at("feature").get<std::string>();
      const auto kind = fj.at("kind").get<std::string>();
      if (kind == "continuous") {
        f.kind = FeatureKind::Continuous;
        f.threshold = threshold_from_json(fj.at("threshold"));
      } else if (kind == "categorical") {
        f.kind = FeatureKind::Categorical;
        for (const auto& [level, cat] : fj.at("level_map").items()) {
          const auto c = cat.get<std::string>();
          if (c != "up" && c != "down") throw Error(ErrorCode::SchemaViolation, "level category must be up or down");
          f.level_map.push_back({level, c == "up" ? AbstractCell::Up : AbstractCell::Down});
        }
        std::sort(f.level_map.begin(), f.level_map.end(),
                  [](const auto& a, const auto& b) { return a.level < b.level; });
      } else {
        throw Error(ErrorCode::SchemaViolation, "unknown kind '" + kind + "'");
      }
      const auto dir = fj.at("direction").get<std::string>();
      if (dir != "high_is_up" && dir != "low_is_up") throw Error(ErrorCode::SchemaViolation, "bad direction '" + dir + "'");
      f.direction = dir == "high_is_up" ? Direction::HighIsUp : Direction::LowIsUp;
      f.separation = fj.at("separation").get<double>();
      f.degenerate = fj.value("degenerate", false);
      m.features.push_back(std::move(f));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("abstraction model: ") + e.what());
  }
}

}  // namespace cactus
