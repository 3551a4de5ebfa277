#pragma once

// Comparison baseline: a bagged Gini decision-tree ensemble that handles
// missing cells natively, plus mean/mode imputation for models that cannot.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cactus/abstraction.hpp"
#include "cactus/detail/parallel.hpp"
#include "cactus/error.hpp"
#include "cactus/importance.hpp"
#include "cactus/random.hpp"
#include "cactus/tabular.hpp"

namespace cactus {

inline constexpr std::string_view kForestModelName = "RF";

// Continuous cells get the column mean, categorical cells the modal level
// (smallest level on ties). Observed cells are left alone.
inline Dataset mean_impute(const Dataset& d) {
  std::vector<FeatureColumn> cols;
  cols.reserve(d.feature_count());
  for (const auto& col : d.columns()) {
    if (col.missing_count() == 0) {
      cols.push_back(col);
      continue;
    }
    if (col.missing_count() == col.size())
      throw Error(ErrorCode::AllMissingFeature, "feature '" + col.name() + "' has no observed values");
    if (col.is_continuous()) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& v : col.numbers())
        if (v) {
          sum += *v;
          ++n;
        }
      const double mean = sum / static_cast<double>(n);
      auto values = col.numbers();
      for (auto& v : values)
        if (!v) v = mean;
      cols.push_back(FeatureColumn::continuous(col.name(), std::move(values)));
    } else {
      std::vector<std::size_t> freq(col.levels().size(), 0);
      for (const auto& c : col.codes())
        if (c) ++freq[*c];
      const auto mode = static_cast<std::uint32_t>(std::max_element(freq.begin(), freq.end()) - freq.begin());
      auto codes = col.codes();
      for (auto& c : codes)
        if (!c) c = mode;
      cols.push_back(FeatureColumn::categorical_codes(col.name(), col.levels(), std::move(codes)));
    }
  }
  return d.with_columns(std::move(cols));
}

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 8;
  std::size_t min_leaf = 2;
  std::size_t features_per_split = 0;  // 0: floor(sqrt(feature count))
  std::uint64_t seed = 0;
  bool bootstrap = true;
  std::size_t threads = 1;  // 0: hardware concurrency

  bool operator==(const ForestParams&) const = default;
};

struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  double threshold = 0.0;                // continuous: value <= threshold goes left
  std::vector<std::int8_t> level_side;   // categorical: 0 left, 1 right, -1 unseen here
  bool missing_left = true;              // rows without a usable value follow the majority branch
  std::uint32_t left = 0;
  std::uint32_t right = 0;

  std::array<std::size_t, 2> counts{0, 0};  // training rows reaching the node, per class
  double decrease = 0.0;                    // n*gini - n_l*gini_l - n_r*gini_r
  Label prediction = 0;

  bool is_leaf() const noexcept { return feature == kLeaf; }
  std::size_t size() const noexcept { return counts[0] + counts[1]; }
  bool operator==(const TreeNode&) const = default;
};

// n * gini for a node with the given class counts.
constexpr double weighted_gini(std::size_t c0, std::size_t c1) noexcept {
  const auto n = static_cast<double>(c0 + c1);
  if (n == 0.0) return 0.0;
  const auto a = static_cast<double>(c0);
  const auto b = static_cast<double>(c1);
  return n - (a * a + b * b) / n;
}

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  bool operator==(const DecisionTree&) const = default;
};

class Forest {
 public:
  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  const std::vector<FeatureKind>& feature_kinds() const noexcept { return kinds_; }
  const std::vector<std::vector<std::string>>& feature_levels() const noexcept { return levels_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const ForestParams& params() const noexcept { return params_; }
  // Accumulated impurity decrease per feature, normalized to sum 1.
  const std::vector<double>& importance() const noexcept { return importance_; }

  bool operator==(const Forest&) const = default;

  friend Forest fit_forest(const Dataset& d, const ForestParams& params);

 private:
  std::vector<std::string> names_;
  std::vector<FeatureKind> kinds_;
  std::vector<std::vector<std::string>> levels_;
  std::vector<DecisionTree> trees_;
  std::vector<double> importance_;
  ForestParams params_;
};

namespace detail {

struct SplitCandidate {
  bool valid = false;
  std::int32_t feature = TreeNode::kLeaf;
  double decrease = 0.0;
  double threshold = 0.0;
  std::vector<std::int8_t> level_side;
  bool missing_left = true;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& d, const ForestParams& p, std::size_t mtry, std::uint64_t seed)
      : data_(d), params_(p), mtry_(mtry), rng_(seed) {}

  DecisionTree build() {
    std::vector<std::uint32_t> rows;
    const auto n = data_.row_count();
    rows.reserve(n);
    if (params_.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<std::uint32_t>(rng_.below(n)));
      std::sort(rows.begin(), rows.end());
    } else {
      for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<std::uint32_t>(i));
    }
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  std::uint32_t grow(std::vector<std::uint32_t> rows, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    {
      auto& node = tree_.nodes[id];
      for (auto r : rows) ++node.counts[static_cast<std::size_t>(data_.target()[r])];
      node.prediction = node.counts[1] > node.counts[0] ? 1 : 0;
    }
    const auto counts = tree_.nodes[id].counts;
    const bool pure = counts[0] == 0 || counts[1] == 0;
    if (pure || depth >= params_.max_depth || rows.size() < 2 * params_.min_leaf) return id;

    auto split = find_split(rows, counts);
    if (!split.valid) return id;

    std::vector<std::uint32_t> left_rows;
    std::vector<std::uint32_t> right_rows;
    const auto& col = data_.column(static_cast<std::size_t>(split.feature));
    for (auto r : rows) {
      bool left = split.missing_left;
      if (!col.is_missing(r)) {
        if (col.is_continuous()) {
          left = *col.number(r) <= split.threshold;
        } else if (const auto side = split.level_side[*col.code(r)]; side >= 0) {
          left = side == 0;
        }
      }
      (left ? left_rows : right_rows).push_back(r);
    }

    auto& node = tree_.nodes[id];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.level_side = std::move(split.level_side);
    node.missing_left = split.missing_left;
    node.decrease = split.decrease;
    rows.clear();
    rows.shrink_to_fit();
    const auto l = grow(std::move(left_rows), depth + 1);
    const auto r = grow(std::move(right_rows), depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  // Tries mtry random features; if none of them splits, keeps drawing from
  // the remaining features until one does or all are exhausted.
  SplitCandidate find_split(const std::vector<std::uint32_t>& rows, std::array<std::size_t, 2> counts) {
    std::vector<std::size_t> order(data_.feature_count());
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(std::span<std::size_t>(order));
    const double parent = weighted_gini(counts[0], counts[1]);

    SplitCandidate best;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k >= mtry_ && best.valid) break;
      auto cand = data_.column(order[k]).is_continuous() ? split_continuous(order[k], rows, parent)
                                                         : split_categorical(order[k], rows, parent);
      if (cand.valid && (!best.valid || cand.decrease > best.decrease)) best = std::move(cand);
    }
    return best;
  }

  // Scores a partition of the observed rows; missing rows join the larger side.
  bool score(std::array<std::size_t, 2> left, std::array<std::size_t, 2> right, std::array<std::size_t, 2> missing,
             double parent, double& decrease, bool& missing_left) const {
    const auto nl = left[0] + left[1];
    const auto nr = right[0] + right[1];
    missing_left = nl >= nr;
    auto& target = missing_left ? left : right;
    target[0] += missing[0];
    target[1] += missing[1];
    if (left[0] + left[1] < params_.min_leaf || right[0] + right[1] < params_.min_leaf) return false;
    decrease = parent - weighted_gini(left[0], left[1]) - weighted_gini(right[0], right[1]);
    return decrease > 1e-12;
  }

  SplitCandidate split_continuous(std::size_t f, const std::vector<std::uint32_t>& rows, double parent) const {
    const auto& col = data_.column(f);
    std::vector<std::pair<double, Label>> obs;
    std::array<std::size_t, 2> missing{0, 0};
    std::array<std::size_t, 2> total{0, 0};
    obs.reserve(rows.size());
    for (auto r : rows) {
      const auto y = data_.target()[r];
      if (col.is_missing(r)) {
        ++missing[static_cast<std::size_t>(y)];
      } else {
        obs.emplace_back(*col.number(r), y);
        ++total[static_cast<std::size_t>(y)];
      }
    }
    SplitCandidate best;
    if (obs.size() < 2) return best;
    std::sort(obs.begin(), obs.end());
    std::array<std::size_t, 2> left{0, 0};
    for (std::size_t i = 0; i + 1 < obs.size(); ++i) {
      ++left[static_cast<std::size_t>(obs[i].second)];
      if (obs[i].first == obs[i + 1].first) continue;
      const std::array<std::size_t, 2> right{total[0] - left[0], total[1] - left[1]};
      double dec = 0.0;
      bool ml = true;
      if (!score(left, right, missing, parent, dec, ml)) continue;
      if (!best.valid || dec > best.decrease) {
        best.valid = true;
        best.feature = static_cast<std::int32_t>(f);
        best.decrease = dec;
        best.threshold = std::midpoint(obs[i].first, obs[i + 1].first);
        best.missing_left = ml;
      }
    }
    return best;
  }

  // Levels ordered by class-1 rate; the best prefix goes left.
  SplitCandidate split_categorical(std::size_t f, const std::vector<std::uint32_t>& rows, double parent) const {
    const auto& col = data_.column(f);
    const auto L = col.levels().size();
    std::vector<std::array<std::size_t, 2>> per_level(L, {0, 0});
    std::array<std::size_t, 2> missing{0, 0};
    for (auto r : rows) {
      const auto y = static_cast<std::size_t>(data_.target()[r]);
      if (col.is_missing(r))
        ++missing[y];
      else
        ++per_level[*col.code(r)][y];
    }
    std::vector<std::size_t> seen;
    for (std::size_t l = 0; l < L; ++l)
      if (per_level[l][0] + per_level[l][1] > 0) seen.push_back(l);
    SplitCandidate best;
    if (seen.size() < 2) return best;
    std::stable_sort(seen.begin(), seen.end(), [&](std::size_t a, std::size_t b) {
      // pos_a / n_a < pos_b / n_b
      return per_level[a][1] * (per_level[b][0] + per_level[b][1]) <
             per_level[b][1] * (per_level[a][0] + per_level[a][1]);
    });
    std::array<std::size_t, 2> total{0, 0};
    for (auto l : seen) {
      total[0] += per_level[l][0];
      total[1] += per_level[l][1];
    }
    std::array<std::size_t, 2> left{0, 0};
    for (std::size_t i = 0; i + 1 < seen.size(); ++i) {
      left[0] += per_level[seen[i]][0];
      left[1] += per_level[seen[i]][1];
      const std::array<std::size_t, 2> right{total[0] - left[0], total[1] - left[1]};
      double dec = 0.0;
      bool ml = true;
      if (!score(left, right, missing, parent, dec, ml)) continue;
      if (!best.valid || dec > best.decrease) {
        best.valid = true;
        best.feature = static_cast<std::int32_t>(f);
        best.decrease = dec;
        best.missing_left = ml;
        best.level_side.assign(L, -1);
        for (std::size_t k = 0; k < seen.size(); ++k) best.level_side[seen[k]] = k <= i ? 0 : 1;
      }
    }
    return best;
  }

  const Dataset& data_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng rng_;
  DecisionTree tree_;
};

}  // namespace detail

inline std::size_t resolve_features_per_split(const ForestParams& p, std::size_t feature_count) {
  if (p.features_per_split != 0) return p.features_per_split;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(feature_count)))));
}

// Tree t is grown from derive_seed(seed, t), so the forest is the same for
// any thread count.
inline Forest fit_forest(const Dataset& d, const ForestParams& params) {
  if (params.n_trees == 0 || params.max_depth == 0 || params.min_leaf == 0)
    throw Error(ErrorCode::InvalidArgument, "forest parameters must be positive");
  if (d.feature_count() == 0) throw Error(ErrorCode::InvalidArgument, "dataset has no features");
  const auto mtry = resolve_features_per_split(params, d.feature_count());
  if (mtry > d.feature_count())
    throw Error(ErrorCode::InvalidArgument, "features_per_split exceeds the feature count");
  require_two_classes(d.target());

  Forest f;
  f.params_ = params;
  for (const auto& c : d.columns()) {
    f.names_.push_back(c.name());
    f.kinds_.push_back(c.kind());
    f.levels_.push_back(c.levels());
  }
  f.trees_.resize(params.n_trees);
  detail::parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    f.trees_[t] = detail::TreeBuilder(d, params, mtry, derive_seed(params.seed, t)).build();
  });

  f.importance_.assign(d.feature_count(), 0.0);
  for (const auto& tree : f.trees_)
    for (const auto& node : tree.nodes)
      if (!node.is_leaf()) f.importance_[static_cast<std::size_t>(node.feature)] += node.decrease;
  const double total = std::accumulate(f.importance_.begin(), f.importance_.end(), 0.0);
  if (total > 0.0)
    for (auto& g : f.importance_) g /= total;
  return f;
}

// Majority of tree votes; an even split reports 0.
constexpr Label majority_vote(std::size_t votes0, std::size_t votes1) noexcept { return votes1 > votes0 ? 1 : 0; }

struct ForestPrediction {
  LabelVector labels;
  std::vector<bool> ties;  // equal votes; label reported as 0
};

inline ForestPrediction forest_predict(const Forest& f, const Dataset& d) {
  const auto& names = f.feature_names();
  std::vector<std::size_t> col_of(names.size());
  // Per feature: data level code -> training level code (or -1).
  std::vector<std::vector<std::int64_t>> level_remap(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto c = d.find(names[i]);
    if (!c) throw Error(ErrorCode::UnknownFeature, "dataset lacks forest feature '" + names[i] + "'");
    col_of[i] = *c;
    const auto& col = d.column(*c);
    if (col.kind() != f.feature_kinds()[i])
      throw Error(ErrorCode::FeatureMismatch, "feature '" + names[i] + "' changed kind");
    if (col.is_categorical()) {
      const auto& train_levels = f.feature_levels()[i];
      for (const auto& level : col.levels()) {
        auto it = std::lower_bound(train_levels.begin(), train_levels.end(), level);
        level_remap[i].push_back(it != train_levels.end() && *it == level ? it - train_levels.begin() : -1);
      }
    }
  }

  ForestPrediction out;
  out.labels.resize(d.row_count());
  out.ties.resize(d.row_count());
  for (std::size_t r = 0; r < d.row_count(); ++r) {
    std::array<std::size_t, 2> votes{0, 0};
    for (const auto& tree : f.trees()) {
      std::uint32_t at = 0;
      while (!tree.nodes[at].is_leaf()) {
        const auto& node = tree.nodes[at];
        const auto fi = static_cast<std::size_t>(node.feature);
        const auto& col = d.column(col_of[fi]);
        bool left = node.missing_left;
        if (!col.is_missing(r)) {
          if (col.is_continuous()) {
            left = *col.number(r) <= node.threshold;
          } else if (const auto code = level_remap[fi][*col.code(r)]; code >= 0) {
            if (const auto side = node.level_side[static_cast<std::size_t>(code)]; side >= 0) left = side == 0;
          }
        }
        at = left ? node.left : node.right;
      }
      ++votes[static_cast<std::size_t>(tree.nodes[at].prediction)];
    }
    out.labels[r] = majority_vote(votes[0], votes[1]);
    out.ties[r] = votes[0] == votes[1];
  }
  return out;
}

inline ImportanceReport forest_importance(const Forest& f, std::string dataset_tag = {}) {
  std::vector<ImportanceEntry> entries;
  for (std::size_t i = 0; i < f.feature_names().size(); ++i) entries.push_back({f.feature_names()[i], f.importance()[i]});
  return ImportanceReport(std::string(kForestModelName), std::move(dataset_tag), std::move(entries));
}

}  // namespace cactus
