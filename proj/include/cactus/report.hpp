#pragma once

// Pipeline orchestration behind the command line tool: run configuration,
// artifact serialization (JSON + CSV mirrors), heatmap tables, multi-model
// comparison and the hashed run manifest.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cactus/abstraction.hpp"
#include "cactus/classifier.hpp"
#include "cactus/error.hpp"
#include "cactus/evaluation.hpp"
#include "cactus/experiment.hpp"
#include "cactus/importance.hpp"
#include "cactus/tabular.hpp"
#include "cactus/version.hpp"
#include "json.hpp"

namespace cactus {

// ---------------------------------------------------------------------------
// Configuration

struct Stratum {
  std::string column;
  std::string level;
  bool operator==(const Stratum&) const = default;
};

struct RunConfig {
  std::filesystem::path input;
  std::string target;
  std::optional<Stratum> stratify;
  std::vector<double> levels{0.10, 0.20, 0.30};
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  double alpha = 1.0;
  std::size_t top_k = 10;
  double test_fraction = 0.3;
  bool include_forest = true;
  ForestParams forest;
  std::filesystem::path out;
  std::size_t threads = 1;  // never affects outputs

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

template <typename T>
T parse_unsigned(std::string_view key, std::string_view value) {
  const auto v = trim(value);
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
    throw Error(ErrorCode::ConfigInvalid, std::string(key) + ": expected a non-negative integer, got '" +
                                              std::string(value) + "'");
  return out;
}

inline double parse_real(std::string_view key, std::string_view value) {
  auto v = parse_number(value);
  if (!v) throw Error(ErrorCode::ConfigInvalid, std::string(key) + ": expected a number, got '" + std::string(value) + "'");
  return *v;
}

inline bool parse_bool(std::string_view key, std::string_view value) {
  const auto v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::ConfigInvalid, std::string(key) + ": expected true/false, got '" + std::string(value) + "'");
}

inline std::string unquote(std::string_view v) {
  v = trim(v);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return std::string(v);
}

}  // namespace detail

inline std::vector<double> parse_levels(std::string_view text) {
  std::vector<double> levels;
  std::string s(detail::unquote(text));
  std::replace(s.begin(), s.end(), ';', ',');
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    const double v = detail::parse_real("levels", item);
    if (!(v >= 0.0 && v < 1.0)) throw Error(ErrorCode::ConfigInvalid, "levels: " + item + " is outside [0,1)");
    levels.push_back(v);
  }
  return levels;
}

inline std::optional<Stratum> parse_stratum(std::string_view text) {
  const auto s = detail::unquote(text);
  if (s.empty()) return std::nullopt;
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
    throw Error(ErrorCode::ConfigInvalid, "stratify: expected column=level, got '" + s + "'");
  return Stratum{s.substr(0, eq), s.substr(eq + 1)};
}

// Applies one `key=value` setting. Keys match the long command line flags.
inline void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "input") cfg.input = detail::unquote(value);
  else if (key == "target") cfg.target = detail::unquote(value);
  else if (key == "stratify") cfg.stratify = parse_stratum(value);
  else if (key == "levels") cfg.levels = parse_levels(value);
  else if (key == "repeats") cfg.repeats = detail::parse_unsigned<std::size_t>(key, value);
  else if (key == "seed") cfg.seed = detail::parse_unsigned<std::uint64_t>(key, value);
  else if (key == "alpha") cfg.alpha = detail::parse_real(key, value);
  else if (key == "top-k") cfg.top_k = detail::parse_unsigned<std::size_t>(key, value);
  else if (key == "test-fraction") cfg.test_fraction = detail::parse_real(key, value);
  else if (key == "forest") cfg.include_forest = detail::parse_bool(key, value);
  else if (key == "trees") cfg.forest.n_trees = detail::parse_unsigned<std::size_t>(key, value);
  else if (key == "depth") cfg.forest.max_depth = detail::parse_unsigned<std::size_t>(key, value);
  else if (key == "min-leaf") cfg.forest.min_leaf = detail::parse_unsigned<std::size_t>(key, value);
  else if (key == "mtry") cfg.forest.features_per_split = detail::parse_unsigned<std::size_t>(key, value);
  else if (key == "out") cfg.out = detail::unquote(value);
  else if (key == "threads") cfg.threads = detail::parse_unsigned<std::size_t>(key, value);
  else throw Error(ErrorCode::ConfigInvalid, "unknown setting '" + std::string(key) + "'");
}

// Flat `key = value` lines; blank lines and `#` comments are ignored.
inline void apply_config_text(RunConfig& cfg, std::string_view text) {
  std::stringstream ss{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::ConfigInvalid, "config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(cfg, trim(t.substr(0, eq)), t.substr(eq + 1));
  }
}

inline std::string format_levels(const std::vector<double>& levels) {
  std::string s;
  for (std::size_t i = 0; i < levels.size(); ++i) s += (i ? "," : "") + format_number(levels[i]);
  return s;
}

// Everything that determines the outputs; `out` and `threads` are left out
// so the file can be replayed into another directory.
inline std::string to_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  os << "input = " << cfg.input.string() << '\n'
     << "target = " << cfg.target << '\n';
  if (cfg.stratify) os << "stratify = " << cfg.stratify->column << '=' << cfg.stratify->level << '\n';
  os << "levels = " << format_levels(cfg.levels) << '\n'
     << "repeats = " << cfg.repeats << '\n'
     << "seed = " << cfg.seed << '\n'
     << "alpha = " << format_number(cfg.alpha) << '\n'
     << "top-k = " << cfg.top_k << '\n'
     << "test-fraction = " << format_number(cfg.test_fraction) << '\n'
     << "forest = " << (cfg.include_forest ? "true" : "false") << '\n'
     << "trees = " << cfg.forest.n_trees << '\n'
     << "depth = " << cfg.forest.max_depth << '\n'
     << "min-leaf = " << cfg.forest.min_leaf << '\n'
     << "mtry = " << cfg.forest.features_per_split << '\n';
  return os.str();
}

inline void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigInvalid, m); };
  if (cfg.input.empty()) fail("input is required");
  if (cfg.target.empty()) fail("target is required");
  if (cfg.out.empty()) fail("out is required");
  for (double m : cfg.levels)
    if (!(m >= 0.0 && m < 1.0)) fail("levels must lie in [0,1)");
  if (cfg.repeats < 1) fail("repeats must be >= 1");
  if (cfg.top_k < 1) fail("top-k must be >= 1");
  if (!(cfg.alpha > 0.0)) fail("alpha must be > 0");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) fail("test-fraction must lie in (0,1)");
  if (cfg.forest.n_trees < 1 || cfg.forest.max_depth < 1 || cfg.forest.min_leaf < 1)
    fail("trees, depth and min-leaf must be >= 1");
}

// ---------------------------------------------------------------------------
// Hashing

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::Internal, "SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {
inline nlohmann::json metric_json(const Metric& m) { return m ? nlohmann::json(*m) : nlohmann::json(nullptr); }
inline std::string metric_csv(const Metric& m) { return m ? format_number(*m) : std::string("NA"); }
inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }
}  // namespace detail

inline std::string metrics_json(const ExperimentResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : r.models)
    for (const auto& lm : m.metrics) {
      nlohmann::json row{{"model", m.model}, {"level", lm.level}, {"repeats", lm.per_repeat.size()}};
      for (std::size_t k = 0; k < kMetricNames.size(); ++k)
        row[std::string(kMetricNames[k])] = {{"mean", detail::metric_json(lm.summary[k].mean)},
                                             {"std", detail::metric_json(lm.summary[k].std)},
                                             {"defined", lm.summary[k].defined}};
      rows.push_back(std::move(row));
    }
  return detail::dump({{"dataset", r.dataset}, {"metrics", std::move(rows)}});
}

inline std::string metrics_csv(const ExperimentResult& r) {
  std::ostringstream os;
  csv::write_row(os, {"model", "level", "metric", "mean", "std", "defined"});
  for (const auto& m : r.models)
    for (const auto& lm : m.metrics)
      for (std::size_t k = 0; k < kMetricNames.size(); ++k)
        csv::write_row(os, {m.model, format_number(lm.level), std::string(kMetricNames[k]),
                            detail::metric_csv(lm.summary[k].mean), detail::metric_csv(lm.summary[k].std),
                            std::to_string(lm.summary[k].defined)});
  return os.str();
}

inline nlohmann::json to_json(const StabilityReport& s) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& f : s.per_feature)
    per.push_back({{"feature", f.feature}, {"baseline", f.baseline}, {"changes", f.changes}, {"mean_change", f.mean_change}});
  return {{"model", s.model_name},         {"k", s.k},
          {"levels", s.levels},            {"aggregate_mean", s.aggregate_mean},
          {"aggregate_std", s.aggregate_std}, {"per_feature", std::move(per)}};
}

inline nlohmann::json to_json(const OverlapCurve& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : c.points) pts.push_back({{"level", p.level}, {"overlap_percent", p.percent}});
  return {{"model", c.model_name}, {"k", c.k}, {"points", std::move(pts)}};
}

inline std::string stability_json(const std::vector<StabilityReport>& rs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : rs) arr.push_back(to_json(s));
  return detail::dump(arr);
}

// One row per model: the bar and error bar of the stability plot.
inline std::string stability_csv(const std::vector<StabilityReport>& rs) {
  std::ostringstream os;
  csv::write_row(os, {"model", "k", "aggregate_mean", "aggregate_std"});
  for (const auto& s : rs)
    csv::write_row(os, {s.model_name, std::to_string(s.k), format_number(s.aggregate_mean), format_number(s.aggregate_std)});
  return os.str();
}

inline std::string stability_features_csv(const std::vector<StabilityReport>& rs) {
  std::ostringstream os;
  csv::write_row(os, {"model", "feature", "baseline", "level", "relative_change"});
  for (const auto& s : rs)
    for (const auto& f : s.per_feature)
      for (std::size_t i = 0; i < f.changes.size(); ++i)
        csv::write_row(os, {s.model_name, f.feature, format_number(f.baseline), format_number(s.levels[i]),
                            format_number(f.changes[i])});
  return os.str();
}

inline std::string overlap_json(const std::vector<OverlapCurve>& cs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cs) arr.push_back(to_json(c));
  return detail::dump(arr);
}

inline std::string overlap_csv(const std::vector<OverlapCurve>& cs) {
  std::ostringstream os;
  csv::write_row(os, {"model", "level", "overlap_percent"});
  for (const auto& c : cs)
    for (const auto& p : c.points) csv::write_row(os, {c.model_name, format_number(p.level), format_number(p.percent)});
  return os.str();
}

// ---------------------------------------------------------------------------
// Heatmap

struct HeatmapRow {
  std::size_t rank = 0;
  std::string feature;
  FeatureKind kind = FeatureKind::Continuous;
  std::string threshold;  // number, or "level:up;level:down" for categorical features
  Direction direction = Direction::HighIsUp;
  double separation = 0.0;
  double significance = 0.0;
};

using HeatmapTable = std::vector<HeatmapRow>;

inline std::string describe_threshold(const FeatureAbstraction& f) {
  if (f.kind == FeatureKind::Continuous) return format_number(f.threshold);
  std::string s;
  for (const auto& a : f.level_map) {
    if (!s.empty()) s += ';';
    s += a.level + (a.category == AbstractCell::Up ? ":up" : ":down");
  }
  return s;
}

// Joins the ranked significance report with the fitted thresholds, keeping
// the report's order.
inline HeatmapTable build_heatmap(const AbstractionModel& model, const ImportanceReport& report) {
  HeatmapTable table;
  std::size_t rank = 1;
  for (const auto& e : report.entries()) {
    const auto* f = model.find(e.feature);
    if (!f) throw Error(ErrorCode::FeatureMismatch, "feature '" + e.feature + "' is not in the abstraction model");
    table.push_back({rank++, e.feature, f->kind, describe_threshold(*f), f->direction, f->separation, e.importance});
  }
  return table;
}

inline std::string heatmap_csv(const HeatmapTable& t) {
  std::ostringstream os;
  csv::write_row(os, {"rank", "feature", "kind", "threshold", "direction", "separation", "significance"});
  for (const auto& r : t)
    csv::write_row(os, {std::to_string(r.rank), r.feature, std::string(to_string(r.kind)), r.threshold,
                        std::string(to_string(r.direction)), format_number(r.separation), format_number(r.significance)});
  return os.str();
}

// ---------------------------------------------------------------------------
// Artifacts and manifest

// Output files in write order. Nothing touches the disk until every file
// has been rendered.
using Artifacts = std::vector<std::pair<std::string, std::string>>;

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline nlohmann::json make_manifest(const Artifacts& files, const nlohmann::json& config, const nlohmann::json& seeds) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [name, content] : files)
    list.push_back({{"name", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  return {{"tool", "cactus"},    {"version", std::string(kVersion)}, {"created_at", utc_timestamp()},
          {"config", config},    {"seeds", seeds},                   {"files", std::move(list)}};
}

inline void ensure_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw Error(ErrorCode::IoFailure, "cannot create output directory '" + dir.string() + "'");
}

inline void write_artifacts(const std::filesystem::path& dir, const Artifacts& files) {
  ensure_output_dir(dir);
  for (const auto& [name, content] : files) write_file(dir / name, content);
}

// ---------------------------------------------------------------------------
// Commands

struct RunOutcome {
  ExperimentResult experiment;
  HeatmapTable heatmap;
  nlohmann::json manifest;
};

inline nlohmann::json config_json(const RunConfig& cfg) {
  nlohmann::json j{{"input", cfg.input.string()},
                   {"target", cfg.target},
                   {"levels", cfg.levels},
                   {"repeats", cfg.repeats},
                   {"seed", cfg.seed},
                   {"alpha", cfg.alpha},
                   {"top_k", cfg.top_k},
                   {"test_fraction", cfg.test_fraction},
                   {"forest", cfg.include_forest},
                   {"trees", cfg.forest.n_trees},
                   {"depth", cfg.forest.max_depth},
                   {"min_leaf", cfg.forest.min_leaf},
                   {"mtry", cfg.forest.features_per_split},
                   {"out", cfg.out.string()},
                   {"threads", cfg.threads}};
  j["stratify"] = cfg.stratify ? nlohmann::json(cfg.stratify->column + "=" + cfg.stratify->level) : nlohmann::json(nullptr);
  return j;
}

inline RunOutcome cmd_run(const RunConfig& cfg) {
  validate(cfg);
  Dataset data = load_csv(cfg.input, cfg.target);
  if (cfg.stratify) data = stratify_subset(data, cfg.stratify->column, cfg.stratify->level);

  ExperimentConfig ec;
  ec.levels = cfg.levels;
  ec.repeats = cfg.repeats;
  ec.seed = cfg.seed;
  ec.alpha = cfg.alpha;
  ec.top_k = cfg.top_k;
  ec.test_fraction = cfg.test_fraction;
  ec.include_forest = cfg.include_forest;
  ec.forest = cfg.forest;
  ec.threads = cfg.threads;

  RunOutcome outcome;
  outcome.experiment = run_experiment(data, ec);

  // Heatmap thresholds and ranks come from the whole (complete) cohort.
  const auto model = fit_abstraction(data, cfg.threads);
  const auto ranks = top_k(significance(apply_abstraction(model, data), data.name()), cfg.top_k);
  outcome.heatmap = build_heatmap(model, ranks);

  std::vector<StabilityReport> stability;
  std::vector<OverlapCurve> overlap;
  nlohmann::json importance = nlohmann::json::array();
  for (const auto& m : outcome.experiment.models) {
    stability.push_back(m.stability);
    overlap.push_back(m.overlap);
    for (const auto& [level, report] : m.mean_importance) importance.push_back(to_json(report));
  }

  Artifacts files{
      {"metrics.json", metrics_json(outcome.experiment)},
      {"metrics.csv", metrics_csv(outcome.experiment)},
      {"stability.json", stability_json(stability)},
      {"stability.csv", stability_csv(stability)},
      {"stability_features.csv", stability_features_csv(stability)},
      {"overlap.json", overlap_json(overlap)},
      {"overlap.csv", overlap_csv(overlap)},
      {"heatmap.csv", heatmap_csv(outcome.heatmap)},
      {"abstraction_model.json", detail::dump(to_json(model))},
      {"importance.json", detail::dump(importance)},
      {"run.conf", to_config_text(cfg)},
  };

  nlohmann::json repeat_seeds = nlohmann::json::array();
  for (std::size_t r = 0; r < cfg.repeats; ++r) repeat_seeds.push_back(derive_seed(cfg.seed, r));
  outcome.manifest = make_manifest(files, config_json(cfg), {{"master", cfg.seed}, {"repeats", repeat_seeds}});

  files.emplace_back("manifest.json", detail::dump(outcome.manifest));
  write_artifacts(cfg.out, files);
  return outcome;
}

inline HeatmapTable cmd_heatmap(const std::filesystem::path& model_file, const std::filesystem::path& report_file,
                                const std::filesystem::path& out_file, std::optional<std::size_t> k = std::nullopt) {
  nlohmann::json mj;
  try {
    mj = nlohmann::json::parse(read_file(model_file));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "'" + model_file.string() + "' is not valid JSON: " + e.what());
  }
  const auto model = abstraction_model_from_json(mj);
  auto report = import_external_report(report_file);
  if (k) report = top_k(report, *k);
  auto table = build_heatmap(model, report);
  write_file(out_file, heatmap_csv(table));
  return table;
}

struct ModelComparison {
  std::string model;
  StabilityReport stability;
  OverlapCurve overlap;
};

inline constexpr double kLevelTolerance = 1e-9;

// Groups reports by model, pairs each model's complete report with one
// report per requested level, and ranks models by aggregate stability mean.
inline std::vector<ModelComparison> compare_reports(const std::vector<ImportanceReport>& reports,
                                                    const std::vector<double>& levels, std::size_t k) {
  std::map<std::string, std::vector<const ImportanceReport*>> by_model;
  for (const auto& r : reports) by_model[r.model_name()].push_back(&r);

  std::vector<double> wanted;
  for (double m : levels)
    if (m != 0.0) wanted.push_back(m);

  std::vector<ModelComparison> out;
  for (const auto& [model, rs] : by_model) {
    auto find_level = [&](double level) -> const ImportanceReport* {
      const ImportanceReport* hit = nullptr;
      for (const auto* r : rs)
        if (std::abs(level_from_tag(r->dataset_tag()) - level) < kLevelTolerance) {
          if (hit)
            throw Error(ErrorCode::SchemaViolation, "model '" + model + "' has two reports for level " + format_number(level));
          hit = r;
        }
      if (!hit)
        throw Error(ErrorCode::MissingLevelReport, "model '" + model + "' has no report for level " + format_number(level));
      return hit;
    };
    const auto* complete = find_level(0.0);
    ReportsByLevel perturbed;
    for (double m : wanted) perturbed.emplace(m, *find_level(m));
    out.push_back({model, relative_change(*complete, perturbed, k), overlap_curve(*complete, perturbed, k)});
  }
  std::stable_sort(out.begin(), out.end(), [](const ModelComparison& a, const ModelComparison& b) {
    return a.stability.aggregate_mean < b.stability.aggregate_mean;
  });
  return out;
}

inline std::string ranking_csv(const std::vector<ModelComparison>& cs) {
  std::ostringstream os;
  csv::write_row(os, {"rank", "model", "aggregate_mean", "aggregate_std"});
  std::size_t rank = 1;
  for (const auto& c : cs)
    csv::write_row(os, {std::to_string(rank++), c.model, format_number(c.stability.aggregate_mean),
                        format_number(c.stability.aggregate_std)});
  return os.str();
}

inline std::vector<ModelComparison> cmd_compare(const std::vector<std::filesystem::path>& report_files,
                                                const std::vector<double>& levels, std::size_t k,
                                                const std::filesystem::path& out_dir) {
  std::vector<ImportanceReport> reports;
  for (const auto& p : report_files) reports.push_back(import_external_report(p));
  auto result = compare_reports(reports, levels, k);

  std::vector<StabilityReport> stability;
  std::vector<OverlapCurve> overlap;
  for (const auto& c : result) {
    stability.push_back(c.stability);
    overlap.push_back(c.overlap);
  }
  write_artifacts(out_dir, {{"stability.json", stability_json(stability)},
                            {"stability.csv", stability_csv(stability)},
                            {"stability_features.csv", stability_features_csv(stability)},
                            {"overlap.json", overlap_json(overlap)},
                            {"overlap.csv", overlap_csv(overlap)},
                            {"ranking.csv", ranking_csv(result)}});
  return result;
}

}  // namespace cactus
