#pragma once

// Ranked (feature, importance) lists: the interchange unit between models
// and the stability analytics. JSON and CSV forms are both accepted.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cactus/error.hpp"
#include "cactus/tabular.hpp"
#include "json.hpp"

namespace cactus {

struct ImportanceEntry {
  std::string feature;
  double importance = 0.0;
  bool operator==(const ImportanceEntry&) const = default;
};

// Entries are kept sorted by importance descending, then feature name
// ascending. Importances are finite and non-negative; names are unique.
class ImportanceReport {
 public:
  ImportanceReport() = default;

  ImportanceReport(std::string model_name, std::string dataset_tag, std::vector<ImportanceEntry> entries)
      : model_name_(std::move(model_name)), dataset_tag_(std::move(dataset_tag)), entries_(std::move(entries)) {
    for (const auto& e : entries_) {
      if (e.feature.empty()) throw Error(ErrorCode::SchemaViolation, "empty feature name in importance report");
      if (!std::isfinite(e.importance) || e.importance < 0.0)
        throw Error(ErrorCode::NonFiniteImportance,
                    "importance of '" + e.feature + "' must be finite and non-negative");
    }
    std::sort(entries_.begin(), entries_.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
      if (a.importance != b.importance) return a.importance > b.importance;
      return a.feature < b.feature;
    });
    for (std::size_t i = 1; i < entries_.size(); ++i)
      if (entries_[i].feature == entries_[i - 1].feature)
        throw Error(ErrorCode::SchemaViolation, "duplicate feature '" + entries_[i].feature + "' in importance report");
  }

  const std::string& model_name() const noexcept { return model_name_; }
  const std::string& dataset_tag() const noexcept { return dataset_tag_; }
  const std::vector<ImportanceEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  std::optional<double> importance_of(std::string_view feature) const {
    for (const auto& e : entries_)
      if (e.feature == feature) return e.importance;
    return std::nullopt;
  }

  bool operator==(const ImportanceReport&) const = default;

 private:
  std::string model_name_;
  std::string dataset_tag_;
  std::vector<ImportanceEntry> entries_;
};

inline ImportanceReport top_k(const ImportanceReport& report, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (k > report.size())
    throw Error(ErrorCode::KTooLarge,
                "k=" + std::to_string(k) + " exceeds the " + std::to_string(report.size()) + " ranked features");
  std::vector<ImportanceEntry> head(report.entries().begin(),
                                    report.entries().begin() + static_cast<std::ptrdiff_t>(k));
  return ImportanceReport(report.model_name(), report.dataset_tag(), std::move(head));
}

// ---------------------------------------------------------------------------
// Interchange

inline nlohmann::json to_json(const ImportanceReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries()) entries.push_back({{"feature", e.feature}, {"importance", e.importance}});
  return {{"model", r.model_name()}, {"dataset_tag", r.dataset_tag()}, {"entries", std::move(entries)}};
}

inline ImportanceReport report_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "importance report must be a JSON object");
  try {
    const auto& entries_json = j.at("entries");
    if (!entries_json.is_array() || entries_json.empty())
      throw Error(ErrorCode::SchemaViolation, "importance report has no entries");
    std::vector<ImportanceEntry> entries;
    for (const auto& e : entries_json) {
      const auto& imp = e.at("importance");
      // NaN and infinities are written as null by most JSON encoders.
      if (imp.is_null()) throw Error(ErrorCode::NonFiniteImportance, "null importance");
      if (!imp.is_number()) throw Error(ErrorCode::SchemaViolation, "importance must be a number");
      entries.push_back({e.at("feature").get<std::string>(), imp.get<double>()});
    }
    return ImportanceReport(j.at("model").get<std::string>(), j.value("dataset_tag", std::string{}),
                            std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("importance report: ") + e.what());
  }
}

inline std::string to_csv(const ImportanceReport& r) {
  std::ostringstream os;
  csv::write_row(os, {"rank", "feature", "importance"});
  std::size_t rank = 1;
  for (const auto& e : r.entries()) csv::write_row(os, {std::to_string(rank++), e.feature, format_number(e.importance)});
  return os.str();
}

inline ImportanceReport report_from_csv(std::string_view text, std::string model_name, std::string dataset_tag) {
  const auto records = csv::parse(text);
  if (records.empty()) throw Error(ErrorCode::SchemaViolation, "empty importance CSV");
  std::vector<std::string> header;
  for (const auto& h : records.front()) {
    std::string lower(trim(h));
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    header.push_back(std::move(lower));
  }
  if (header != std::vector<std::string>{"rank", "feature", "importance"})
    throw Error(ErrorCode::SchemaViolation, "importance CSV header must be rank,feature,importance");
  if (records.size() < 2) throw Error(ErrorCode::SchemaViolation, "importance report has no entries");

  std::vector<ImportanceEntry> entries;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& row = records[i];
    if (row.size() != 3) throw Error(ErrorCode::SchemaViolation, "row " + std::to_string(i) + " must have 3 fields");
    auto rank = parse_number(row[0]);
    if (!rank || *rank < 1 || std::floor(*rank) != *rank)
      throw Error(ErrorCode::SchemaViolation, "bad rank '" + row[0] + "' in row " + std::to_string(i));
    const auto cell = trim(row[2]);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty())
      throw Error(ErrorCode::SchemaViolation, "bad importance '" + row[2] + "' in row " + std::to_string(i));
    entries.push_back({std::string(trim(row[1])), value});
  }
  return ImportanceReport(std::move(model_name), std::move(dataset_tag), std::move(entries));
}

// Default model/tag for a CSV report, taken from a file stem of the form
// "<model>__<tag>" (or just "<model>").
inline std::pair<std::string, std::string> names_from_stem(const std::string& stem) {
  const auto sep = stem.find("__");
  if (sep == std::string::npos) return {stem, ""};
  return {stem.substr(0, sep), stem.substr(sep + 2)};
}

// Reads a JSON or CSV report and re-sorts it under the canonical rules.
// For CSV, `model_name`/`dataset_tag` default to names_from_stem(path).
inline ImportanceReport import_external_report(const std::filesystem::path& path,
                                               std::optional<std::string> model_name = std::nullopt,
                                               std::optional<std::string> dataset_tag = std::nullopt) {
  const auto text = read_file(path);
  const auto first = trim(text);
  if (path.extension() == ".json" || (!first.empty() && first.front() == '{')) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
    auto r = report_from_json(j);
    if (model_name || dataset_tag)
      return ImportanceReport(model_name.value_or(r.model_name()), dataset_tag.value_or(r.dataset_tag()), r.entries());
    return r;
  }
  auto [m, t] = names_from_stem(path.stem().string());
  return report_from_csv(text, model_name.value_or(m), dataset_tag.value_or(t));
}

}  // namespace cactus
