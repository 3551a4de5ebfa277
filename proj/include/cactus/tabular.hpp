#pragma once

// Columnar tables with explicit missing cells and a binary target.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cactus/error.hpp"
#include "cactus/random.hpp"

namespace cactus {

enum class FeatureKind { Continuous, Categorical };

constexpr std::string_view to_string(FeatureKind k) noexcept {
  return k == FeatureKind::Continuous ? "continuous" : "categorical";
}

using Label = int;
using LabelVector = std::vector<Label>;

// A feature column. Continuous cells hold finite doubles; categorical cells
// hold an index into the column's sorted level set. Either may be missing.
class FeatureColumn {
 public:
  static FeatureColumn continuous(std::string name, std::vector<std::optional<double>> values) {
    for (const auto& v : values)
      if (v && !std::isfinite(*v))
        throw Error(ErrorCode::InvalidArgument, "non-finite value in continuous column '" + name + "'");
    FeatureColumn c(std::move(name), FeatureKind::Continuous);
    c.numbers_ = std::move(values);
    return c;
  }

  static FeatureColumn categorical(std::string name, const std::vector<std::optional<std::string>>& values) {
    std::vector<std::string> levels;
    for (const auto& v : values)
      if (v) levels.push_back(*v);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::vector<std::optional<std::uint32_t>> codes;
    codes.reserve(values.size());
    for (const auto& v : values) {
      if (!v) {
        codes.emplace_back();
      } else {
        auto it = std::lower_bound(levels.begin(), levels.end(), *v);
        codes.emplace_back(static_cast<std::uint32_t>(it - levels.begin()));
      }
    }
    return categorical_codes(std::move(name), std::move(levels), std::move(codes));
  }

  // `levels` must be sorted and unique; every code must index into it.
  static FeatureColumn categorical_codes(std::string name, std::vector<std::string> levels,
                                         std::vector<std::optional<std::uint32_t>> codes) {
    if (!std::is_sorted(levels.begin(), levels.end()) ||
        std::adjacent_find(levels.begin(), levels.end()) != levels.end())
      throw Error(ErrorCode::InvalidArgument, "level set of '" + name + "' must be sorted and unique");
    for (const auto& c : codes)
      if (c && *c >= levels.size())
        throw Error(ErrorCode::InvalidArgument, "level code out of range in '" + name + "'");
    FeatureColumn c(std::move(name), FeatureKind::Categorical);
    c.levels_ = std::move(levels);
    c.codes_ = std::move(codes);
    return c;
  }

  const std::string& name() const noexcept { return name_; }
  FeatureKind kind() const noexcept { return kind_; }
  bool is_continuous() const noexcept { return kind_ == FeatureKind::Continuous; }
  bool is_categorical() const noexcept { return kind_ == FeatureKind::Categorical; }

  std::size_t size() const noexcept { return is_continuous() ? numbers_.size() : codes_.size(); }

  bool is_missing(std::size_t row) const {
    return is_continuous() ? !numbers_[row].has_value() : !codes_[row].has_value();
  }

  // Continuous accessors.
  const std::optional<double>& number(std::size_t row) const { return numbers_[row]; }
  const std::vector<std::optional<double>>& numbers() const noexcept { return numbers_; }

  // Categorical accessors.
  const std::optional<std::uint32_t>& code(std::size_t row) const { return codes_[row]; }
  const std::vector<std::optional<std::uint32_t>>& codes() const noexcept { return codes_; }
  const std::vector<std::string>& levels() const noexcept { return levels_; }

  std::optional<std::uint32_t> find_level(std::string_view level) const {
    auto it = std::lower_bound(levels_.begin(), levels_.end(), level);
    if (it == levels_.end() || *it != level) return std::nullopt;
    return static_cast<std::uint32_t>(it - levels_.begin());
  }

  std::size_t missing_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i) n += is_missing(i) ? 1 : 0;
    return n;
  }

  void set_missing(std::size_t row) {
    if (is_continuous())
      numbers_[row].reset();
    else
      codes_[row].reset();
  }

  // Rows in the given order; the categorical level set is kept.
  FeatureColumn select(const std::vector<std::size_t>& rows) const {
    FeatureColumn c(name_, kind_);
    c.levels_ = levels_;
    if (is_continuous()) {
      c.numbers_.reserve(rows.size());
      for (auto r : rows) c.numbers_.push_back(numbers_[r]);
    } else {
      c.codes_.reserve(rows.size());
      for (auto r : rows) c.codes_.push_back(codes_[r]);
    }
    return c;
  }

  bool operator==(const FeatureColumn&) const = default;

 private:
  FeatureColumn(std::string name, FeatureKind kind) : name_(std::move(name)), kind_(kind) {}

  std::string name_;
  FeatureKind kind_;
  std::vector<std::string> levels_;
  std::vector<std::optional<double>> numbers_;
  std::vector<std::optional<std::uint32_t>> codes_;
};

// Immutable once constructed; the constructor enforces shape invariants.
class Dataset {
 public:
  Dataset(std::string name, std::vector<FeatureColumn> columns, LabelVector target,
          std::string target_name = "target")
      : name_(std::move(name)),
        target_name_(std::move(target_name)),
        columns_(std::move(columns)),
        target_(std::move(target)) {
    for (auto y : target_)
      if (y != 0 && y != 1) throw Error(ErrorCode::NonBinaryTarget, "target values must be 0 or 1");
    std::vector<std::string_view> names;
    for (const auto& c : columns_) {
      if (c.name().empty()) throw Error(ErrorCode::InvalidArgument, "empty feature name");
      if (c.size() != target_.size())
        throw Error(ErrorCode::RaggedRow, "column '" + c.name() + "' has " + std::to_string(c.size()) +
                                              " cells, expected " + std::to_string(target_.size()));
      names.push_back(c.name());
    }
    std::sort(names.begin(), names.end());
    if (auto it = std::adjacent_find(names.begin(), names.end()); it != names.end())
      throw Error(ErrorCode::InvalidArgument, "duplicate feature name '" + std::string(*it) + "'");
  }

  const std::string& name() const noexcept { return name_; }
  const std::string& target_name() const noexcept { return target_name_; }
  const std::vector<FeatureColumn>& columns() const noexcept { return columns_; }
  const FeatureColumn& column(std::size_t i) const { return columns_.at(i); }
  const LabelVector& target() const noexcept { return target_; }
  std::size_t row_count() const noexcept { return target_.size(); }
  std::size_t feature_count() const noexcept { return columns_.size(); }

  std::size_t positives() const {
    return static_cast<std::size_t>(std::count(target_.begin(), target_.end(), 1));
  }
  std::size_t negatives() const { return row_count() - positives(); }

  std::optional<std::size_t> find(std::string_view feature) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i].name() == feature) return i;
    return std::nullopt;
  }

  std::size_t index_of(std::string_view feature) const {
    if (auto i = find(feature)) return *i;
    throw Error(ErrorCode::UnknownColumn, "no column named '" + std::string(feature) + "'");
  }

  Dataset select_rows(const std::vector<std::size_t>& rows, std::string name) const {
    std::vector<FeatureColumn> cols;
    cols.reserve(columns_.size());
    for (const auto& c : columns_) cols.push_back(c.select(rows));
    LabelVector y;
    y.reserve(rows.size());
    for (auto r : rows) y.push_back(target_[r]);
    return Dataset(std::move(name), std::move(cols), std::move(y), target_name_);
  }

  Dataset with_columns(std::vector<FeatureColumn> columns) const {
    return Dataset(name_, std::move(columns), target_, target_name_);
  }

  bool operator==(const Dataset&) const = default;

 private:
  std::string name_;
  std::string target_name_;
  std::vector<FeatureColumn> columns_;
  LabelVector target_;
};

using SchemaHints = std::map<std::string, FeatureKind, std::less<>>;

inline SchemaHints schema_of(const Dataset& d) {
  SchemaHints hints;
  for (const auto& c : d.columns()) hints.emplace(c.name(), c.kind());
  return hints;
}

// ---------------------------------------------------------------------------
// CSV

namespace csv {

// RFC-4180 records. A UTF-8 BOM and a trailing line break are ignored.
inline std::vector<std::vector<std::string>> parse(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    // A bare empty line is not a record.
    if (!(record.size() == 1 && record[0].empty() && !field_started)) records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::SchemaViolation, "unterminated quoted field near line " + std::to_string(line));
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

inline std::string quote(std::string_view field) {
  const bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                     (!field.empty() && (std::isspace(static_cast<unsigned char>(field.front())) ||
                                         std::isspace(static_cast<unsigned char>(field.back()))));
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << quote(fields[i]);
  }
  os << '\n';
}

}  // namespace csv

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool is_missing_token(std::string_view cell) {
  cell = trim(cell);
  auto iequals = [](std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
             return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
  };
  return cell.empty() || iequals(cell, "NA") || iequals(cell, "NaN");
}

// Finite decimal number, or nullopt.
inline std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.starts_with('+')) cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Shortest representation that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline Dataset parse_dataset(std::string_view text, std::string name, std::string_view target_name,
                             const SchemaHints& hints = {}) {
  auto records = csv::parse(text);
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "no header row");
  const auto& header = records.front();
  auto target_it = std::find(header.begin(), header.end(), target_name);
  if (target_it == header.end())
    throw Error(ErrorCode::MissingTarget, "target column '" + std::string(target_name) + "' not found");
  const auto target_col = static_cast<std::size_t>(target_it - header.begin());
  const std::size_t n = records.size() - 1;
  if (n == 0) throw Error(ErrorCode::EmptyDataset, "header row only");

  for (std::size_t r = 1; r < records.size(); ++r)
    if (records[r].size() != header.size())
      throw Error(ErrorCode::RaggedRow, "data row " + std::to_string(r) + " has " +
                                            std::to_string(records[r].size()) + " fields, header has " +
                                            std::to_string(header.size()));

  LabelVector target(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& cell = records[r + 1][target_col];
    auto v = parse_number(cell);
    if (!v || (*v != 0.0 && *v != 1.0))
      throw Error(ErrorCode::NonBinaryTarget, "target cell '" + cell + "' in data row " + std::to_string(r + 1));
    target[r] = *v == 1.0 ? 1 : 0;
  }

  std::vector<FeatureColumn> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == target_col) continue;
    std::optional<FeatureKind> kind;
    if (auto h = hints.find(header[c]); h != hints.end()) kind = h->second;

    std::vector<std::optional<double>> numbers(n);
    bool all_numeric = true;
    for (std::size_t r = 0; r < n; ++r) {
      const auto& cell = records[r + 1][c];
      if (is_missing_token(cell)) continue;
      numbers[r] = parse_number(cell);
      if (!numbers[r]) all_numeric = false;
    }
    if (!kind) kind = all_numeric ? FeatureKind::Continuous : FeatureKind::Categorical;

    if (*kind == FeatureKind::Continuous) {
      if (!all_numeric)
        throw Error(ErrorCode::SchemaViolation, "column '" + header[c] + "' hinted continuous has non-numeric cells");
      columns.push_back(FeatureColumn::continuous(header[c], std::move(numbers)));
    } else {
      std::vector<std::optional<std::string>> levels(n);
      for (std::size_t r = 0; r < n; ++r) {
        const auto& cell = records[r + 1][c];
        if (!is_missing_token(cell)) levels[r] = cell;
      }
      columns.push_back(FeatureColumn::categorical(header[c], levels));
    }
  }
  return Dataset(std::move(name), std::move(columns), std::move(target), std::string(target_name));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed for '" + path.string() + "'");
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for '" + path.string() + "'");
}

inline Dataset load_csv(const std::filesystem::path& path, std::string_view target_name,
                        const SchemaHints& hints = {}) {
  return parse_dataset(read_file(path), path.stem().string(), target_name, hints);
}

// Features in column order, target last. Missing cells are written empty.
inline std::string to_csv(const Dataset& d) {
  std::ostringstream os;
  std::vector<std::string> row;
  for (const auto& c : d.columns()) row.push_back(c.name());
  row.push_back(d.target_name());
  csv::write_row(os, row);
  for (std::size_t r = 0; r < d.row_count(); ++r) {
    row.clear();
    for (const auto& c : d.columns()) {
      if (c.is_missing(r))
        row.emplace_back();
      else if (c.is_continuous())
        row.push_back(format_number(*c.number(r)));
      else
        row.push_back(c.levels()[*c.code(r)]);
    }
    row.push_back(std::to_string(d.target()[r]));
    csv::write_row(os, row);
  }
  return os.str();
}

inline void write_csv(const Dataset& d, const std::filesystem::path& path) { write_file(path, to_csv(d)); }

// ---------------------------------------------------------------------------
// Subsetting

// Rows whose `column` equals `level`; the stratification column is dropped.
inline Dataset stratify_subset(const Dataset& d, std::string_view column, std::string_view level) {
  const auto ci = d.index_of(column);
  const auto& col = d.column(ci);
  if (!col.is_categorical())
    throw Error(ErrorCode::NotCategorical, "column '" + std::string(column) + "' is not categorical");

  std::vector<std::size_t> rows;
  if (auto code = col.find_level(level))
    for (std::size_t r = 0; r < d.row_count(); ++r)
      if (col.code(r) == code) rows.push_back(r);
  if (rows.empty())
    throw Error(ErrorCode::EmptyDataset, "no rows with " + std::string(column) + "=" + std::string(level));

  std::vector<FeatureColumn> cols;
  for (std::size_t i = 0; i < d.feature_count(); ++i)
    if (i != ci) cols.push_back(d.column(i).select(rows));
  LabelVector y;
  for (auto r : rows) y.push_back(d.target()[r]);
  return Dataset(d.name() + "[" + std::string(column) + "=" + std::string(level) + "]", std::move(cols),
                 std::move(y), d.target_name());
}

struct SplitSpec {
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct TrainTest {
  Dataset train;
  Dataset test;
};

// Row indices of the test partition, ascending.
inline std::vector<std::size_t> split_test_rows(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw Error(ErrorCode::InfeasibleSplit, "test_fraction must lie in (0,1)");

  std::vector<std::vector<std::size_t>> groups;
  if (spec.stratified) {
    groups.resize(2);
    for (std::size_t r = 0; r < d.row_count(); ++r) groups[static_cast<std::size_t>(d.target()[r])].push_back(r);
  } else {
    groups.resize(1);
    for (std::size_t r = 0; r < d.row_count(); ++r) groups[0].push_back(r);
  }

  Rng rng(spec.seed);
  std::vector<std::size_t> test;
  for (auto& g : groups) {
    const auto n = g.size();
    const auto take = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.test_fraction));
    if (n < 2 || take < 1 || take >= n)
      throw Error(ErrorCode::InfeasibleSplit, "cannot place " + std::to_string(n) +
                                                  " rows of a group into two nonempty partitions at fraction " +
                                                  format_number(spec.test_fraction));
    rng.shuffle(std::span<std::size_t>(g));
    test.insert(test.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(test.begin(), test.end());
  return test;
}

inline TrainTest split(const Dataset& d, const SplitSpec& spec) {
  const auto test = split_test_rows(d, spec);
  std::vector<std::size_t> train;
  std::size_t t = 0;
  for (std::size_t r = 0; r < d.row_count(); ++r) {
    if (t < test.size() && test[t] == r)
      ++t;
    else
      train.push_back(r);
  }
  return {d.select_rows(train, d.name() + "/train"), d.select_rows(test, d.name() + "/test")};
}

}  // namespace cactus
