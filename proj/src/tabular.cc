// Copyright 2026 The dipsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dipsynth/tabular.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dipsynth/error.h"
#include "dipsynth/format.h"

namespace dipsynth {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(Trim(line.substr(start)));
      return out;
    }
    out.push_back(Trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::string Where(std::size_t line_no, const std::string& column) {
  return "line " + std::to_string(line_no) + ", column '" + column + "'";
}

double ParseCell(std::string_view field, const Column& col, std::size_t line_no) {
  const ColumnKind& kind = col.kind;
  if (kind.type() == ColumnKind::Type::kCategorical) {
    if (auto idx = kind.LevelIndex(field)) return static_cast<double>(*idx);
    throw DataError(Where(line_no, col.name) + ": label not in levels: '" +
                    std::string(field) + "'");
  }
  auto value = ParseDouble(field);
  if (!value) {
    throw DataError(Where(line_no, col.name) + ": unparseable cell '" +
                    std::string(field) + "'");
  }
  if (kind.type() == ColumnKind::Type::kBinary && *value != 0.0 && *value != 1.0) {
    throw DataError(Where(line_no, col.name) + ": label not in levels: '" +
                    std::string(field) + "'");
  }
  return *value;
}

void ValidateCells(const Schema& schema, const Eigen::MatrixXd& cells) {
  if (schema.size() == 0) throw DataError("Dataset: schema has no columns");
  if (cells.rows() < 1) throw DataError("Dataset: at least one row is required");
  if (cells.cols() != static_cast<Eigen::Index>(schema.size())) {
    throw DataError("Dataset: cell matrix has " + std::to_string(cells.cols()) +
                    " columns but schema has " + std::to_string(schema.size()));
  }
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const ColumnKind& kind = schema[c].kind;
    for (Eigen::Index r = 0; r < cells.rows(); ++r) {
      const double v = cells(r, static_cast<Eigen::Index>(c));
      bool ok = std::isfinite(v);
      if (ok && kind.is_continuous()) {
        ok = v >= kind.lo() && v <= kind.hi();
      } else if (ok) {
        ok = v >= 0.0 && v < static_cast<double>(kind.cardinality()) &&
             v == std::floor(v);
      }
      if (!ok) {
        throw DataError("Dataset: row " + std::to_string(r) + ", column '" +
                        schema[c].name + "' holds invalid value " +
                        FormatDouble(v));
      }
    }
  }
}

}  // namespace

ColumnKind ColumnKind::Continuous(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw InvalidArgument("continuous column range requires finite lo < hi");
  }
  ColumnKind k;
  k.type_ = Type::kContinuous;
  k.lo_ = lo;
  k.hi_ = hi;
  return k;
}

ColumnKind ColumnKind::Binary() {
  ColumnKind k;
  k.type_ = Type::kBinary;
  k.levels_ = {"0", "1"};
  return k;
}

ColumnKind ColumnKind::Categorical(std::vector<std::string> levels) {
  std::set<std::string> distinct(levels.begin(), levels.end());
  if (levels.size() < 2 || distinct.size() != levels.size()) {
    throw InvalidArgument("categorical column needs at least 2 distinct levels");
  }
  ColumnKind k;
  k.type_ = Type::kCategorical;
  k.lo_ = 0.0;
  k.hi_ = 0.0;
  k.levels_ = std::move(levels);
  return k;
}

std::optional<std::size_t> ColumnKind::LevelIndex(std::string_view label) const {
  if (type_ == Type::kBinary) {
    auto v = ParseDouble(label);
    if (v && *v == 0.0) return 0;
    if (v && *v == 1.0) return 1;
    return std::nullopt;
  }
  auto it = std::find(levels_.begin(), levels_.end(), label);
  if (it == levels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - levels_.begin());
}

Schema::Schema(std::vector<Column> columns) : columns_(std::move(columns)) {
  std::set<std::string> names;
  for (const Column& c : columns_) {
    if (c.name.empty()) throw InvalidArgument("schema column names must be nonempty");
    if (c.name.find(',') != std::string::npos) {
      throw InvalidArgument("schema column name contains a comma: " + c.name);
    }
    if (!names.insert(c.name).second) {
      throw InvalidArgument("duplicate schema column name: " + c.name);
    }
  }
}

std::optional<std::size_t> Schema::IndexOf(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Schema::RequireIndex(std::string_view name) const {
  if (auto i = IndexOf(name)) return *i;
  throw InvalidArgument("unknown column: " + std::string(name));
}

nlohmann::json Schema::ToJson() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const Column& c : columns_) {
    nlohmann::json j = {{"name", c.name}};
    switch (c.kind.type()) {
      case ColumnKind::Type::kContinuous:
        j["kind"] = "continuous";
        j["range"] = {c.kind.lo(), c.kind.hi()};
        break;
      case ColumnKind::Type::kBinary:
        j["kind"] = "binary";
        break;
      case ColumnKind::Type::kCategorical:
        j["kind"] = "categorical";
        j["levels"] = c.kind.levels();
        break;
    }
    cols.push_back(std::move(j));
  }
  return {{"columns", cols}};
}

Schema Schema::FromJson(const nlohmann::json& j) {
  const nlohmann::json& cols =
      j.is_object() && j.contains("columns") ? j.at("columns") : j;
  if (!cols.is_array()) {
    throw DataError("schema JSON must be an array or an object with 'columns'");
  }
  std::vector<Column> columns;
  try {
    for (const auto& c : cols) {
      const std::string name = c.at("name").get<std::string>();
      const std::string kind = c.at("kind").get<std::string>();
      if (kind == "continuous") {
        const auto& range = c.at("range");
        if (!range.is_array() || range.size() != 2) {
          throw DataError("column '" + name + "': range must be [lo, hi]");
        }
        columns.push_back(
            {name, ColumnKind::Continuous(range[0].get<double>(), range[1].get<double>())});
      } else if (kind == "binary") {
        columns.push_back({name, ColumnKind::Binary()});
      } else if (kind == "categorical") {
        columns.push_back(
            {name, ColumnKind::Categorical(c.at("levels").get<std::vector<std::string>>())});
      } else {
        throw DataError("column '" + name + "': unknown kind '" + kind + "'");
      }
    }
    return Schema(std::move(columns));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed schema JSON: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("invalid schema: ") + e.what());
  }
}

Schema LoadSchemaJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file: " + path.string());
  try {
    return Schema::FromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("schema file " + path.string() + " is not valid JSON: " + e.what());
  }
}

Dataset::Dataset(Schema schema, Eigen::MatrixXd cells)
    : schema_(std::move(schema)), cells_(std::move(cells)) {
  ValidateCells(schema_, cells_);
}

Dataset Dataset::Clamped(Schema schema, Eigen::MatrixXd cells,
                         std::vector<std::size_t>* clamp_counts) {
  std::vector<std::size_t> counts(schema.size(), 0);
  if (cells.cols() == static_cast<Eigen::Index>(schema.size())) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const ColumnKind& kind = schema[c].kind;
      if (!kind.is_continuous()) continue;
      for (Eigen::Index r = 0; r < cells.rows(); ++r) {
        double& v = cells(r, static_cast<Eigen::Index>(c));
        if (v < kind.lo()) {
          v = kind.lo();
          ++counts[c];
        } else if (v > kind.hi()) {
          v = kind.hi();
          ++counts[c];
        }
      }
    }
  }
  if (clamp_counts != nullptr) *clamp_counts = counts;
  return Dataset(std::move(schema), std::move(cells));
}

LoadedDataset ParseCsv(std::string_view text, const Schema& schema) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  // Strip a UTF-8 byte-order mark and trailing blank lines.
  if (!lines.empty() && lines[0].starts_with("\xEF\xBB\xBF")) lines[0].remove_prefix(3);
  while (!lines.empty() && Trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw DataError("CSV is empty (no header row)");

  const auto header = SplitFields(lines[0]);
  bool header_ok = header.size() == schema.size();
  for (std::size_t c = 0; header_ok && c < header.size(); ++c) {
    header_ok = header[c] == schema[c].name;
  }
  if (!header_ok) {
    std::string expected;
    for (std::size_t c = 0; c < schema.size(); ++c) {
      expected += (c ? "," : "") + schema[c].name;
    }
    throw DataError("CSV header mismatch: expected '" + expected + "', got '" +
                    std::string(Trim(lines[0])) + "'");
  }
  if (lines.size() < 2) throw DataError("CSV has an empty body");

  Eigen::MatrixXd cells(static_cast<Eigen::Index>(lines.size() - 1),
                        static_cast<Eigen::Index>(schema.size()));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = SplitFields(lines[i]);
    if (fields.size() != schema.size()) {
      throw DataError("line " + std::to_string(i + 1) + ": expected " +
                      std::to_string(schema.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < schema.size(); ++c) {
      cells(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(c)) =
          ParseCell(fields[c], schema[c], i + 1);
    }
  }
  std::vector<std::size_t> counts;
  Dataset ds = Dataset::Clamped(schema, std::move(cells), &counts);
  return {std::move(ds), std::move(counts)};
}

LoadedDataset LoadCsv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return ParseCsv(buffer.str(), schema);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string FormatCsv(const Dataset& ds) {
  const Schema& schema = ds.schema();
  std::string out;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (c) out += ',';
    out += schema[c].name;
  }
  out += '\n';
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (c) out += ',';
      const double v = ds(r, static_cast<Eigen::Index>(c));
      const ColumnKind& kind = schema[c].kind;
      if (kind.is_continuous()) {
        out += FormatDouble(v);
      } else {
        out += kind.levels()[static_cast<std::size_t>(v)];
      }
    }
    out += '\n';
  }
  return out;
}

void SaveCsv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << FormatCsv(ds);
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace dipsynth
