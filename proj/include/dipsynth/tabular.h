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

// Typed tabular data: the value every synthesizer consumes and produces.

#ifndef DIPSYNTH_TABULAR_H_
#define DIPSYNTH_TABULAR_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace dipsynth {

// Kind of a column. Continuous columns carry a public [lo, hi] range that
// bounds every stored cell. Binary cells are exactly 0 or 1. Categorical
// cells store the index of their level.
class ColumnKind {
 public:
  enum class Type { kContinuous, kBinary, kCategorical };

  static ColumnKind Continuous(double lo, double hi);
  static ColumnKind Binary();
  static ColumnKind Categorical(std::vector<std::string> levels);

  Type type() const { return type_; }
  bool is_continuous() const { return type_ == Type::kContinuous; }
  bool is_discrete() const { return type_ != Type::kContinuous; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  // Level labels; {"0", "1"} for binary columns, empty for continuous.
  const std::vector<std::string>& levels() const { return levels_; }
  std::size_t cardinality() const { return levels_.size(); }
  std::optional<std::size_t> LevelIndex(std::string_view label) const;

  friend bool operator==(const ColumnKind&, const ColumnKind&) = default;

 private:
  Type type_ = Type::kBinary;
  double lo_ = 0.0;
  double hi_ = 1.0;
  std::vector<std::string> levels_;
};

struct Column {
  std::string name;
  ColumnKind kind;

  friend bool operator==(const Column&, const Column&) = default;
};

// Ordered list of uniquely named columns. Order matters: the chain Bayesian
// network only admits parents that precede a column.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Column> columns);

  const std::vector<Column>& columns() const { return columns_; }
  std::size_t size() const { return columns_.size(); }
  const Column& operator[](std::size_t i) const { return columns_[i]; }
  std::optional<std::size_t> IndexOf(std::string_view name) const;
  // Like IndexOf but throws InvalidArgument for unknown names.
  std::size_t RequireIndex(std::string_view name) const;

  nlohmann::json ToJson() const;
  static Schema FromJson(const nlohmann::json& j);

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<Column> columns_;
};

Schema LoadSchemaJson(const std::filesystem::path& path);

// Immutable n x p table conforming to its schema, n >= 1.
class Dataset {
 public:
  // Validates every cell; throws DataError on any violation, including
  // continuous cells outside the declared range.
  Dataset(Schema schema, Eigen::MatrixXd cells);

  // Clamps continuous cells into range (recording per-column counts), then
  // validates the rest.
  static Dataset Clamped(Schema schema, Eigen::MatrixXd cells,
                         std::vector<std::size_t>* clamp_counts = nullptr);

  const Schema& schema() const { return schema_; }
  const Eigen::MatrixXd& cells() const { return cells_; }
  Eigen::Index rows() const { return cells_.rows(); }
  Eigen::Index cols() const { return cells_.cols(); }
  double operator()(Eigen::Index r, Eigen::Index c) const { return cells_(r, c); }
  Eigen::VectorXd column(std::size_t c) const {
    return cells_.col(static_cast<Eigen::Index>(c));
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.schema_ == b.schema_ && a.cells_.rows() == b.cells_.rows() &&
           a.cells_.cols() == b.cells_.cols() && a.cells_ == b.cells_;
  }

 private:
  Schema schema_;
  Eigen::MatrixXd cells_;
};

struct LoadedDataset {
  Dataset dataset;
  std::vector<std::size_t> clamp_counts;  // one entry per column
};

// Reads a CSV whose header must equal the schema's column names in order.
LoadedDataset LoadCsv(const std::filesystem::path& path, const Schema& schema);
LoadedDataset ParseCsv(std::string_view text, const Schema& schema);

void SaveCsv(const Dataset& ds, const std::filesystem::path& path);
std::string FormatCsv(const Dataset& ds);

}  // namespace dipsynth

#endif  // DIPSYNTH_TABULAR_H_
