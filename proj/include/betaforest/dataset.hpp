#ifndef BETAFOREST_DATASET_HPP
#define BETAFOREST_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace betaforest {

enum class ColumnKind { numeric, ordinal, categorical };

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view name);

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  /// Sorted distinct integer codes (categorical columns only).
  std::vector<int> categories;

  bool operator==(const ColumnSchema&) const = default;
};

/// Column-major feature table with an optional outcome column.
///
/// Categorical values are stored as their integer codes. For every feature
/// the dataset also keeps the sorted distinct values and, per row, the rank
/// of the row's value among them; split search bins rows by that rank.
class Dataset {
 public:
  Dataset() = default;

  /// Throws std::invalid_argument on duplicate names, ragged columns,
  /// non-finite values or non-integer categorical codes.
  Dataset(std::vector<ColumnSchema> schema, std::vector<std::vector<double>> columns,
          std::optional<std::vector<double>> outcome = std::nullopt, std::string outcome_name = "y");

  std::size_t num_rows() const { return num_rows_; }
  std::size_t num_features() const { return schema_.size(); }

  const std::vector<ColumnSchema>& schema() const { return schema_; }
  const ColumnSchema& column_schema(std::size_t feature) const { return schema_.at(feature); }
  std::optional<std::size_t> find_feature(std::string_view name) const;

  double value(std::size_t row, std::size_t feature) const { return columns_[feature][row]; }
  std::span<const double> column(std::size_t feature) const { return columns_.at(feature); }

  std::span<const double> unique_values(std::size_t feature) const { return unique_values_.at(feature); }
  std::span<const std::uint32_t> value_ranks(std::size_t feature) const { return value_ranks_.at(feature); }

  bool has_outcome() const { return outcome_.has_value(); }
  /// Throws std::logic_error when the dataset carries no outcome.
  std::span<const double> outcome() const;
  const std::string& outcome_name() const { return outcome_name_; }

  /// Copy of one row's feature values.
  std::vector<double> row(std::size_t r) const;

  /// Copy with rows selected (repetition allowed).
  Dataset subset(std::span<const std::size_t> rows) const;

  /// Copy with one feature column replaced.
  Dataset with_column(std::size_t feature, std::vector<double> values) const;

  /// Throws std::invalid_argument unless the feature names and kinds equal
  /// `expected` in order.
  void require_schema(const std::vector<ColumnSchema>& expected) const;

 private:
  void index_columns();

  std::vector<ColumnSchema> schema_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<double>> unique_values_;
  std::vector<std::vector<std::uint32_t>> value_ranks_;
  std::optional<std::vector<double>> outcome_;
  std::string outcome_name_ = "y";
  std::size_t num_rows_ = 0;
};

}  // namespace betaforest

#endif  // BETAFOREST_DATASET_HPP
