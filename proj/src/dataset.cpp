#include "betaforest/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace betaforest {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric:
      return "numeric";
    case ColumnKind::ordinal:
      return "ordinal";
    case ColumnKind::categorical:
      return "categorical";
  }
  return "?";
}

ColumnKind parse_column_kind(std::string_view name) {
  if (name == "numeric") return ColumnKind::numeric;
  if (name == "ordinal") return ColumnKind::ordinal;
  if (name == "categorical") return ColumnKind::categorical;
  throw std::invalid_argument("unknown column kind '" + std::string(name) +
                              "' (expected numeric, ordinal or categorical)");
}

Dataset::Dataset(std::vector<ColumnSchema> schema, std::vector<std::vector<double>> columns,
                 std::optional<std::vector<double>> outcome, std::string outcome_name)
    : schema_(std::move(schema)),
      columns_(std::move(columns)),
      outcome_(std::move(outcome)),
      outcome_name_(std::move(outcome_name)) {
  if (schema_.size() != columns_.size()) {
    throw std::invalid_argument("Dataset: schema has " + std::to_string(schema_.size()) + " columns but " +
                                std::to_string(columns_.size()) + " were supplied");
  }
  std::set<std::string> names;
  for (const auto& col : schema_) {
    if (!names.insert(col.name).second || col.name == outcome_name_) {
      throw std::invalid_argument("Dataset: duplicate column name '" + col.name + "'");
    }
  }
  if (!columns_.empty()) {
    num_rows_ = columns_.front().size();
  } else if (outcome_) {
    num_rows_ = outcome_->size();
  }
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].size() != num_rows_) {
      throw std::invalid_argument("Dataset: column '" + schema_[j].name + "' has a different length");
    }
    for (double v : columns_[j]) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("Dataset: non-finite value in column '" + schema_[j].name + "'");
      }
      if (schema_[j].kind == ColumnKind::categorical && v != std::round(v)) {
        throw std::invalid_argument("Dataset: categorical column '" + schema_[j].name +
                                    "' holds a non-integer code");
      }
    }
  }
  if (outcome_) {
    if (outcome_->size() != num_rows_) {
      throw std::invalid_argument("Dataset: outcome length differs from feature columns");
    }
    for (std::size_t i = 0; i < num_rows_; ++i) {
      const double y = (*outcome_)[i];
      if (!(y > 0.0 && y < 1.0)) {
        throw std::domain_error("Dataset: outcome at row " + std::to_string(i) + " is " + std::to_string(y) +
                                ", must lie strictly inside (0,1)");
      }
    }
  }
  index_columns();
}

void Dataset::index_columns() {
  unique_values_.assign(columns_.size(), {});
  value_ranks_.assign(columns_.size(), {});
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    auto& uniq = unique_values_[j];
    uniq = columns_[j];
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    auto& ranks = value_ranks_[j];
    ranks.resize(num_rows_);
    for (std::size_t i = 0; i < num_rows_; ++i) {
      ranks[i] = static_cast<std::uint32_t>(std::lower_bound(uniq.begin(), uniq.end(), columns_[j][i]) - uniq.begin());
    }
    auto& col = schema_[j];
    if (col.kind == ColumnKind::categorical && col.categories.empty()) {
      for (double v : uniq) {
        col.categories.push_back(static_cast<int>(v));
      }
    }
  }
}

std::optional<std::size_t> Dataset::find_feature(std::string_view name) const {
  for (std::size_t j = 0; j < schema_.size(); ++j) {
    if (schema_[j].name == name) {
      return j;
    }
  }
  return std::nullopt;
}

std::span<const double> Dataset::outcome() const {
  if (!outcome_) {
    throw std::logic_error("Dataset: no outcome column");
  }
  return *outcome_;
}

std::vector<double> Dataset::row(std::size_t r) const {
  std::vector<double> out(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    out[j] = columns_[j].at(r);
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<std::vector<double>> cols(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    cols[j].reserve(rows.size());
    for (std::size_t r : rows) {
      cols[j].push_back(columns_[j].at(r));
    }
  }
  std::optional<std::vector<double>> y;
  if (outcome_) {
    y.emplace();
    for (std::size_t r : rows) {
      y->push_back(outcome_->at(r));
    }
  }
  return Dataset(schema_, std::move(cols), std::move(y), outcome_name_);
}

Dataset Dataset::with_column(std::size_t feature, std::vector<double> values) const {
  auto cols = columns_;
  cols.at(feature) = std::move(values);
  return Dataset(schema_, std::move(cols), outcome_, outcome_name_);
}

void Dataset::require_schema(const std::vector<ColumnSchema>& expected) const {
  if (expected.size() != schema_.size()) {
    throw std::invalid_argument("schema mismatch: expected " + std::to_string(expected.size()) + " features, got " +
                                std::to_string(schema_.size()));
  }
  for (std::size_t j = 0; j < expected.size(); ++j) {
    if (expected[j].name != schema_[j].name || expected[j].kind != schema_[j].kind) {
      throw std::invalid_argument("schema mismatch at feature " + std::to_string(j) + ": expected '" +
                                  expected[j].name + "' (" + std::string(to_string(expected[j].kind)) + "), got '" +
                                  schema_[j].name + "' (" + std::string(to_string(schema_[j].kind)) + ")");
    }
  }
}

}  // namespace betaforest
