#ifndef BETAFOREST_CSV_HPP
#define BETAFOREST_CSV_HPP

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "betaforest/dataset.hpp"
#include "betaforest/simulation.hpp"

namespace betaforest {

struct CsvOptions {
  /// Outcome column. Every other column becomes a feature.
  std::string outcome = "y";
  /// When false a missing outcome column is allowed (prediction input).
  bool require_outcome = true;
  /// Kind overrides by column name.
  std::map<std::string, ColumnKind> kinds;
  /// Columns whose values are all integers with at most this many distinct
  /// values default to categorical.
  std::size_t max_inferred_levels = 12;
  /// When set, the features are exactly these columns, in this order and
  /// with these kinds; other columns are ignored.
  std::optional<std::vector<ColumnSchema>> schema;
};

/// Parses a comma-separated table with a header row. Throws
/// std::runtime_error with a row/column diagnostic on missing or
/// unparseable cells, duplicate column names, or outcome values outside
/// (0,1).
Dataset parse_csv(std::istream& in, const CsvOptions& options = {});
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes a dataset (features then outcome) with full round-trip precision.
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Results table: scenario,rep,method,loglik,scale,seconds,status. Failed
/// records have NA for the numeric columns and the error text in status.
void write_results_csv(std::ostream& out, std::span<const EvalRecord> records);

/// scenario,method,n_ok,n_failed,mean,median,q1,q3
void write_summary_csv(std::ostream& out, std::span<const MethodSummary> summaries);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

}  // namespace betaforest

#endif  // BETAFOREST_CSV_HPP
