#include "betaforest/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

namespace betaforest {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

bool is_missing(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null";
}

std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') {
    cell.remove_prefix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::string cell_location(std::size_t line_no, const std::string& column) {
  return "line " + std::to_string(line_no) + ", column '" + column + "'";
}

ColumnKind infer_kind(const std::vector<double>& values, std::size_t max_levels) {
  std::set<double> distinct;
  for (double v : values) {
    if (v != std::round(v) || std::abs(v) > 1e9) {
      return ColumnKind::numeric;
    }
    distinct.insert(v);
    if (distinct.size() > max_levels) {
      return ColumnKind::numeric;
    }
  }
  return values.empty() ? ColumnKind::numeric : ColumnKind::categorical;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) {
    return "NA";
  }
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) {
    throw std::runtime_error("format_double: conversion failed");
  }
  return std::string(buf, ptr);
}

Dataset parse_csv(std::istream& in, const CsvOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (!trim(line).empty()) {
      for (auto cell : split_line(line)) {
        header.emplace_back(cell);
      }
      break;
    }
  }
  if (header.empty()) {
    throw std::runtime_error("csv: missing header row");
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].empty()) {
      throw std::runtime_error("csv: empty column name at position " + std::to_string(c + 1));
    }
    if (!index.emplace(header[c], c).second) {
      throw std::runtime_error("csv: duplicate column name '" + header[c] + "'");
    }
  }

  const auto outcome_it = index.find(options.outcome);
  const bool has_outcome = outcome_it != index.end();
  if (!has_outcome && options.require_outcome) {
    throw std::runtime_error("csv: outcome column '" + options.outcome + "' not found");
  }

  std::vector<std::size_t> feature_cols;
  if (options.schema) {
    for (const auto& col : *options.schema) {
      const auto it = index.find(col.name);
      if (it == index.end()) {
        throw std::runtime_error("csv: feature column '" + col.name + "' required by the model is missing");
      }
      feature_cols.push_back(it->second);
    }
  } else {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (!has_outcome || c != outcome_it->second) {
        feature_cols.push_back(c);
      }
    }
  }
  for (const auto& [name, kind] : options.kinds) {
    if (!index.contains(name)) {
      throw std::runtime_error("csv: kind given for unknown column '" + name + "'");
    }
  }

  std::vector<std::vector<double>> columns(feature_cols.size());
  std::vector<double> outcome;
  std::vector<std::size_t> bad_outcome_lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                               " fields, header has " + std::to_string(header.size()));
    }
    auto read = [&](std::size_t c) {
      if (is_missing(cells[c])) {
        throw std::runtime_error("csv: missing value at " + cell_location(line_no, header[c]));
      }
      const auto v = parse_number(cells[c]);
      if (!v) {
        throw std::runtime_error("csv: cannot parse '" + std::string(cells[c]) + "' as a number at " +
                                 cell_location(line_no, header[c]));
      }
      return *v;
    };
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      columns[k].push_back(read(feature_cols[k]));
    }
    if (has_outcome) {
      const double y = read(outcome_it->second);
      if (!(y > 0.0 && y < 1.0)) {
        bad_outcome_lines.push_back(line_no);
      }
      outcome.push_back(y);
    }
  }
  if (!bad_outcome_lines.empty()) {
    std::string msg = "csv: outcome '" + options.outcome + "' must lie strictly inside (0,1); offending line";
    msg += bad_outcome_lines.size() > 1 ? "s " : " ";
    for (std::size_t k = 0; k < std::min<std::size_t>(bad_outcome_lines.size(), 10); ++k) {
      msg += (k > 0 ? ", " : "") + std::to_string(bad_outcome_lines[k]);
    }
    if (bad_outcome_lines.size() > 10) {
      msg += " and " + std::to_string(bad_outcome_lines.size() - 10) + " more";
    }
    throw std::runtime_error(msg);
  }

  std::vector<ColumnSchema> schema;
  for (std::size_t k = 0; k < feature_cols.size(); ++k) {
    const std::string& name = header[feature_cols[k]];
    if (options.schema) {
      schema.push_back((*options.schema)[k]);
      continue;
    }
    const auto hint = options.kinds.find(name);
    const ColumnKind kind =
        hint != options.kinds.end() ? hint->second : infer_kind(columns[k], options.max_inferred_levels);
    schema.push_back({name, kind, {}});
  }
  std::optional<std::vector<double>> y;
  if (has_outcome) {
    y = std::move(outcome);
  }
  try {
    return Dataset(std::move(schema), std::move(columns), std::move(y), options.outcome);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("csv: ") + e.what());
  }
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path.string() + "'");
  }
  try {
    return parse_csv(in, options);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t j = 0; j < data.num_features(); ++j) {
    out << (j > 0 ? "," : "") << data.column_schema(j).name;
  }
  if (data.has_outcome()) {
    out << (data.num_features() > 0 ? "," : "") << data.outcome_name();
  }
  out << '\n';
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    for (std::size_t j = 0; j < data.num_features(); ++j) {
      out << (j > 0 ? "," : "") << format_double(data.value(i, j));
    }
    if (data.has_outcome()) {
      out << (data.num_features() > 0 ? "," : "") << format_double(data.outcome()[i]);
    }
    out << '\n';
  }
}

void write_results_csv(std::ostream& out, std::span<const EvalRecord> records) {
  out << "scenario,rep,method,loglik,scale,seconds,status\n";
  for (const auto& rec : records) {
    out << rec.scenario << ',' << rec.replication << ',' << to_string(rec.method) << ',';
    if (rec.ok) {
      out << format_double(rec.loglik) << ',' << format_double(rec.scale) << ',' << format_double(rec.seconds)
          << ",ok\n";
    } else {
      std::string reason = rec.error;
      std::replace(reason.begin(), reason.end(), ',', ';');
      std::replace(reason.begin(), reason.end(), '\n', ' ');
      out << "NA,NA," << format_double(rec.seconds) << ",failed: " << reason << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, std::span<const MethodSummary> summaries) {
  out << "scenario,method,n_ok,n_failed,mean,median,q1,q3\n";
  for (const auto& s : summaries) {
    out << s.scenario << ',' << to_string(s.method) << ',' << s.n_ok << ',' << s.n_failed << ','
        << format_double(s.mean) << ',' << format_double(s.median) << ',' << format_double(s.q1) << ','
        << format_double(s.q3) << '\n';
  }
}

}  // namespace betaforest
