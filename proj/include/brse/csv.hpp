#ifndef BRSE_CSV_HPP
#define BRSE_CSV_HPP

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "brse/types.hpp"

namespace brse {

// Column selection for building a Dataset from a CSV file. For survival models the
// response is (time_col, event_col); otherwise exactly one outcome column, or two
// columns whose mean is the outcome (average = true).
struct Formula {
  std::vector<std::string> outcome;  // one column, or two with average = true
  bool average = false;
  std::vector<std::string> covariates;
  bool intercept = true;
  std::string time_col;
  std::string event_col;
};

struct IngestResult {
  Dataset data;
  std::vector<std::string> coef_names;
  int n_dropped = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline bool is_missing_token(const std::string& s) {
  static const char* tokens[] = {"", ".", "NA", "na", "N/A", "n/a", "NaN", "nan", "NULL", "null"};
  for (const char* t : tokens)
    if (s == t) return true;
  return false;
}

// Parses one referenced cell. Missing-style tokens report missing; anything else that
// fails to parse as a number is a hard error naming the data row.
inline bool parse_cell(const std::string& cell, int row_1based, const std::string& column,
                       double* out) {
  if (is_missing_token(cell)) return false;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw data_error("non-numeric cell '" + cell + "' in column '" + column + "' at data row " +
                     std::to_string(row_1based));
  }
  if (pos != cell.size())
    throw data_error("non-numeric cell '" + cell + "' in column '" + column + "' at data row " +
                     std::to_string(row_1based));
  *out = v;
  return true;
}

}  // namespace detail

// Reads a header-first comma-separated file and assembles the referenced columns into
// a Dataset. Rows with missing referenced cells are dropped with a counted warning.
inline IngestResult ingest_csv(const std::string& path, const Formula& formula,
                               const ModelSpec& model) {
  const bool survival = is_survival(model.family);
  if (survival) {
    if (formula.time_col.empty() || formula.event_col.empty())
      throw data_error("survival models require time and event columns");
  } else {
    const std::size_t want = formula.average ? 2 : 1;
    if (formula.outcome.size() != want)
      throw data_error(formula.average ? "averaging requires exactly two outcome columns"
                                       : "exactly one outcome column is required");
  }

  std::ifstream in(path);
  if (!in) throw data_error("cannot open data file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty data file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = detail::split_csv_line(line);
  std::map<std::string, int> index;
  for (std::size_t j = 0; j < header.size(); ++j) index[header[j]] = static_cast<int>(j);

  std::vector<std::string> referenced = formula.covariates;
  if (survival) {
    referenced.push_back(formula.time_col);
    referenced.push_back(formula.event_col);
  } else {
    for (const std::string& c : formula.outcome) referenced.push_back(c);
  }
  for (const std::string& c : referenced)
    if (!index.count(c)) throw data_error("column '" + c + "' not found in " + path);

  const int p_cov = static_cast<int>(formula.covariates.size());
  const int p = p_cov + (formula.intercept ? 1 : 0);
  if (p < 1) throw data_error("no covariates requested and no intercept");

  std::vector<double> xs, ys, times, events;
  int row = 0, dropped = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    auto cell_at = [&](const std::string& col) -> const std::string& {
      static const std::string empty;
      const int j = index.at(col);
      return j < static_cast<int>(cells.size()) ? cells[static_cast<std::size_t>(j)] : empty;
    };

    std::vector<double> xrow(static_cast<std::size_t>(p_cov));
    double yval = 0.0, tval = 0.0, eval_ = 0.0;
    bool complete = true;
    for (int j = 0; j < p_cov && complete; ++j)
      complete = detail::parse_cell(cell_at(formula.covariates[static_cast<std::size_t>(j)]),
                                    row, formula.covariates[static_cast<std::size_t>(j)],
                                    &xrow[static_cast<std::size_t>(j)]);
    if (complete) {
      if (survival) {
        complete = detail::parse_cell(cell_at(formula.time_col), row, formula.time_col, &tval) &&
                   detail::parse_cell(cell_at(formula.event_col), row, formula.event_col, &eval_);
        if (complete && eval_ != 0.0 && eval_ != 1.0)
          throw data_error("event indicator must be 0 or 1 at data row " + std::to_string(row));
        if (complete && tval < 0.0)
          throw data_error("negative time at data row " + std::to_string(row));
      } else {
        double acc = 0.0;
        for (const std::string& c : formula.outcome) {
          double v = 0.0;
          complete = detail::parse_cell(cell_at(c), row, c, &v);
          if (!complete) break;
          acc += v;
        }
        if (complete) yval = acc / static_cast<double>(formula.outcome.size());
      }
    }
    if (!complete) {
      ++dropped;
      continue;
    }
    for (double v : xrow) xs.push_back(v);
    if (survival) {
      times.push_back(tval);
      events.push_back(eval_);
    } else {
      ys.push_back(yval);
    }
  }
  const int n = survival ? static_cast<int>(times.size()) : static_cast<int>(ys.size());
  if (n == 0) throw data_error("no usable rows in " + path);

  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    int col = 0;
    if (formula.intercept) X(i, col++) = 1.0;
    for (int j = 0; j < p_cov; ++j)
      X(i, col++) = xs[static_cast<std::size_t>(i) * p_cov + static_cast<std::size_t>(j)];
  }
  std::vector<std::string> names;
  if (formula.intercept) names.push_back("(Intercept)");
  for (const std::string& c : formula.covariates) names.push_back(c);

  std::vector<std::string> warnings;
  if (dropped > 0)
    warnings.push_back("dropped " + std::to_string(dropped) +
                       " row(s) with missing values in referenced columns");

  if (survival) {
    Eigen::VectorXd t(n);
    Eigen::ArrayXd e(n);
    for (int i = 0; i < n; ++i) {
      t(i) = times[static_cast<std::size_t>(i)];
      e(i) = events[static_cast<std::size_t>(i)];
    }
    return IngestResult{Dataset(std::move(X), std::move(t), std::move(e)), std::move(names),
                        dropped, std::move(warnings)};
  }
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = ys[static_cast<std::size_t>(i)];
  return IngestResult{Dataset(std::move(X), std::move(y)), std::move(names), dropped,
                      std::move(warnings)};
}

}  // namespace brse

#endif  // BRSE_CSV_HPP
