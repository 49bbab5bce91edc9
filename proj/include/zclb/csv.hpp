#pragma once

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "zclb/kalman.hpp"
#include "zclb/panel.hpp"

namespace zclb {

// File-format error carrying the 1-based line number (0 = whole file).
class CsvError : public std::runtime_error {
 public:
  explicit CsvError(const std::string& msg, long line = 0)
      : std::runtime_error(line > 0 ? msg + " (line " + std::to_string(line) +
                                          ")"
                                    : msg),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline bool is_missing_token(const std::string& s) {
  if (s.empty()) return true;
  std::string lower;
  for (char c : s) lower += static_cast<char>(std::tolower(c));
  return lower == "nan" || lower == "na" || lower == "null";
}

inline double parse_number(const std::string& s, long line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw CsvError("cannot parse number '" + s + "'", line);
  return v;
}

inline std::string fmt12(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

// Writes the whole file through a temporary sibling and an atomic rename, so
// a failure never leaves a partial output behind.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    os << content;
    if (!os) {
      os.close();
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

inline bool is_treasury_header(const std::string& header) {
  return header.find("Open") != std::string::npos &&
         header.find("Close") != std::string::npos;
}

// Reads a Yahoo-style quote file (Date,Open,High,Low,Close,Adj Close,Volume)
// into a single-tenor panel. Quotes are percent and are converted to
// decimals; NaN or empty cells become missing entries.
inline YieldPanel parse_treasury_csv(const std::filesystem::path& path,
                                     const std::string& column = "Adj Close",
                                     double tenor_years = 10.0) {
  std::ifstream is(path);
  if (!is) throw CsvError("cannot open " + path.string());

  std::string line;
  if (!std::getline(is, line)) throw CsvError("no data rows");
  const std::vector<std::string> header = detail::split_csv(line);

  long date_col = -1, value_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "Date") date_col = static_cast<long>(i);
    if (header[i] == column) value_col = static_cast<long>(i);
  }
  if (date_col < 0) throw CsvError("header has no 'Date' column", 1);
  if (value_col < 0)
    throw CsvError("header has no '" + column + "' column", 1);

  YieldPanel panel;
  panel.tenors = {tenor_years};
  panel.source_file = path.string();
  panel.source_units = "percent";
  std::vector<double> values;

  long line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_csv(line);
    if (static_cast<long>(fields.size()) <= std::max(date_col, value_col))
      throw CsvError("too few fields", line_no);

    const auto date = parse_date(fields[static_cast<std::size_t>(date_col)]);
    if (!date)
      throw CsvError("cannot parse date '" +
                         fields[static_cast<std::size_t>(date_col)] + "'",
                     line_no);

    const std::string& cell = fields[static_cast<std::size_t>(value_col)];
    double v;
    if (detail::is_missing_token(cell)) {
      v = std::numeric_limits<double>::quiet_NaN();
    } else {
      v = detail::parse_number(cell, line_no) / 100.0;
      if (v < 0.0)
        throw CsvError("negative yield after percent conversion: " +
                           detail::fmt12(v),
                       line_no);
    }
    panel.dates.push_back(*date);
    values.push_back(v);
  }
  if (values.empty()) throw CsvError("no data rows");

  panel.values.resize(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i)
    panel.values(static_cast<Eigen::Index>(i), 0) = values[i];
  panel.validate();
  return panel;
}

// Native panel format: header "Date,<tenor>,<tenor>,...", decimal yields,
// empty cell = missing. Round-trips through write_panel_csv at 12
// significant digits.
inline YieldPanel read_panel_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw CsvError("cannot open " + path.string());

  std::string line;
  if (!std::getline(is, line)) throw CsvError("no data rows");
  const std::vector<std::string> header = detail::split_csv(line);
  if (header.empty() || header[0] != "Date")
    throw CsvError("panel header must start with 'Date'", 1);
  if (header.size() < 2) throw CsvError("panel header has no tenors", 1);

  YieldPanel panel;
  panel.source_file = path.string();
  for (std::size_t i = 1; i < header.size(); ++i)
    panel.tenors.push_back(detail::parse_number(header[i], 1));

  std::vector<std::vector<double>> rows;
  long line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_csv(line);
    if (fields.size() != header.size())
      throw CsvError("expected " + std::to_string(header.size()) +
                         " fields, got " + std::to_string(fields.size()),
                     line_no);
    const auto date = parse_date(fields[0]);
    if (!date) throw CsvError("cannot parse date '" + fields[0] + "'", line_no);
    panel.dates.push_back(*date);
    std::vector<double> row;
    for (std::size_t j = 1; j < fields.size(); ++j)
      row.push_back(detail::is_missing_token(fields[j])
                        ? std::numeric_limits<double>::quiet_NaN()
                        : detail::parse_number(fields[j], line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError("no data rows");

  panel.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(panel.tenors.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      panel.values(static_cast<Eigen::Index>(i),
                   static_cast<Eigen::Index>(j)) = rows[i][j];
  panel.validate();
  return panel;
}

inline std::string panel_to_csv(const YieldPanel& panel) {
  std::ostringstream os;
  os << "Date";
  for (double t : panel.tenors) os << ',' << detail::fmt12(t);
  os << '\n';
  for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
    os << format_date(panel.dates[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < panel.values.cols(); ++j) {
      os << ',';
      if (!std::isnan(panel.values(i, j)))
        os << detail::fmt12(panel.values(i, j));
    }
    os << '\n';
  }
  return os.str();
}

inline void write_panel_csv(const std::filesystem::path& path,
                            const YieldPanel& panel) {
  atomic_write_file(path, panel_to_csv(panel));
}

// Filtered-state schema: date, x_r, x_lambda, var_r, var_lambda, one
// innovation column per tenor (empty when unobserved), step_loglik.
inline std::string filter_output_to_csv(const YieldPanel& panel,
                                        const FilterOutput& out) {
  std::ostringstream os;
  os << "date,x_r,x_lambda,var_r,var_lambda";
  for (double t : panel.tenors) os << ",innovation_" << detail::fmt12(t);
  os << ",step_loglik\n";
  for (std::size_t i = 0; i < out.steps.size(); ++i) {
    const FilterStep& s = out.steps[i];
    os << format_date(panel.dates[i]) << ',' << detail::fmt12(s.filtered_mean(0))
       << ',' << detail::fmt12(s.filtered_mean(1)) << ','
       << detail::fmt12(s.filtered_cov(0, 0)) << ','
       << detail::fmt12(s.filtered_cov(1, 1));
    std::vector<std::string> cells(panel.tenors.size());
    for (std::size_t k = 0; k < s.observed.size(); ++k)
      cells[static_cast<std::size_t>(s.observed[k])] =
          detail::fmt12(s.innovation(static_cast<Eigen::Index>(k)));
    for (const std::string& c : cells) os << ',' << c;
    os << ',' << detail::fmt12(s.step_loglik) << '\n';
  }
  return os.str();
}

inline void write_filter_csv(const std::filesystem::path& path,
                             const YieldPanel& panel, const FilterOutput& out) {
  atomic_write_file(path, filter_output_to_csv(panel, out));
}

}  // namespace zclb
