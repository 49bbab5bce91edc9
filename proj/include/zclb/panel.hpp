#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace zclb {

using Date = std::chrono::year_month_day;

inline std::chrono::sys_days to_days(const Date& d) {
  return std::chrono::sys_days(d);
}

// Parses "YYYY-MM-DD"; rejects malformed strings and impossible dates.
inline std::optional<Date> parse_date(std::string_view s) {
  int y = 0, m = 0, d = 0;
  char extra = 0;
  const std::string buf(s);
  if (std::sscanf(buf.c_str(), "%d-%d-%d%c", &y, &m, &d, &extra) != 3)
    return std::nullopt;
  const Date date{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                  std::chrono::day{unsigned(d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(d.year()),
                unsigned(d.month()), unsigned(d.day()));
  return buf;
}

// Time-indexed yield observations over a maturity grid. NaN marks a missing
// entry; a fully-NaN row is a calendar date with no quote (it still occupies
// one filter step).
struct YieldPanel {
  std::vector<Date> dates;      // strictly increasing
  std::vector<double> tenors;   // years, strictly increasing
  Eigen::MatrixXd values;       // dates.size() x tenors.size(), decimal yields
  std::string source_file;      // metadata
  std::string source_units = "decimal";

  Eigen::Index n_rows() const { return values.rows(); }
  Eigen::Index n_tenors() const { return values.cols(); }

  Eigen::Index n_observed() const {
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      for (Eigen::Index j = 0; j < values.cols(); ++j)
        if (!std::isnan(values(i, j))) ++n;
    return n;
  }

  // Rows with at least one observed entry.
  Eigen::Index n_observed_rows() const {
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      for (Eigen::Index j = 0; j < values.cols(); ++j)
        if (!std::isnan(values(i, j))) {
          ++n;
          break;
        }
    return n;
  }

  void validate() const {
    if (static_cast<Eigen::Index>(dates.size()) != values.rows())
      throw std::invalid_argument("YieldPanel: dates/values row mismatch");
    if (static_cast<Eigen::Index>(tenors.size()) != values.cols())
      throw std::invalid_argument("YieldPanel: tenors/values column mismatch");
    for (std::size_t i = 1; i < dates.size(); ++i)
      if (!(to_days(dates[i - 1]) < to_days(dates[i])))
        throw std::invalid_argument(
            "YieldPanel: dates must be strictly increasing (violation at row " +
            std::to_string(i) + ")");
    for (std::size_t i = 0; i < tenors.size(); ++i) {
      if (!(tenors[i] > 0.0) || !std::isfinite(tenors[i]))
        throw std::invalid_argument("YieldPanel: tenors must be positive");
      if (i > 0 && !(tenors[i] > tenors[i - 1]))
        throw std::invalid_argument(
            "YieldPanel: tenors must be strictly increasing");
    }
    Eigen::Index observed = 0;
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      for (Eigen::Index j = 0; j < values.cols(); ++j) {
        const double v = values(i, j);
        if (std::isnan(v)) continue;
        if (!std::isfinite(v))
          throw std::invalid_argument(
              "YieldPanel: observed value at row " + std::to_string(i) +
              " is not finite");
        ++observed;
      }
    if (observed == 0)
      throw std::invalid_argument("YieldPanel: no observed entries");
  }
};

}  // namespace zclb
