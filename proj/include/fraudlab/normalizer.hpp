#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraudlab/matrix.hpp"

namespace fraudlab {

// Quantile with linear interpolation between order statistics: position
// q * (n - 1) into the sorted values.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty input");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0,1]");
  double pos = q * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Median / IQR scaling, fitted per column. Outliers are the signal in fraud
// data, so mean / std scaling would let a handful of extreme rows set the
// scale for everyone; median and IQR do not care about them. A zero IQR
// falls back to divisor 1 so constant columns pass through shifted only.
struct RobustNormalizer {
  std::vector<double> medians;
  std::vector<double> divisors;
  std::vector<std::string> columns;

  std::size_t dim() const { return medians.size(); }
};

inline RobustNormalizer fit_normalizer(const Matrix& x,
                                       const std::vector<std::string>& columns) {
  if (x.rows == 0) throw std::invalid_argument("fit_normalizer: no rows");
  if (columns.size() != x.cols)
    throw std::invalid_argument("fit_normalizer: column name count mismatch");
  check_finite(x, "fit_normalizer input");
  RobustNormalizer nz;
  nz.columns = columns;
  nz.medians.resize(x.cols);
  nz.divisors.resize(x.cols);
  std::vector<double> col(x.rows);
  for (std::size_t j = 0; j < x.cols; ++j) {
    for (std::size_t i = 0; i < x.rows; ++i) col[i] = x(i, j);
    std::sort(col.begin(), col.end());
    nz.medians[j] = quantile_sorted(col, 0.5);
    double iqr = quantile_sorted(col, 0.75) - quantile_sorted(col, 0.25);
    nz.divisors[j] = iqr == 0.0 ? 1.0 : iqr;
  }
  return nz;
}

inline Matrix normalizer_apply(const RobustNormalizer& nz, const Matrix& x) {
  if (x.cols != nz.dim())
    throw std::invalid_argument("normalizer_apply: dimension mismatch");
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j)
      out(i, j) = (x(i, j) - nz.medians[j]) / nz.divisors[j];
  return out;
}

inline Matrix normalizer_invert(const RobustNormalizer& nz, const Matrix& x) {
  if (x.cols != nz.dim())
    throw std::invalid_argument("normalizer_invert: dimension mismatch");
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j)
      out(i, j) = x(i, j) * nz.divisors[j] + nz.medians[j];
  return out;
}

}  // namespace fraudlab
