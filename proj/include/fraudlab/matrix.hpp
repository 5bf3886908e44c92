#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraudlab {

// Dense row-major matrix of doubles; the one numeric container shared by all
// models. Rows are samples, columns are features unless stated otherwise.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix row_vector(std::vector<double> v) {
    Matrix m;
    m.rows = 1;
    m.cols = v.size();
    m.data = std::move(v);
    return m;
  }

  static Matrix column_vector(std::vector<double> v) {
    Matrix m;
    m.rows = v.size();
    m.cols = 1;
    m.data = std::move(v);
    return m;
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows_in) {
    if (rows_in.empty()) return Matrix();
    Matrix m(rows_in.size(), rows_in[0].size());
    for (std::size_t i = 0; i < rows_in.size(); ++i) {
      if (rows_in[i].size() != m.cols)
        throw std::invalid_argument("from_rows: ragged rows");
      for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows_in[i][j];
    }
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  std::vector<double> row(std::size_t i) const {
    return std::vector<double>(data.begin() + i * cols, data.begin() + (i + 1) * cols);
  }

  void fill(double v) { data.assign(data.size(), v); }
};

inline void check_same_shape(const Matrix& a, const Matrix& b, const char* who) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument(std::string(who) + ": shape mismatch " +
                                std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                                " vs " + std::to_string(b.rows) + "x" +
                                std::to_string(b.cols));
}

// c = a * b
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dims differ");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

// c = a * b^T
inline Matrix matmul_abt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw std::invalid_argument("matmul_abt: inner dims differ");
  Matrix c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  return c;
}

// c = a^T * b
inline Matrix matmul_atb(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw std::invalid_argument("matmul_atb: inner dims differ");
  Matrix c(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k)
    for (std::size_t i = 0; i < a.cols; ++i) {
      double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aki * b(k, j);
    }
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "add");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data[i] += b.data[i];
  return c;
}

inline Matrix sub(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "sub");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data[i] -= b.data[i];
  return c;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "hadamard");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data[i] *= b.data[i];
  return c;
}

inline Matrix scale(const Matrix& a, double s) {
  Matrix c = a;
  for (double& v : c.data) v *= s;
  return c;
}

inline void add_inplace(Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "add_inplace");
  for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += b.data[i];
}

// Adds a 1 x cols row vector to every row.
inline void add_row_inplace(Matrix& a, const Matrix& r) {
  if (r.rows != 1 || r.cols != a.cols)
    throw std::invalid_argument("add_row_inplace: want 1 x cols");
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) a(i, j) += r(0, j);
}

inline Matrix col_sums(const Matrix& a) {
  Matrix s(1, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) s(0, j) += a(i, j);
  return s;
}

inline Matrix col_means(const Matrix& a) {
  if (a.rows == 0) throw std::invalid_argument("col_means: empty matrix");
  Matrix m = col_sums(a);
  for (double& v : m.data) v /= static_cast<double>(a.rows);
  return m;
}

inline Matrix take_rows(const Matrix& a, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), a.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= a.rows) throw std::out_of_range("take_rows: index out of range");
    for (std::size_t j = 0; j < a.cols; ++j) out(i, j) = a(idx[i], j);
  }
  return out;
}

inline Matrix vcat(const Matrix& a, const Matrix& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.cols != b.cols) throw std::invalid_argument("vcat: column counts differ");
  Matrix c(a.rows + b.rows, a.cols);
  std::copy(a.data.begin(), a.data.end(), c.data.begin());
  std::copy(b.data.begin(), b.data.end(), c.data.begin() + a.data.size());
  return c;
}

inline void check_finite(const Matrix& a, const char* context) {
  for (double v : a.data)
    if (!std::isfinite(v))
      throw std::runtime_error(std::string("non-finite value in ") + context);
}

// Elementwise activations used across models. relu clamps negatives to zero;
// sigmoid is computed in the numerically stable split form; softmax is
// row-wise with max subtraction.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline Matrix relu(const Matrix& a) {
  Matrix c = a;
  for (double& v : c.data) v = v > 0.0 ? v : 0.0;
  return c;
}

inline Matrix sigmoid(const Matrix& a) {
  Matrix c = a;
  for (double& v : c.data) v = sigmoid(v);
  return c;
}

inline Matrix softmax(const Matrix& a) {
  Matrix c = a;
  for (std::size_t i = 0; i < a.rows; ++i) {
    double mx = a(i, 0);
    for (std::size_t j = 1; j < a.cols; ++j) mx = std::max(mx, a(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) {
      c(i, j) = std::exp(a(i, j) - mx);
      sum += c(i, j);
    }
    for (std::size_t j = 0; j < a.cols; ++j) c(i, j) /= sum;
  }
  return c;
}

}  // namespace fraudlab
