#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fraudlab/matrix.hpp"

namespace fraudlab {

struct Pca {
  Matrix mean;          // 1 x d
  Matrix components;    // d x k, columns are principal axes
  std::vector<double> eigenvalues;
  std::vector<double> explained_ratio;  // eigenvalue / trace of covariance
};

// PCA of the top k components via power iteration with deflation on the
// sample covariance (divisor n - 1). Deterministic: iteration always starts
// from the normalized all-ones vector, and each component's sign is fixed so
// its largest-magnitude loading is positive.
inline Pca fit_pca(const Matrix& x, std::size_t k) {
  if (x.rows < 2) throw std::invalid_argument("fit_pca: need at least 2 rows");
  if (k < 1 || k > x.cols) throw std::invalid_argument("fit_pca: bad component count");

  Pca p;
  p.mean = col_means(x);
  Matrix centered = x;
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) centered(i, j) -= p.mean(0, j);

  Matrix cov = matmul_atb(centered, centered);
  double inv = 1.0 / static_cast<double>(x.rows - 1);
  for (double& v : cov.data) v *= inv;

  double trace = 0.0;
  for (std::size_t j = 0; j < x.cols; ++j) trace += cov(j, j);
  if (trace <= 0.0) throw std::invalid_argument("fit_pca: data has zero variance");

  std::size_t d = x.cols;
  p.components = Matrix(d, k);
  for (std::size_t comp = 0; comp < k; ++comp) {
    std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
    std::vector<double> next(d);
    for (int iter = 0; iter < 5000; ++iter) {
      for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += cov(i, j) * v[j];
        next[i] = s;
      }
      double norm = 0.0;
      for (double t : next) norm += t * t;
      norm = std::sqrt(norm);
      if (norm == 0.0) break;  // deflated to nothing; keep current v
      double diff = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        next[i] /= norm;
        diff = std::max(diff, std::fabs(next[i] - v[i]));
      }
      v = next;
      if (diff < 1e-13) break;
    }
    // Rayleigh quotient for the eigenvalue.
    double lambda = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += cov(i, j) * v[j];
      lambda += v[i] * s;
    }
    // Sign convention: largest |loading| ends positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < d; ++i)
      if (std::fabs(v[i]) > std::fabs(v[arg])) arg = i;
    if (v[arg] < 0.0)
      for (double& t : v) t = -t;

    for (std::size_t i = 0; i < d; ++i) p.components(i, comp) = v[i];
    p.eigenvalues.push_back(lambda);
    p.explained_ratio.push_back(lambda / trace);

    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov(i, j) -= lambda * v[i] * v[j];
  }
  return p;
}

// Projects rows onto the fitted axes: (x - mean) * components.
inline Matrix pca_project(const Pca& p, const Matrix& x) {
  if (x.cols != p.components.rows)
    throw std::invalid_argument("pca_project: dimension mismatch");
  Matrix centered = x;
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) centered(i, j) -= p.mean(0, j);
  return matmul(centered, p.components);
}

}  // namespace fraudlab
