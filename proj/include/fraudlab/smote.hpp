#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "fraudlab/matrix.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab {

// k nearest neighbors per row, Euclidean distance, self excluded. Distance
// ties break toward the lower row index so results never depend on sort
// internals. k is capped at n - 1.
inline std::vector<std::vector<std::size_t>> knn_indices(const Matrix& x, std::size_t k) {
  if (k < 1) throw std::invalid_argument("knn_indices: k must be >= 1");
  if (x.rows < 2) throw std::invalid_argument("knn_indices: need at least 2 rows");
  std::size_t k_eff = std::min(k, x.rows - 1);
  std::vector<std::vector<std::size_t>> out(x.rows);
  std::vector<std::pair<double, std::size_t>> dists;
  dists.reserve(x.rows - 1);
  for (std::size_t i = 0; i < x.rows; ++i) {
    dists.clear();
    for (std::size_t j = 0; j < x.rows; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (std::size_t c = 0; c < x.cols; ++c) {
        double d = x(i, c) - x(j, c);
        d2 += d * d;
      }
      dists.emplace_back(d2, j);
    }
    std::partial_sort(dists.begin(), dists.begin() + k_eff, dists.end());
    out[i].reserve(k_eff);
    for (std::size_t t = 0; t < k_eff; ++t) out[i].push_back(dists[t].second);
  }
  return out;
}

// Classic minority interpolation: pick a minority row i, one of its k
// nearest minority neighbors j, and emit x_i + alpha (x_j - x_i) with alpha
// uniform in [0, 1). Every synthetic point therefore lies on a segment
// between two real minority rows. Draw order per sample is pinned: row pick,
// neighbor pick, alpha.
inline Matrix smote_sample(const Matrix& minority, std::size_t count, std::size_t k,
                           uint64_t seed) {
  if (count == 0) return Matrix(0, minority.cols);
  if (minority.rows < 2)
    throw std::invalid_argument("smote_sample: need at least 2 minority rows");
  std::vector<std::vector<std::size_t>> nn = knn_indices(minority, k);
  std::size_t k_eff = nn[0].size();
  Rng rng(seed);
  Matrix out(count, minority.cols);
  for (std::size_t t = 0; t < count; ++t) {
    std::size_t i = rng.uniform_index(minority.rows);
    std::size_t j = nn[i][rng.uniform_index(k_eff)];
    double alpha = rng.uniform();
    for (std::size_t c = 0; c < minority.cols; ++c)
      out(t, c) = minority(i, c) + alpha * (minority(j, c) - minority(i, c));
  }
  return out;
}

}  // namespace fraudlab
