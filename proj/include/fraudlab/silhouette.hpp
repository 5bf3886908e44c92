#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fraudlab/matrix.hpp"

namespace fraudlab {

// Mean silhouette coefficient with Euclidean distance, O(n^2). For each
// point: a = mean distance to its own cluster (self excluded), b = smallest
// mean distance to any other cluster, s = (b - a) / max(a, b). A point that
// is alone in its cluster gets s = 0.
inline double silhouette_score(const Matrix& x, const std::vector<int>& labels) {
  if (x.rows != labels.size())
    throw std::invalid_argument("silhouette_score: size mismatch");
  if (x.rows < 2) throw std::invalid_argument("silhouette_score: need at least 2 points");

  std::vector<int> uniq(labels);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < 2)
    throw std::invalid_argument("silhouette_score: need at least 2 clusters");

  std::size_t n_clusters = uniq.size();
  std::vector<std::size_t> cluster_of(x.rows);
  std::vector<std::size_t> cluster_size(n_clusters, 0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    cluster_of[i] =
        std::lower_bound(uniq.begin(), uniq.end(), labels[i]) - uniq.begin();
    cluster_size[cluster_of[i]]++;
  }

  double total = 0.0;
  std::vector<double> sums(n_clusters);
  for (std::size_t i = 0; i < x.rows; ++i) {
    if (cluster_size[cluster_of[i]] == 1) continue;  // s = 0 for singleton members
    std::fill(sums.begin(), sums.end(), 0.0);
    const double* xi = &x.data[i * x.cols];
    for (std::size_t j = 0; j < x.rows; ++j) {
      if (j == i) continue;
      const double* xj = &x.data[j * x.cols];
      double d2 = 0.0;
      for (std::size_t k = 0; k < x.cols; ++k) {
        double d = xi[k] - xj[k];
        d2 += d * d;
      }
      sums[cluster_of[j]] += std::sqrt(d2);
    }
    std::size_t own = cluster_of[i];
    double a = sums[own] / static_cast<double>(cluster_size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_clusters; ++c) {
      if (c == own) continue;
      b = std::min(b, sums[c] / static_cast<double>(cluster_size[c]));
    }
    double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(x.rows);
}

}  // namespace fraudlab
