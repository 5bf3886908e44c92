#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraudlab/dataset.hpp"
#include "fraudlab/matrix.hpp"
#include "fraudlab/rng.hpp"

namespace fraudlab {

// Desk-scale stand-in for the transaction data: two unit-variance Gaussian
// blobs whose centers differ by `separation` in the first `separated_dims`
// coordinates and coincide elsewhere. The minority class is the fraud label.
struct SyntheticConfig {
  std::size_t rows = 20000;
  std::size_t dim = 30;
  double minority_fraction = 0.005;
  double separation = 4.0;
  std::size_t separated_dims = 5;
  uint64_t seed = 1;
};

inline Dataset make_two_gaussians(const SyntheticConfig& cfg) {
  if (cfg.rows < 4) throw std::invalid_argument("make_two_gaussians: too few rows");
  if (cfg.dim < 1 || cfg.separated_dims > cfg.dim)
    throw std::invalid_argument("make_two_gaussians: bad dimensions");
  if (!(cfg.minority_fraction > 0.0 && cfg.minority_fraction < 0.5))
    throw std::invalid_argument("make_two_gaussians: minority_fraction in (0, 0.5)");
  std::size_t n_minority = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.rows) * cfg.minority_fraction));
  if (n_minority < 2) n_minority = 2;

  Rng rng(cfg.seed);
  Dataset ds;
  ds.features = Matrix(cfg.rows, cfg.dim);
  ds.labels.assign(cfg.rows, 0);

  // class pattern first, then one shuffle so row order carries no signal
  std::vector<int> labels(cfg.rows, 0);
  for (std::size_t i = 0; i < n_minority; ++i) labels[i] = 1;
  rng.shuffle(labels);

  for (std::size_t i = 0; i < cfg.rows; ++i) {
    ds.labels[i] = labels[i];
    for (std::size_t j = 0; j < cfg.dim; ++j) {
      double center = (labels[i] == 1 && j < cfg.separated_dims) ? cfg.separation : 0.0;
      ds.features(i, j) = center + rng.normal();
    }
  }

  if (cfg.dim == 30) {
    // mirror the transaction schema so CSVs are drop-in compatible
    ds.columns.push_back("Time");
    for (int v = 1; v <= 28; ++v) ds.columns.push_back("V" + std::to_string(v));
    ds.columns.push_back("Amount");
  } else {
    for (std::size_t j = 0; j < cfg.dim; ++j)
      ds.columns.push_back("x" + std::to_string(j));
  }
  return ds;
}

}  // namespace fraudlab
