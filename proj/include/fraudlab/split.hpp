#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fraudlab/rng.hpp"

namespace fraudlab {

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Stratified train/validation split. Counts are pinned exactly:
//   minority rows in train = floor(n_minority * ratio)
//   total rows in train    = floor(n * ratio)
//   majority rows in train = total - minority rows in train
// The minority class is the rarer label (ties go to class 1). Membership is
// randomized by a seeded shuffle inside each class pool before the cut; the
// returned index lists are sorted so the output is canonical.
inline SplitIndices stratified_split(const std::vector<int>& labels, double ratio,
                                     uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("stratified_split: ratio must be in (0,1)");
  std::vector<std::size_t> pool0, pool1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0)
      pool0.push_back(i);
    else if (labels[i] == 1)
      pool1.push_back(i);
    else
      throw std::invalid_argument("stratified_split: labels must be 0/1");
  }
  if (pool0.empty() || pool1.empty())
    throw std::invalid_argument("stratified_split: both classes must be present");

  bool minority_is_1 = pool1.size() <= pool0.size();
  std::vector<std::size_t>& min_pool = minority_is_1 ? pool1 : pool0;
  std::vector<std::size_t>& maj_pool = minority_is_1 ? pool0 : pool1;

  std::size_t n = labels.size();
  std::size_t min_train =
      static_cast<std::size_t>(std::floor(static_cast<double>(min_pool.size()) * ratio));
  std::size_t total_train =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio));
  if (total_train < min_train)
    throw std::invalid_argument("stratified_split: inconsistent counts");
  std::size_t maj_train = total_train - min_train;
  if (maj_train > maj_pool.size())
    throw std::invalid_argument("stratified_split: majority pool too small for ratio");

  Rng rng(seed);
  rng.shuffle(min_pool);
  rng.shuffle(maj_pool);

  SplitIndices out;
  out.train.insert(out.train.end(), min_pool.begin(), min_pool.begin() + min_train);
  out.val.insert(out.val.end(), min_pool.begin() + min_train, min_pool.end());
  out.train.insert(out.train.end(), maj_pool.begin(), maj_pool.begin() + maj_train);
  out.val.insert(out.val.end(), maj_pool.begin() + maj_train, maj_pool.end());

  if (out.train.empty() || out.val.empty() || min_train == 0 ||
      min_train == min_pool.size() || maj_train == 0 || maj_train == maj_pool.size())
    throw std::invalid_argument(
        "stratified_split: a class would be empty in train or val; adjust ratio");

  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

}  // namespace fraudlab
