#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace fraudlab {

struct Confusion {
  long long tp = 0, fp = 0, tn = 0, fn = 0;
};

// Decision rule is strictly greater than the threshold: p > tau predicts 1.
inline Confusion confusion_counts(const std::vector<int>& labels,
                                  const std::vector<double>& probs, double tau) {
  if (labels.size() != probs.size())
    throw std::invalid_argument("confusion_counts: size mismatch");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bool pred = probs[i] > tau;
    if (labels[i] == 1)
      (pred ? c.tp : c.fn)++;
    else
      (pred ? c.fp : c.tn)++;
  }
  return c;
}

struct Prf {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// Zero-denominator convention: a metric whose denominator is zero is 0.
inline Prf prf_from_confusion(const Confusion& c) {
  Prf m;
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

inline double composite_score(double precision, double recall) {
  return 0.5 * precision + 0.5 * recall;
}

// Rank-based ROC AUC (Mann-Whitney with mid-ranks for ties), threshold-free.
inline double auc_roc(const std::vector<int>& labels, const std::vector<double>& probs) {
  if (labels.size() != probs.size())
    throw std::invalid_argument("auc_roc: size mismatch");
  std::size_t n = labels.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y == 1;
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc_roc: needs at least one positive and one negative");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });

  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && probs[order[j]] == probs[order[i]]) ++j;
    // ranks i+1 .. j (1-based) share the mid-rank
    double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] == 1) pos_rank_sum += mid;
    i = j;
  }
  double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

// Everything a scoreboard row needs: counts at the decision threshold,
// threshold-free AUC, and the composite used for model selection.
struct MetricsReport {
  Confusion counts;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  double auc = 0.0;
  double composite = 0.0;
  double threshold = 0.5;
};

inline MetricsReport evaluate_probs(const std::vector<int>& labels,
                                    const std::vector<double>& probs, double tau) {
  MetricsReport r;
  r.counts = confusion_counts(labels, probs, tau);
  Prf p = prf_from_confusion(r.counts);
  r.precision = p.precision;
  r.recall = p.recall;
  r.f1 = p.f1;
  r.auc = auc_roc(labels, probs);
  r.composite = composite_score(p.precision, p.recall);
  r.threshold = tau;
  return r;
}

}  // namespace fraudlab
