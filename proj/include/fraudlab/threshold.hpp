#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fraudlab/matrix.hpp"
#include "fraudlab/metrics.hpp"

namespace fraudlab {

struct ThresholdConfig {
  double sharpness = 50.0;  // slope of the soft decision
  double lr = 0.05;
  int steps = 2000;
  double theta0 = 0.0;  // logit of the initial threshold, sigma(0) = 0.5
};

struct ThresholdFit {
  double tau = 0.5;      // threshold with the best hard F1 seen
  double best_f1 = 0.0;  // that F1
  double final_tau = 0.5;  // where gradient descent actually ended up
  bool degenerate = false;
};

// Learns a decision threshold by gradient descent on a smooth surrogate:
// tau = sigma(theta), soft prediction q_i = sigma(sharpness * (p_i - tau)),
// loss = mean (q_i - y_i)^2. The surrogate landscape is bumpy, so the hard
// F1 is evaluated at every visited tau and the best one is returned rather
// than the last.
inline ThresholdFit fit_threshold(const std::vector<double>& probs,
                                  const std::vector<int>& labels,
                                  const ThresholdConfig& cfg = {}) {
  if (probs.size() != labels.size())
    throw std::invalid_argument("fit_threshold: size mismatch");
  if (probs.empty()) throw std::invalid_argument("fit_threshold: empty input");

  bool all_same = true;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] != probs[0]) {
      all_same = false;
      break;
    }
  if (all_same) return {0.5, 0.0, 0.5, true};

  double n = static_cast<double>(probs.size());
  double theta = cfg.theta0;
  ThresholdFit fit;
  fit.best_f1 = -1.0;

  // Ties break toward the latest visited tau: once descent has entered the
  // F1-optimal plateau it keeps settling toward the surrogate optimum in the
  // middle of the class gap, which generalizes better than the plateau edge.
  auto consider = [&](double tau) {
    Prf m = prf_from_confusion(confusion_counts(labels, probs, tau));
    if (m.f1 >= fit.best_f1) {
      fit.best_f1 = m.f1;
      fit.tau = tau;
    }
  };

  consider(sigmoid(theta));
  for (int step = 0; step < cfg.steps; ++step) {
    double tau = sigmoid(theta);
    // d(loss)/d(theta) via q_i and tau = sigma(theta)
    double dtau = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      double q = sigmoid(cfg.sharpness * (probs[i] - tau));
      double dq = 2.0 * (q - static_cast<double>(labels[i])) / n;
      dtau += dq * q * (1.0 - q) * (-cfg.sharpness);
    }
    double dtheta = dtau * tau * (1.0 - tau);
    theta -= cfg.lr * dtheta;
    consider(sigmoid(theta));
  }
  fit.final_tau = sigmoid(theta);
  if (fit.best_f1 < 0.0) fit.best_f1 = 0.0;
  return fit;
}

}  // namespace fraudlab
