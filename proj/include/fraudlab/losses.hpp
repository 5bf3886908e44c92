#pragma once

#include <cmath>
#include <utility>

#include "fraudlab/matrix.hpp"

namespace fraudlab {

// Probabilities are clipped to [kProbEps, 1 - kProbEps] before any log.
// Gradients are taken through the clipped function, so they vanish outside
// the clip range; finite-difference checks then agree with the analytic
// gradients everywhere.
inline constexpr double kProbEps = 1e-7;

inline double clip_prob(double p) {
  if (p < kProbEps) return kProbEps;
  if (p > 1.0 - kProbEps) return 1.0 - kProbEps;
  return p;
}

inline bool prob_clipped(double p) { return p < kProbEps || p > 1.0 - kProbEps; }

// Mean squared error over all elements.
inline double mse_loss(const Matrix& x, const Matrix& x_rec) {
  check_same_shape(x, x_rec, "mse_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x_rec.data[i] - x.data[i];
    s += d * d;
  }
  return s / static_cast<double>(x.size());
}

// d(mse)/d(x_rec)
inline Matrix mse_grad(const Matrix& x, const Matrix& x_rec) {
  check_same_shape(x, x_rec, "mse_grad");
  Matrix g(x.rows, x.cols);
  double inv = 2.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    g.data[i] = inv * (x_rec.data[i] - x.data[i]);
  return g;
}

inline double bce_loss(const Matrix& y, const Matrix& yhat) {
  check_same_shape(y, yhat, "bce_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double p = clip_prob(yhat.data[i]);
    s += -y.data[i] * std::log(p) - (1.0 - y.data[i]) * std::log(1.0 - p);
  }
  return s / static_cast<double>(y.size());
}

inline Matrix bce_grad(const Matrix& y, const Matrix& yhat) {
  check_same_shape(y, yhat, "bce_grad");
  Matrix g(y.rows, y.cols);
  double inv = 1.0 / static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (prob_clipped(yhat.data[i])) continue;
    double p = yhat.data[i];
    g.data[i] = inv * (-y.data[i] / p + (1.0 - y.data[i]) / (1.0 - p));
  }
  return g;
}

struct FocalConfig {
  double alpha = 0.95;
  double gamma = 2.0;
};

// Focal loss on probabilities. alpha weights the positive class, gamma
// down-weights easy examples. With gamma = 0 and alpha = 0.5 this reduces to
// exactly half the binary cross entropy.
inline double focal_loss(const FocalConfig& cfg, const Matrix& y, const Matrix& yhat) {
  check_same_shape(y, yhat, "focal_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double p = clip_prob(yhat.data[i]);
    double yi = y.data[i];
    s += -cfg.alpha * yi * std::pow(1.0 - p, cfg.gamma) * std::log(p) -
         (1.0 - cfg.alpha) * (1.0 - yi) * std::pow(p, cfg.gamma) * std::log(1.0 - p);
  }
  return s / static_cast<double>(y.size());
}

inline Matrix focal_grad(const FocalConfig& cfg, const Matrix& y, const Matrix& yhat) {
  check_same_shape(y, yhat, "focal_grad");
  Matrix g(y.rows, y.cols);
  double inv = 1.0 / static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (prob_clipped(yhat.data[i])) continue;
    double p = yhat.data[i];
    double yi = y.data[i];
    double d = 0.0;
    // d/dp of -alpha y (1-p)^g log p
    d += -cfg.alpha * yi *
         (std::pow(1.0 - p, cfg.gamma) / p -
          (cfg.gamma == 0.0 ? 0.0
                            : cfg.gamma * std::pow(1.0 - p, cfg.gamma - 1.0) * std::log(p)));
    // d/dp of -(1-alpha)(1-y) p^g log(1-p)
    d += -(1.0 - cfg.alpha) * (1.0 - yi) *
         ((cfg.gamma == 0.0 ? 0.0
                            : cfg.gamma * std::pow(p, cfg.gamma - 1.0) * std::log(1.0 - p)) -
          std::pow(p, cfg.gamma) / (1.0 - p));
    g.data[i] = inv * d;
  }
  return g;
}

// KL(q(z|x) || N(0, I)) for a diagonal Gaussian, averaged over the batch:
// mean_i ( 1/2 sum_j mu^2 + e^logvar - logvar - 1 ).
inline double kl_divergence(const Matrix& mu, const Matrix& logvar) {
  check_same_shape(mu, logvar, "kl_divergence");
  if (mu.rows == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double m = mu.data[i], lv = logvar.data[i];
    s += m * m + std::exp(lv) - lv - 1.0;
  }
  return 0.5 * s / static_cast<double>(mu.rows);
}

inline std::pair<Matrix, Matrix> kl_grad(const Matrix& mu, const Matrix& logvar) {
  check_same_shape(mu, logvar, "kl_grad");
  Matrix dmu(mu.rows, mu.cols), dlv(mu.rows, mu.cols);
  double inv = 1.0 / static_cast<double>(mu.rows);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    dmu.data[i] = mu.data[i] * inv;
    dlv.data[i] = 0.5 * (std::exp(logvar.data[i]) - 1.0) * inv;
  }
  return {dmu, dlv};
}

// Discriminator objective: -mean log C(x_real) - mean log(1 - C(x_fake)).
inline double discriminator_loss(const Matrix& real_probs, const Matrix& fake_probs) {
  double s = 0.0;
  for (double p : real_probs.data) s += -std::log(clip_prob(p));
  double lr = real_probs.size() ? s / static_cast<double>(real_probs.size()) : 0.0;
  s = 0.0;
  for (double p : fake_probs.data) s += -std::log(1.0 - clip_prob(p));
  double lf = fake_probs.size() ? s / static_cast<double>(fake_probs.size()) : 0.0;
  return lr + lf;
}

inline Matrix discriminator_grad_real(const Matrix& real_probs) {
  Matrix g(real_probs.rows, real_probs.cols);
  double inv = 1.0 / static_cast<double>(real_probs.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (prob_clipped(real_probs.data[i])) continue;
    g.data[i] = -inv / real_probs.data[i];
  }
  return g;
}

inline Matrix discriminator_grad_fake(const Matrix& fake_probs) {
  Matrix g(fake_probs.rows, fake_probs.cols);
  double inv = 1.0 / static_cast<double>(fake_probs.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (prob_clipped(fake_probs.data[i])) continue;
    g.data[i] = inv / (1.0 - fake_probs.data[i]);
  }
  return g;
}

// Generator side of the adversarial game: -mean log C(x_fake).
inline double generator_adv_loss(const Matrix& fake_probs) {
  if (fake_probs.size() == 0) return 0.0;
  double s = 0.0;
  for (double p : fake_probs.data) s += -std::log(clip_prob(p));
  return s / static_cast<double>(fake_probs.size());
}

inline Matrix generator_adv_grad(const Matrix& fake_probs) {
  Matrix g(fake_probs.rows, fake_probs.cols);
  double inv = 1.0 / static_cast<double>(fake_probs.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (prob_clipped(fake_probs.data[i])) continue;
    g.data[i] = -inv / fake_probs.data[i];
  }
  return g;
}

}  // namespace fraudlab
