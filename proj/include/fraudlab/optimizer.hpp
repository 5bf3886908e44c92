#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fraudlab/layers.hpp"

namespace fraudlab {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are keyed by position in the
// param list, so callers must pass the same params in the same order on
// every step.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(const std::vector<ParamRef>& params) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t k = 0; k < params.size(); ++k) {
        m_[k].assign(params[k].value->size(), 0.0);
        v_[k].assign(params[k].value->size(), 0.0);
      }
    }
    if (m_.size() != params.size())
      throw std::invalid_argument("Adam: param list changed between steps");
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Matrix& val = *params[k].value;
      const Matrix& g = *params[k].grad;
      if (m_[k].size() != val.size())
        throw std::invalid_argument("Adam: param shape changed between steps");
      for (std::size_t i = 0; i < val.size(); ++i) {
        double gi = g.data[i];
        m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * gi;
        v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * gi * gi;
        double mhat = m_[k][i] / bc1;
        double vhat = v_[k][i] / bc2;
        val.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  void reset() {
    m_.clear();
    v_.clear();
    t_ = 0;
  }

  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace fraudlab
