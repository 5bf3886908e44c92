#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fraudlab/layers.hpp"

namespace fraudlab {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Central-difference gradient verification. loss_fn must be a pure forward
// evaluation of the scalar loss; analytic_fn must zero the grads, run
// forward + backward once and leave d(loss)/d(param) in each ParamRef grad.
// Relative error uses a floored denominator so near-zero gradients do not
// blow up the ratio.
inline GradCheckResult grad_check(const std::vector<ParamRef>& params,
                                  const std::function<double()>& loss_fn,
                                  const std::function<void()>& analytic_fn,
                                  double h = 1e-5) {
  analytic_fn();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.grad->data);

  GradCheckResult res;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& val = *params[k].value;
    for (std::size_t i = 0; i < val.size(); ++i) {
      double orig = val.data[i];
      val.data[i] = orig + h;
      double lp = loss_fn();
      val.data[i] = orig - h;
      double lm = loss_fn();
      val.data[i] = orig;
      double numeric = (lp - lm) / (2.0 * h);
      double a = analytic[k][i];
      double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-4});
      double rel = std::fabs(a - numeric) / denom;
      ++res.checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = params[k].name;
        res.worst_index = i;
      }
    }
  }
  return res;
}

}  // namespace fraudlab
