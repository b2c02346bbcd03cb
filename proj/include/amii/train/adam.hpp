// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "amii/diff/param.hpp"
#include "amii/error.hpp"

namespace amii::train {

struct OptimizerState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<diff::Tensor> m;
  std::vector<diff::Tensor> v;

  static OptimizerState for_params(const diff::ParamSet& params) {
    OptimizerState s;
    s.m = params.make_grad_buffers();
    s.v = params.make_grad_buffers();
    return s;
  }
};

/// One bias-corrected Adam update from the gradients stored in `params`.
/// Checks every gradient before touching any value.
inline void adam_step(diff::ParamSet& params, OptimizerState& state, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw StateError("adam: optimizer state does not match parameter set");
  for (const auto& p : params) {
    for (double g : p.grad.data())
      if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient in parameter " + p.name);
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].value.data();
    auto grad = params[i].grad.data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      value[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
inline double clip_grad_norm(diff::ParamSet& params, double max_norm) {
  double sq = 0;
  for (const auto& p : params)
    for (double g : p.grad.data()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const double s = max_norm / norm;
    for (auto& p : params)
      for (double& g : p.grad.values()) g *= s;
  }
  return norm;
}

}  // namespace amii::train
