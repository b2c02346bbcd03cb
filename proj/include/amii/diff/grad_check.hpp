// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <random>
#include <utility>
#include <vector>

#include "amii/diff/param.hpp"
#include "amii/diff/tape.hpp"
#include "amii/error.hpp"

namespace amii::diff {

/// Builds a scalar loss on the given tape, reading parameters via tape.param().
using TapedScalarFn = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double eps = 1e-5;
  std::size_t max_coords = 200;  // all coordinates are checked when there are fewer
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::string worst_param;
};

namespace detail {

inline double eval_scalar(const TapedScalarFn& f, const ParamSet& params) {
  Tape tape(params);
  const double v = f(tape).value().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: function value is not finite");
  return v;
}

}  // namespace detail

/// Compares taped gradients with central differences on sampled coordinates.
/// Error per coordinate is |analytic - numeric| / max(1, |analytic|).
inline GradCheckResult grad_check_detailed(const TapedScalarFn& f, ParamSet& params,
                                           const GradCheckOptions& opts = {}) {
  if (!(opts.eps >= 1e-6 && opts.eps <= 1e-4))
    throw ParameterError("grad_check: eps must lie in [1e-6, 1e-4]");

  params.zero_grads();
  {
    Tape tape(&params);
    Var loss = f(tape);
    if (!std::isfinite(loss.value().item())) throw NumericError("grad_check: function value is not finite");
    tape.backward(loss);
  }

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p].value.size(); ++i) coords.emplace_back(p, i);
  if (coords.size() > opts.max_coords) {
    std::mt19937_64 rng(opts.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(opts.max_coords);
  }

  GradCheckResult result;
  for (const auto& [p, i] : coords) {
    double& x = params[p].value[i];
    const double saved = x;
    x = saved + opts.eps;
    const double up = detail::eval_scalar(f, params);
    x = saved - opts.eps;
    const double down = detail::eval_scalar(f, params);
    x = saved;
    const double numeric = (up - down) / (2.0 * opts.eps);
    const double analytic = params[p].grad[i];
    const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_param = params[p].name;
    }
    ++result.coords_checked;
  }
  return result;
}

inline double grad_check(const TapedScalarFn& f, ParamSet& params, const GradCheckOptions& opts = {}) {
  return grad_check_detailed(f, params, opts).max_rel_error;
}

}  // namespace amii::diff
