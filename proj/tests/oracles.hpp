// SPDX-License-Identifier: Apache-2.0
//
// Slow, obviously-correct reference implementations used to check the real ones.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "amii/diff/param.hpp"
#include "amii/diff/tensor.hpp"

namespace amii::oracle {

using diff::ParamSet;
using diff::Tensor;

inline Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor out = Tensor::matrix(x.rows(), w.cols());
  for (std::size_t t = 0; t < x.rows(); ++t)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = b[j];
      for (std::size_t k = 0; k < x.cols(); ++k) s += x(t, k) * w(k, j);
      out(t, j) = s;
    }
  return out;
}

/// Multi-head attention with explicit loops per head, query and key.
inline Tensor attention(const Tensor& q_src, const Tensor& kv_src, const ParamSet& ps, const std::string& prefix,
                        std::size_t heads) {
  const Tensor q = affine(q_src, ps.at(prefix + ".wq").value, ps.at(prefix + ".bq").value);
  const Tensor k = affine(kv_src, ps.at(prefix + ".wk").value, ps.at(prefix + ".bk").value);
  const Tensor v = affine(kv_src, ps.at(prefix + ".wv").value, ps.at(prefix + ".bv").value);
  const std::size_t c = q.cols(), dh = c / heads, tq = q.rows(), tk = k.rows();
  Tensor merged = Tensor::matrix(tq, c);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < tq; ++i) {
      std::vector<double> score(tk);
      for (std::size_t j = 0; j < tk; ++j) {
        double s = 0;
        for (std::size_t d = 0; d < dh; ++d) s += q(i, h * dh + d) * k(j, h * dh + d);
        score[j] = s / std::sqrt(static_cast<double>(dh));
      }
      const double mx = *std::max_element(score.begin(), score.end());
      double z = 0;
      for (double& s : score) z += (s = std::exp(s - mx));
      for (std::size_t d = 0; d < dh; ++d) {
        double acc = 0;
        for (std::size_t j = 0; j < tk; ++j) acc += score[j] / z * v(j, h * dh + d);
        merged(i, h * dh + d) = acc;
      }
    }
  }
  return affine(merged, ps.at(prefix + ".wo").value, ps.at(prefix + ".bo").value);
}

/// sup |F_x - F_y| evaluated by counting at every sample value.
inline double ks(const std::vector<double>& x, const std::vector<double>& y) {
  double best = 0;
  auto ecdf = [](const std::vector<double>& s, double t) {
    std::size_t c = 0;
    for (double v : s) c += v <= t ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(s.size());
  };
  for (const auto* s : {&x, &y})
    for (double t : *s) best = std::max(best, std::abs(ecdf(x, t) - ecdf(y, t)));
  return best;
}

/// Minimum-cost warping path found by enumerating every path.
inline double dtw_exhaustive(const std::vector<double>& a, const std::vector<double>& u) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    acc += std::abs(a[i] - u[j]);
    if (i + 1 == a.size() && j + 1 == u.size()) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < a.size()) walk(i + 1, j, acc);
    if (j + 1 < u.size()) walk(i, j + 1, acc);
    if (i + 1 < a.size() && j + 1 < u.size()) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

/// Pearson correlation straight from the definition.
inline double pcc(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n;
  for (std::size_t i = 0; i < y.size(); ++i) my += y[i] / n;
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cov += (x[i] - mx) * (y[i] - my);
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
  }
  return cov / std::sqrt(vx * vy);
}

}  // namespace amii::oracle
