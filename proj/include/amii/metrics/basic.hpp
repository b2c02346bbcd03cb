// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amii/error.hpp"
#include "amii/feat/frames.hpp"

namespace amii::metrics {

using feat::FaceFrame;
using feat::kFaceDim;

/// One value per face feature plus their mean.
struct FeatureScores {
  std::array<double, kFaceDim> per_feature{};
  double mean = 0;

  bool operator==(const FeatureScores&) const = default;
};

namespace detail {

inline void require_aligned(std::size_t pred, std::size_t truth, const char* what) {
  if (pred != truth)
    throw DataError(std::string(what) + ": prediction has " + std::to_string(pred) + " frames, truth has " +
                    std::to_string(truth));
  if (pred == 0) throw DataError(std::string(what) + ": empty sequences");
}

inline void finish(FeatureScores& s) {
  double total = 0;
  for (double v : s.per_feature) total += v;
  s.mean = total / static_cast<double>(kFaceDim);
}

}  // namespace detail

inline FeatureScores mae(std::span<const FaceFrame> pred, std::span<const FaceFrame> truth) {
  detail::require_aligned(pred.size(), truth.size(), "mae");
  FeatureScores s;
  for (std::size_t f = 0; f < kFaceDim; ++f) {
    double total = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) total += std::abs(pred[i].v[f] - truth[i].v[f]);
    s.per_feature[f] = total / static_cast<double>(pred.size());
  }
  detail::finish(s);
  return s;
}

inline FeatureScores rmse(std::span<const FaceFrame> pred, std::span<const FaceFrame> truth) {
  detail::require_aligned(pred.size(), truth.size(), "rmse");
  FeatureScores s;
  for (std::size_t f = 0; f < kFaceDim; ++f) {
    double total = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d = pred[i].v[f] - truth[i].v[f];
      total += d * d;
    }
    s.per_feature[f] = std::sqrt(total / static_cast<double>(pred.size()));
  }
  detail::finish(s);
  return s;
}

/// Two-sample Kolmogorov-Smirnov statistic: sup_t |F_x(t) - F_y(t)|.
inline double ks_two_sample(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw DataError("ks: empty sample");
  std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double best = 0;
  // Evaluate both ECDFs just after each distinct breakpoint.
  while (i < a.size() || j < b.size()) {
    const double t = j == b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return best;
}

inline FeatureScores ks_features(std::span<const FaceFrame> pred, std::span<const FaceFrame> truth) {
  if (pred.empty() || truth.empty()) throw DataError("ks: empty sample");
  FeatureScores s;
  std::vector<double> x(pred.size()), y(truth.size());
  for (std::size_t f = 0; f < kFaceDim; ++f) {
    for (std::size_t i = 0; i < pred.size(); ++i) x[i] = pred[i].v[f];
    for (std::size_t i = 0; i < truth.size(); ++i) y[i] = truth[i].v[f];
    s.per_feature[f] = ks_two_sample(x, y);
  }
  detail::finish(s);
  return s;
}

/// Pearson correlation, or nothing when either series is constant.
inline std::optional<double> try_pcc(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DataError("pcc: length mismatch " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  if (x.size() < 2) throw DataError("pcc: need at least 2 points");
  const auto r = try_pcc(x, y);
  if (!r) throw NumericError("pcc: correlation undefined for a constant series");
  return *r;
}

}  // namespace amii::metrics
