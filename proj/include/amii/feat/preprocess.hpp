// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "amii/error.hpp"
#include "amii/feat/frames.hpp"

namespace amii::feat {

inline constexpr std::size_t kDefaultMedianWindow = 5;

/// Centered running median. Near the edges the window shrinks to the samples
/// available; an even count takes the mean of the two central values.
inline std::vector<double> median_filter(std::span<const double> series, std::size_t window) {
  if (window == 0 || window % 2 == 0)
    throw ParameterError("median_filter: window must be odd and >= 1, got " + std::to_string(window));
  const std::size_t n = series.size();
  const std::size_t half = window / 2;
  std::vector<double> out(n);
  std::vector<double> buf;
  buf.reserve(window);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    buf.assign(series.begin() + static_cast<std::ptrdiff_t>(lo), series.begin() + static_cast<std::ptrdiff_t>(hi));
    const std::size_t m = buf.size();
    auto mid = buf.begin() + static_cast<std::ptrdiff_t>(m / 2);
    std::nth_element(buf.begin(), mid, buf.end());
    if (m % 2 == 1) {
      out[i] = *mid;
    } else {
      const double upper = *mid;
      const double lower = *std::max_element(buf.begin(), mid);
      out[i] = 0.5 * (lower + upper);
    }
  }
  return out;
}

/// Fills NaN gaps: linear between the nearest valid neighbours inside the
/// series, nearest valid value at the ends.
inline std::vector<double> interpolate_gaps(std::span<const double> series) {
  std::vector<double> out(series.begin(), series.end());
  const std::size_t n = out.size();
  std::size_t prev = n;  // last valid index seen
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(out[i])) continue;
    if (prev == n) {
      for (std::size_t j = 0; j < i; ++j) out[j] = out[i];
    } else if (i > prev + 1) {
      const double a = out[prev], b = out[i];
      const double span = static_cast<double>(i - prev);
      for (std::size_t j = prev + 1; j < i; ++j) out[j] = a + (b - a) * (static_cast<double>(j - prev) / span);
    }
    prev = i;
  }
  if (prev == n) throw DataError("interpolate_gaps: series has no valid values");
  for (std::size_t j = prev + 1; j < n; ++j) out[j] = out[prev];
  return out;
}

/// Number of frames at `dst_fps` covering a series of `n` samples at `src_fps`.
inline std::size_t resampled_length(std::size_t n, double src_fps, double dst_fps = kTargetFps) {
  if (n == 0) return 0;
  const double duration = static_cast<double>(n - 1) / src_fps;
  // Guard against k/dst landing a hair past the last sample through rounding.
  return static_cast<std::size_t>(std::floor(duration * dst_fps + 1e-9)) + 1;
}

/// Piecewise-linear resampling at timestamps k / dst_fps.
inline std::vector<double> resample(std::span<const double> series, double src_fps, double dst_fps = kTargetFps) {
  if (!(src_fps > 0)) throw ParameterError("resample: source fps must be positive");
  if (!(dst_fps > 0)) throw ParameterError("resample: target fps must be positive");
  const std::size_t n = series.size();
  const std::size_t m = resampled_length(n, src_fps, dst_fps);
  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    double pos = static_cast<double>(k) * src_fps / dst_fps;
    const double rounded = std::round(pos);
    if (std::abs(pos - rounded) < 1e-9) pos = rounded;
    std::size_t i = static_cast<std::size_t>(std::floor(pos));
    if (i >= n - 1) {
      out[k] = series[n - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(i);
    out[k] = frac == 0.0 ? series[i] : series[i] + (series[i + 1] - series[i]) * frac;
  }
  return out;
}

namespace detail {

template <typename Frame, typename Fn>
std::vector<Frame> map_columns(const std::vector<Frame>& frames, std::size_t out_len, Fn&& fn) {
  constexpr std::size_t dim = std::tuple_size_v<decltype(Frame::v)>;
  std::vector<Frame> out(out_len);
  std::vector<double> col(frames.size());
  for (std::size_t f = 0; f < dim; ++f) {
    for (std::size_t i = 0; i < frames.size(); ++i) col[i] = frames[i].v[f];
    const std::vector<double> res = fn(std::span<const double>(col));
    for (std::size_t i = 0; i < out_len; ++i) out[i].v[f] = res[i];
  }
  return out;
}

}  // namespace detail

inline PersonTrack interpolate_gaps(const PersonTrack& track) {
  track.check();
  PersonTrack out = track;
  auto fn = [](std::span<const double> s) { return interpolate_gaps(s); };
  out.speech = detail::map_columns(track.speech, track.size(), fn);
  out.face = detail::map_columns(track.face, track.size(), fn);
  return out;
}

inline PersonTrack median_filter(const PersonTrack& track, std::size_t window) {
  track.check();
  PersonTrack out = track;
  auto fn = [window](std::span<const double> s) { return median_filter(s, window); };
  out.speech = detail::map_columns(track.speech, track.size(), fn);
  out.face = detail::map_columns(track.face, track.size(), fn);
  return out;
}

inline PersonTrack resample_25fps(const PersonTrack& track, double src_fps) {
  if (!(src_fps > 0)) throw ParameterError("resample_25fps: source fps must be positive");
  track.check();
  const std::size_t m = resampled_length(track.size(), src_fps);
  auto fn = [src_fps](std::span<const double> s) { return resample(s, src_fps); };
  PersonTrack out;
  out.fps = kTargetFps;
  out.speech = detail::map_columns(track.speech, m, fn);
  out.face = detail::map_columns(track.face, m, fn);
  return out;
}

/// Gap interpolation, then median filtering, then resampling to 25 fps.
inline PersonTrack preprocess_track(const PersonTrack& track, double src_fps,
                                    std::size_t median_window = kDefaultMedianWindow) {
  return resample_25fps(median_filter(interpolate_gaps(track), median_window), src_fps);
}

inline DyadRecording preprocess_recording(const DyadRecording& rec, std::size_t median_window = kDefaultMedianWindow) {
  DyadRecording out = rec;
  out.p1 = preprocess_track(rec.p1, rec.p1.fps, median_window);
  out.p2 = preprocess_track(rec.p2, rec.p2.fps, median_window);
  return out;
}

}  // namespace amii::feat
