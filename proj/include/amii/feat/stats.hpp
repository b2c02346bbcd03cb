// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "amii/error.hpp"
#include "amii/feat/frames.hpp"

namespace amii::feat {

inline constexpr double kStdFloor = 1e-6;

/// Per-feature mean and standard deviation, pooled over both persons of the
/// training recordings.
struct FeatureStats {
  std::array<double, kSpeechDim> speech_mean{};
  std::array<double, kSpeechDim> speech_std{};
  std::array<double, kFaceDim> face_mean{};
  std::array<double, kFaceDim> face_std{};

  static FeatureStats identity() {
    FeatureStats s;
    s.speech_std.fill(1.0);
    s.face_std.fill(1.0);
    return s;
  }

  bool operator==(const FeatureStats&) const = default;
};

namespace detail {

template <std::size_t N>
struct Moments {
  std::array<double, N> sum{};
  std::array<double, N> lo;
  std::array<double, N> hi;

  Moments() {
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
  }

  template <typename Frame>
  void add(const std::vector<Frame>& frames) {
    for (const auto& f : frames) {
      for (std::size_t i = 0; i < N; ++i) {
        sum[i] += f.v[i];
        lo[i] = std::min(lo[i], f.v[i]);
        hi[i] = std::max(hi[i], f.v[i]);
      }
    }
  }

  // A constant feature gets its exact value as mean, so it standardizes to exact zeros.
  double mean(std::size_t i, double count) const { return lo[i] == hi[i] ? lo[i] : sum[i] / count; }
};

}  // namespace detail

inline FeatureStats compute_stats(std::span<const DyadRecording> train) {
  detail::Moments<kSpeechDim> sm;
  detail::Moments<kFaceDim> fm;
  std::array<double, kSpeechDim> s_sq{};
  std::array<double, kFaceDim> f_sq{};
  double count = 0;
  for (const auto& rec : train) {
    for (const PersonTrack* p : {&rec.p1, &rec.p2}) {
      sm.add(p->speech);
      fm.add(p->face);
      count += static_cast<double>(p->size());
    }
  }
  if (count == 0) throw DataError("compute_stats: no training frames");
  FeatureStats st;
  for (std::size_t i = 0; i < kSpeechDim; ++i) st.speech_mean[i] = sm.mean(i, count);
  for (std::size_t i = 0; i < kFaceDim; ++i) st.face_mean[i] = fm.mean(i, count);
  // Second pass for the variance around the mean.
  for (const auto& rec : train) {
    for (const PersonTrack* p : {&rec.p1, &rec.p2}) {
      for (const auto& f : p->speech)
        for (std::size_t i = 0; i < kSpeechDim; ++i) s_sq[i] += (f.v[i] - st.speech_mean[i]) * (f.v[i] - st.speech_mean[i]);
      for (const auto& f : p->face)
        for (std::size_t i = 0; i < kFaceDim; ++i) f_sq[i] += (f.v[i] - st.face_mean[i]) * (f.v[i] - st.face_mean[i]);
    }
  }
  for (std::size_t i = 0; i < kSpeechDim; ++i) st.speech_std[i] = std::max(kStdFloor, std::sqrt(s_sq[i] / count));
  for (std::size_t i = 0; i < kFaceDim; ++i) st.face_std[i] = std::max(kStdFloor, std::sqrt(f_sq[i] / count));
  return st;
}

inline SpeechFrame standardize(const SpeechFrame& f, const FeatureStats& s) {
  SpeechFrame out;
  for (std::size_t i = 0; i < kSpeechDim; ++i) out.v[i] = (f.v[i] - s.speech_mean[i]) / s.speech_std[i];
  return out;
}

inline FaceFrame standardize(const FaceFrame& f, const FeatureStats& s) {
  FaceFrame out;
  for (std::size_t i = 0; i < kFaceDim; ++i) out.v[i] = (f.v[i] - s.face_mean[i]) / s.face_std[i];
  return out;
}

inline SpeechFrame destandardize(const SpeechFrame& f, const FeatureStats& s) {
  SpeechFrame out;
  for (std::size_t i = 0; i < kSpeechDim; ++i) out.v[i] = f.v[i] * s.speech_std[i] + s.speech_mean[i];
  return out;
}

inline FaceFrame destandardize(const FaceFrame& f, const FeatureStats& s) {
  FaceFrame out;
  for (std::size_t i = 0; i < kFaceDim; ++i) out.v[i] = f.v[i] * s.face_std[i] + s.face_mean[i];
  return out;
}

inline std::vector<FaceFrame> standardize(const std::vector<FaceFrame>& frames, const FeatureStats& s) {
  std::vector<FaceFrame> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(standardize(f, s));
  return out;
}

inline std::vector<FaceFrame> destandardize(const std::vector<FaceFrame>& frames, const FeatureStats& s) {
  std::vector<FaceFrame> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(destandardize(f, s));
  return out;
}

inline PersonTrack standardize(const PersonTrack& track, const FeatureStats& s) {
  PersonTrack out;
  out.fps = track.fps;
  out.speech.reserve(track.size());
  for (const auto& f : track.speech) out.speech.push_back(standardize(f, s));
  out.face = standardize(track.face, s);
  return out;
}

inline PersonTrack destandardize(const PersonTrack& track, const FeatureStats& s) {
  PersonTrack out;
  out.fps = track.fps;
  out.speech.reserve(track.size());
  for (const auto& f : track.speech) out.speech.push_back(destandardize(f, s));
  out.face = destandardize(track.face, s);
  return out;
}

inline DyadRecording standardize(const DyadRecording& rec, const FeatureStats& s) {
  DyadRecording out = rec;
  out.p1 = standardize(rec.p1, s);
  out.p2 = standardize(rec.p2, s);
  return out;
}

}  // namespace amii::feat
