// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "amii/error.hpp"
#include "amii/feat/frames.hpp"
#include "amii/feat/preprocess.hpp"

namespace amii::feat {

struct SynthOptions {
  std::uint64_t seed = 0;
  double duration_s = 120.0;
  std::size_t lag_frames = 0;  // person 2's AU12 trails person 1's by this many frames
  double coupling = 1.0;       // weight of the delayed copy in person 2's AU12
  double noise = 0.05;         // Gaussian noise sigma on every channel
  std::string session_id = "synth";
  std::string participant_p1 = "synth.p1";
  std::string participant_p2 = "synth.p2";
};

namespace detail {

/// Sum of 3-5 random-phase sinusoids between 0.05 and 1 Hz, scaled to unit RMS.
class SmoothSignal {
 public:
  explicit SmoothSignal(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> count(3, 5);
    std::uniform_real_distribution<double> freq(0.05, 1.0), phase(0.0, 2.0 * std::numbers::pi), amp(0.5, 1.0);
    const int k = count(rng);
    double power = 0;
    for (int i = 0; i < k; ++i) {
      parts_.push_back({amp(rng), freq(rng), phase(rng)});
      power += 0.5 * parts_.back().amp * parts_.back().amp;
    }
    for (auto& p : parts_) p.amp /= std::sqrt(power);
  }

  double operator()(double t_s) const {
    double v = 0;
    for (const auto& p : parts_) v += p.amp * std::sin(2.0 * std::numbers::pi * p.freq * t_s + p.phase);
    return v;
  }

 private:
  struct Part {
    double amp, freq, phase;
  };
  std::vector<Part> parts_;
};

inline constexpr std::array<double, kFaceDim> kFaceScale = {0.2, 0.2, 0.15, 0.15, 0.15, 0.5, 0.5, 0.5, 0.5, 0.5};
inline constexpr std::array<double, kFaceDim> kFaceOffset = {0, 0, 0, 0, 0, 1.0, 1.0, 1.0, 1.0, 1.0};

inline bool is_au(std::size_t face_feature) { return face_feature >= kAu1; }

// Speech channels borrow from the same person's face channels; the mix keeps
// the speech/face relation learnable.
inline void fill_speech(PersonTrack& track, std::mt19937_64& rng, double noise) {
  const std::size_t n = track.size();
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t k = 0; k < kSpeechDim; ++k) {
    SmoothSignal own(rng);
    const std::size_t m = (k * 3 + 9) % kFaceDim;  // f0 <- AU12, loudness <- rot_x, ...
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / kTargetFps;
      const double face_unit = (track.face[i].v[m] - kFaceOffset[m]) / kFaceScale[m];
      const double mix = 0.6 * face_unit + 0.4 * own(t) + (noise > 0 ? noise * gauss(rng) : 0.0);
      double v = 0;
      if (k == kF0) {
        v = std::max(0.0, 120.0 + 25.0 * mix);
      } else if (k == kVoicing) {
        v = 1.0 / (1.0 + std::exp(-2.0 * mix));
      } else if (k == kLoudness) {
        v = 1.0 + 0.5 * mix;
      } else {
        v = mix;
      }
      track.speech[i].v[k] = v;
    }
  }
}

}  // namespace detail

/// Deterministic two-person recording at 25 fps. Person 2's AU12 is
/// coupling * (person 1's AU12 delayed by lag_frames) + (1 - coupling) * an
/// independent signal, plus noise; all other channels are independent smooth
/// signals plus noise.
inline DyadRecording synth_dyad(const SynthOptions& opt) {
  if (opt.duration_s < 10.0) throw ParameterError("synth_dyad: duration must be >= 10 s");
  if (opt.lag_frames > 50) throw ParameterError("synth_dyad: lag must lie in [0, 50] frames");
  if (opt.noise < 0) throw ParameterError("synth_dyad: noise must be >= 0");

  const std::size_t n = static_cast<std::size_t>(std::floor(opt.duration_s * kTargetFps + 1e-9)) + 1;
  const std::size_t lag = opt.lag_frames;
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&] { return opt.noise > 0 ? opt.noise * gauss(rng) : 0.0; };
  auto time_of = [](double frame) { return frame / kTargetFps; };

  DyadRecording rec;
  rec.session_id = opt.session_id;
  rec.participant_p1 = opt.participant_p1;
  rec.participant_p2 = opt.participant_p2;
  for (PersonTrack* p : {&rec.p1, &rec.p2}) {
    p->fps = kTargetFps;
    p->speech.resize(n);
    p->face.resize(n);
  }

  // Person 1's AU12 over frames [-lag, n) so the delayed copy is defined from frame 0.
  std::vector<double> au12_ext(n + lag);
  {
    detail::SmoothSignal s(rng);
    for (std::size_t j = 0; j < n + lag; ++j) {
      const double frame = static_cast<double>(j) - static_cast<double>(lag);
      au12_ext[j] = std::max(0.0, detail::kFaceOffset[kAu12] + detail::kFaceScale[kAu12] * s(time_of(frame)) + draw());
    }
  }

  for (int person = 0; person < 2; ++person) {
    PersonTrack& track = person == 0 ? rec.p1 : rec.p2;
    for (std::size_t f = 0; f < kFaceDim; ++f) {
      detail::SmoothSignal s(rng);
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0;
        if (f == kAu12 && person == 0) {
          v = au12_ext[i + lag];
        } else if (f == kAu12) {
          const double own = detail::kFaceOffset[f] + detail::kFaceScale[f] * s(time_of(static_cast<double>(i)));
          v = opt.coupling * au12_ext[i] + (1.0 - opt.coupling) * own + draw();
          v = std::max(0.0, v);
        } else {
          v = detail::kFaceOffset[f] + detail::kFaceScale[f] * s(time_of(static_cast<double>(i))) + draw();
          if (detail::is_au(f)) v = std::max(0.0, v);
        }
        track.face[i].v[f] = v;
      }
    }
    detail::fill_speech(track, rng, opt.noise);
  }
  return rec;
}

inline DyadRecording synth_dyad(std::uint64_t seed, double duration_s, std::size_t lag_frames, double coupling) {
  SynthOptions opt;
  opt.seed = seed;
  opt.duration_s = duration_s;
  opt.lag_frames = lag_frames;
  opt.coupling = coupling;
  return synth_dyad(opt);
}

}  // namespace amii::feat
