// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "amii/diff/param.hpp"
#include "amii/error.hpp"
#include "amii/feat/frames.hpp"
#include "amii/feat/stats.hpp"
#include "amii/feat/windows.hpp"
#include "amii/model/amii.hpp"

namespace amii::infer {

/// Sliding windows for online prediction. The agent's face window starts as
/// ground truth and is overwritten by predictions, oldest first; the agent's
/// speech and both user windows advance on ground truth.
class RolloutState {
 public:
  RolloutState(std::span<const feat::SpeechFrame> a_speech, const feat::PersonTrack& u_track,
               std::span<const feat::FaceFrame> seed_face, std::size_t window)
      : a_speech_(a_speech), u_track_(u_track), window_(window) {
    if (seed_face.size() != window)
      throw DataError("rollout: seed window has " + std::to_string(seed_face.size()) + " frames, needs " +
                      std::to_string(window));
    for (const auto& f : seed_face) {
      face_a_.push_back(f);
      from_seed_.push_back(true);
    }
  }

  /// Index of the last frame covered by the windows.
  std::size_t current_frame() const { return step_ + window_ - 1; }
  std::size_t steps_taken() const { return step_; }

  std::size_t seed_frames_in_window() const {
    std::size_t n = 0;
    for (bool b : from_seed_) n += b ? 1 : 0;
    return n;
  }

  const std::deque<feat::FaceFrame>& agent_face_window() const { return face_a_; }
  const std::deque<bool>& agent_face_provenance() const { return from_seed_; }

  /// True while ground-truth streams still cover the next prediction target.
  bool can_step() const {
    const std::size_t target = current_frame() + 1;
    return target < a_speech_.size() && target < u_track_.size();
  }

  /// Window tensors for the current position.
  feat::TrainingSample inputs() const {
    const std::size_t lo = step_;
    feat::TrainingSample s;
    s.speech_a = feat::frames_to_tensor(a_speech_.subspan(lo, window_));
    std::vector<feat::FaceFrame> fa(face_a_.begin(), face_a_.end());
    s.face_a = feat::frames_to_tensor(std::span<const feat::FaceFrame>(fa));
    s.speech_u = feat::frames_to_tensor(std::span<const feat::SpeechFrame>(u_track_.speech).subspan(lo, window_));
    s.face_u = feat::frames_to_tensor(std::span<const feat::FaceFrame>(u_track_.face).subspan(lo, window_));
    return s;
  }

  /// Feeds the agent's prediction for the next frame back into its face window.
  void advance(const feat::FaceFrame& predicted) {
    face_a_.pop_front();
    from_seed_.pop_front();
    face_a_.push_back(predicted);
    from_seed_.push_back(false);
    ++step_;
  }

 private:
  std::span<const feat::SpeechFrame> a_speech_;
  const feat::PersonTrack& u_track_;
  std::size_t window_;
  std::size_t step_ = 0;
  std::deque<feat::FaceFrame> face_a_;
  std::deque<bool> from_seed_;
};

/// Autoregressive prediction of `t_out` agent face frames, in model
/// (standardized) space. Prediction k is for frame window + k. The user's
/// prediction is computed by the network and dropped.
inline std::vector<feat::FaceFrame> rollout(const diff::ParamSet& params, const model::AmiiConfig& cfg,
                                            std::span<const feat::SpeechFrame> a_speech,
                                            const feat::PersonTrack& u_track,
                                            std::span<const feat::FaceFrame> seed_face, std::size_t t_out) {
  RolloutState state(a_speech, u_track, seed_face, cfg.window);
  std::vector<feat::FaceFrame> out;
  out.reserve(t_out);
  for (std::size_t k = 0; k < t_out; ++k) {
    if (!state.can_step())
      throw TruncationError("rollout: input streams exhausted after " + std::to_string(k) + " of " +
                            std::to_string(t_out) + " frames");
    const feat::TrainingSample in = state.inputs();
    const auto [y_a, y_u] = model::predict(params, in.speech_a, in.face_a, in.speech_u, in.face_u, cfg);
    const feat::FaceFrame next = feat::tensor_to_face(y_a);
    out.push_back(next);
    state.advance(next);
  }
  return out;
}

/// Raw-unit rollout over a recorded session: standardizes with `stats`, seeds
/// with the agent's first window of ground truth, destandardizes the output.
inline std::vector<feat::FaceFrame> rollout_session(const diff::ParamSet& params, const model::AmiiConfig& cfg,
                                                    const feat::FeatureStats& stats, const feat::DyadRecording& rec,
                                                    feat::Roles roles, std::size_t t_out) {
  const feat::PersonTrack a = feat::standardize(roles == feat::Roles::kP1AsAgent ? rec.p1 : rec.p2, stats);
  const feat::PersonTrack u = feat::standardize(roles == feat::Roles::kP1AsAgent ? rec.p2 : rec.p1, stats);
  if (a.size() < cfg.window)
    throw TruncationError("rollout: session has " + std::to_string(a.size()) + " frames, fewer than one window");
  const auto seed = std::span<const feat::FaceFrame>(a.face).first(cfg.window);
  return feat::destandardize(rollout(params, cfg, a.speech, u, seed, t_out), stats);
}

/// Mean absolute per-step change of one face feature.
inline double mean_step_delta(std::span<const feat::FaceFrame> frames, std::size_t feature) {
  if (frames.size() < 2) return 0.0;
  double total = 0;
  for (std::size_t i = 1; i < frames.size(); ++i) total += std::abs(frames[i].v[feature] - frames[i - 1].v[feature]);
  return total / static_cast<double>(frames.size() - 1);
}

/// Ratio of the predicted stream's mean per-step AU12 change to the ground
/// truth's; large values flag divergence or oscillation.
inline double continuity_ratio(std::span<const feat::FaceFrame> predicted, std::span<const feat::FaceFrame> truth) {
  const double gt = mean_step_delta(truth, feat::kAu12);
  const double pr = mean_step_delta(predicted, feat::kAu12);
  if (gt == 0.0) return pr == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return pr / gt;
}

}  // namespace amii::infer
