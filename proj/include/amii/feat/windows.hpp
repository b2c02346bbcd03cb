// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "amii/diff/tensor.hpp"
#include "amii/error.hpp"
#include "amii/feat/frames.hpp"

namespace amii::feat {

inline constexpr std::size_t kWindowFrames = 100;

/// Four past-frame windows (frames t-T+1..t) and the next-frame face targets.
struct TrainingSample {
  diff::Tensor speech_a;  // [T x 16]
  diff::Tensor face_a;    // [T x 10]
  diff::Tensor speech_u;
  diff::Tensor face_u;
  diff::Tensor target_a;  // [1 x 10], frame t+1
  diff::Tensor target_u;
};

/// Which person plays the agent. kP1AsAgent maps p1 -> A, p2 -> U.
enum class Roles { kP1AsAgent, kP2AsAgent };

/// Lightweight reference to a window; materialized on demand so a corpus of
/// windows does not have to sit in memory.
struct WindowRef {
  std::size_t recording = 0;
  std::size_t t = 0;  // last input frame
  Roles roles = Roles::kP1AsAgent;

  bool operator==(const WindowRef&) const = default;
};

template <typename Frame>
diff::Tensor frames_to_tensor(std::span<const Frame> frames) {
  constexpr std::size_t dim = std::tuple_size_v<decltype(Frame::v)>;
  diff::Tensor out = diff::Tensor::matrix(frames.size(), dim);
  for (std::size_t r = 0; r < frames.size(); ++r)
    for (std::size_t c = 0; c < dim; ++c) out(r, c) = frames[r].v[c];
  return out;
}

inline diff::Tensor face_tensor(const FaceFrame& f) {
  return frames_to_tensor(std::span<const FaceFrame>(&f, 1));
}

inline FaceFrame tensor_to_face(const diff::Tensor& t) {
  if (t.size() != kFaceDim) throw DimensionError("tensor_to_face: expected 10 values, got " + diff::shape_str(t.shape()));
  FaceFrame f;
  for (std::size_t i = 0; i < kFaceDim; ++i) f.v[i] = t[i];
  return f;
}

inline TrainingSample materialize(const DyadRecording& rec, std::size_t t, Roles roles,
                                  std::size_t window = kWindowFrames) {
  if (t + 1 < window || t + 1 >= rec.size())
    throw DataError("materialize: t=" + std::to_string(t) + " outside [" + std::to_string(window - 1) + ", " +
                    std::to_string(rec.size()) + " - 2]");
  const PersonTrack& a = roles == Roles::kP1AsAgent ? rec.p1 : rec.p2;
  const PersonTrack& u = roles == Roles::kP1AsAgent ? rec.p2 : rec.p1;
  const std::size_t lo = t + 1 - window;
  TrainingSample s;
  s.speech_a = frames_to_tensor(std::span<const SpeechFrame>(a.speech).subspan(lo, window));
  s.face_a = frames_to_tensor(std::span<const FaceFrame>(a.face).subspan(lo, window));
  s.speech_u = frames_to_tensor(std::span<const SpeechFrame>(u.speech).subspan(lo, window));
  s.face_u = frames_to_tensor(std::span<const FaceFrame>(u.face).subspan(lo, window));
  s.target_a = face_tensor(a.face[t + 1]);
  s.target_u = face_tensor(u.face[t + 1]);
  return s;
}

inline TrainingSample materialize(std::span<const DyadRecording> recs, const WindowRef& ref,
                                  std::size_t window = kWindowFrames) {
  return materialize(recs[ref.recording], ref.t, ref.roles, window);
}

/// Window positions t in [T-1, len-2], every `stride`-th, each under both role assignments.
inline std::vector<WindowRef> enumerate_windows(std::span<const DyadRecording> recs,
                                                std::size_t window = kWindowFrames, std::size_t stride = 1) {
  if (stride == 0) throw ParameterError("enumerate_windows: stride must be >= 1");
  std::vector<WindowRef> out;
  for (std::size_t r = 0; r < recs.size(); ++r) {
    const std::size_t len = recs[r].size();
    if (len < window + 1) continue;
    for (std::size_t t = window - 1; t + 2 <= len; t += stride) {
      out.push_back({r, t, Roles::kP1AsAgent});
      out.push_back({r, t, Roles::kP2AsAgent});
    }
  }
  return out;
}

/// Every training sample of a recording: len - T positions, both role assignments.
inline std::vector<TrainingSample> make_windows(const DyadRecording& rec, std::size_t window = kWindowFrames) {
  rec.check();
  if (rec.size() < window + 1)
    throw DataError("make_windows: recording " + rec.session_id + " has " + std::to_string(rec.size()) +
                    " frames, needs at least " + std::to_string(window + 1));
  std::vector<TrainingSample> out;
  out.reserve(2 * (rec.size() - window));
  for (std::size_t t = window - 1; t + 2 <= rec.size(); ++t) {
    out.push_back(materialize(rec, t, Roles::kP1AsAgent, window));
    out.push_back(materialize(rec, t, Roles::kP2AsAgent, window));
  }
  return out;
}

}  // namespace amii::feat
