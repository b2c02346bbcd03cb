// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "amii/error.hpp"

namespace amii::feat {

inline constexpr std::size_t kSpeechDim = 16;
inline constexpr std::size_t kFaceDim = 10;
inline constexpr std::size_t kMfccCount = 13;
inline constexpr double kTargetFps = 25.0;

inline constexpr std::array<std::string_view, kSpeechDim> kSpeechColumns = {
    "f0",    "loudness", "voicing", "mfcc0", "mfcc1",  "mfcc2",  "mfcc3",  "mfcc4",
    "mfcc5", "mfcc6",    "mfcc7",   "mfcc8", "mfcc9",  "mfcc10", "mfcc11", "mfcc12"};

inline constexpr std::array<std::string_view, kFaceDim> kFaceColumns = {
    "gaze_x", "gaze_y", "rot_x", "rot_y", "rot_z", "au1", "au2", "au4", "au6", "au12"};

// Face feature indices.
inline constexpr std::size_t kGazeX = 0;
inline constexpr std::size_t kGazeY = 1;
inline constexpr std::size_t kRotX = 2;
inline constexpr std::size_t kRotY = 3;
inline constexpr std::size_t kRotZ = 4;
inline constexpr std::size_t kAu1 = 5;
inline constexpr std::size_t kAu2 = 6;
inline constexpr std::size_t kAu4 = 7;
inline constexpr std::size_t kAu6 = 8;
inline constexpr std::size_t kAu12 = 9;

// Speech feature indices.
inline constexpr std::size_t kF0 = 0;
inline constexpr std::size_t kLoudness = 1;
inline constexpr std::size_t kVoicing = 2;
inline constexpr std::size_t kMfcc0 = 3;

/// f0 (Hz), loudness, voicing probability, then MFCC 0-12.
struct SpeechFrame {
  std::array<double, kSpeechDim> v{};

  double f0() const { return v[kF0]; }
  double loudness() const { return v[kLoudness]; }
  double voicing() const { return v[kVoicing]; }
  double mfcc(std::size_t i) const { return v[kMfcc0 + i]; }

  bool operator==(const SpeechFrame&) const = default;
};

/// Gaze angles and Euler head rotations (radians), then AU1, AU2, AU4, AU6, AU12 intensities.
struct FaceFrame {
  std::array<double, kFaceDim> v{};

  double gaze_x() const { return v[kGazeX]; }
  double gaze_y() const { return v[kGazeY]; }
  double au12() const { return v[kAu12]; }

  bool operator==(const FaceFrame&) const = default;
};

struct PersonTrack {
  double fps = kTargetFps;
  std::vector<SpeechFrame> speech;
  std::vector<FaceFrame> face;

  std::size_t size() const { return speech.size(); }

  void check() const {
    if (speech.size() != face.size())
      throw DataError("person track: " + std::to_string(speech.size()) + " speech frames vs " +
                      std::to_string(face.size()) + " face frames");
  }

  bool operator==(const PersonTrack&) const = default;
};

struct DyadRecording {
  std::string session_id;
  std::string participant_p1;
  std::string participant_p2;
  PersonTrack p1;
  PersonTrack p2;

  std::size_t size() const { return p1.size(); }
  double fps() const { return p1.fps; }

  void check() const {
    p1.check();
    p2.check();
    if (p1.size() != p2.size() || p1.fps != p2.fps)
      throw DataError("recording " + session_id + ": persons differ in length or frame rate");
  }

  bool operator==(const DyadRecording&) const = default;
};

/// One feature column of a track as a plain series.
inline std::vector<double> speech_column(const PersonTrack& track, std::size_t feature) {
  std::vector<double> out(track.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = track.speech[i].v[feature];
  return out;
}

inline std::vector<double> face_column(const std::vector<FaceFrame>& frames, std::size_t feature) {
  std::vector<double> out(frames.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = frames[i].v[feature];
  return out;
}

inline std::vector<double> face_column(const PersonTrack& track, std::size_t feature) {
  return face_column(track.face, feature);
}

}  // namespace amii::feat
