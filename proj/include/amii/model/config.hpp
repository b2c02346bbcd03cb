// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>

#include "amii/error.hpp"
#include "amii/feat/frames.hpp"

namespace amii::model {

enum class Pooling { kLast, kMean };

struct AmiiConfig {
  std::size_t window = 100;         // T, past frames per input window
  std::size_t heads = 2;            // h
  std::size_t cell = 16;            // c
  std::size_t decoder_hidden = 20;  // hidden width of the behavior generator
  std::size_t speech_dim = feat::kSpeechDim;
  std::size_t face_dim = feat::kFaceDim;
  bool use_memory_lstm = true;
  bool use_dual_cross_attention = true;
  bool use_inter_encoder = true;
  Pooling pooling = Pooling::kLast;

  void validate() const {
    if (window < 1) throw ConfigError("model config: window must be >= 1");
    if (heads < 1 || cell < 1 || cell % heads != 0)
      throw ConfigError("model config: cell size " + std::to_string(cell) + " must be a positive multiple of heads " +
                        std::to_string(heads));
    if (decoder_hidden < 1 || speech_dim < 1 || face_dim < 1) throw ConfigError("model config: zero-sized layer");
  }

  bool operator==(const AmiiConfig&) const = default;
};

/// Ablation variant names used throughout the tooling.
enum class Ablation { kFull, kNoMemory, kNoDual, kNoInter };

inline const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kNoMemory: return "noE_m";
    case Ablation::kNoDual: return "noE_dual";
    case Ablation::kNoInter: return "noE_inter";
  }
  return "full";
}

inline Ablation parse_ablation(const std::string& s) {
  if (s == "full" || s == "none") return Ablation::kFull;
  if (s == "noE_m") return Ablation::kNoMemory;
  if (s == "noE_dual") return Ablation::kNoDual;
  if (s == "noE_inter") return Ablation::kNoInter;
  throw ConfigError("unknown ablation '" + s + "' (expected full, noE_m, noE_dual, noE_inter)");
}

inline AmiiConfig with_ablation(AmiiConfig cfg, Ablation a) {
  cfg.use_memory_lstm = a != Ablation::kNoMemory;
  cfg.use_dual_cross_attention = a != Ablation::kNoDual;
  cfg.use_inter_encoder = a != Ablation::kNoInter;
  return cfg;
}

inline Ablation ablation_of(const AmiiConfig& cfg) {
  if (!cfg.use_memory_lstm) return Ablation::kNoMemory;
  if (!cfg.use_dual_cross_attention) return Ablation::kNoDual;
  if (!cfg.use_inter_encoder) return Ablation::kNoInter;
  return Ablation::kFull;
}

}  // namespace amii::model
