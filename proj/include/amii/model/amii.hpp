// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "amii/diff/ops.hpp"
#include "amii/diff/param.hpp"
#include "amii/diff/tape.hpp"
#include "amii/error.hpp"
#include "amii/feat/windows.hpp"
#include "amii/model/config.hpp"
#include "amii/model/layers.hpp"

namespace amii::model {

// ---------------------------------------------------------------------------
// Parameter layout
// ---------------------------------------------------------------------------

enum class InitKind { kGlorot, kZero, kLstmBias };

struct ParamSpec {
  std::string name;
  diff::Shape shape;
  InitKind init = InitKind::kGlorot;
};

namespace detail {

inline void add_dense(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t in, std::size_t units) {
  out.push_back({prefix + ".w", {in, units}, InitKind::kGlorot});
  out.push_back({prefix + ".b", {1, units}, InitKind::kZero});
}

inline void add_attention(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t c) {
  for (const char* p : {"q", "k", "v", "o"}) {
    out.push_back({prefix + ".w" + p, {c, c}, InitKind::kGlorot});
    out.push_back({prefix + ".b" + p, {1, c}, InitKind::kZero});
  }
}

inline void add_memory_cell(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t in, std::size_t c) {
  out.push_back({prefix + ".w_in", {in, 4 * c}, InitKind::kGlorot});
  out.push_back({prefix + ".w_rec", {c, 4 * c}, InitKind::kGlorot});
  out.push_back({prefix + ".b", {1, 4 * c}, InitKind::kLstmBias});
}

}  // namespace detail

/// Every parameter the configured network reads, in a fixed order. Disabled
/// encoders contribute no parameters. The intra-personal encoder appears once
/// and serves both persons.
inline std::vector<ParamSpec> param_layout(const AmiiConfig& cfg) {
  cfg.validate();
  const std::size_t c = cfg.cell;
  std::vector<ParamSpec> out;
  for (auto [mod, dim] : {std::pair{"speech", cfg.speech_dim}, std::pair{"face", cfg.face_dim}}) {
    const std::string m = mod;
    detail::add_dense(out, m + ".in", dim, c);
    detail::add_attention(out, m + ".sa", c);
    detail::add_dense(out, m + ".out", c, c);
    if (cfg.use_memory_lstm) detail::add_memory_cell(out, m + ".mem", c, c);
  }
  if (cfg.use_dual_cross_attention) {
    detail::add_attention(out, "dual.ca_speech", c);
    detail::add_attention(out, "dual.ca_face", c);
  }
  detail::add_dense(out, "dual.dense", 2 * c, c);
  if (cfg.use_inter_encoder) {
    detail::add_attention(out, "inter.ca_a", c);
    detail::add_attention(out, "inter.ca_u", c);
    detail::add_dense(out, "inter.dense", 2 * c, c);
  }
  detail::add_dense(out, "decoder.hidden", cfg.use_inter_encoder ? 2 * c : c, cfg.decoder_hidden);
  detail::add_dense(out, "decoder.out", cfg.decoder_hidden, cfg.face_dim);
  return out;
}

inline std::size_t param_count(const AmiiConfig& cfg) {
  std::size_t n = 0;
  for (const auto& spec : param_layout(cfg)) n += diff::shape_size(spec.shape);
  return n;
}

/// Glorot-uniform weights, zero biases, memory-cell forget-gate bias 1.
inline diff::ParamSet init_params(const AmiiConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  diff::ParamSet params;
  for (const auto& spec : param_layout(cfg)) {
    diff::Tensor t(spec.shape);
    switch (spec.init) {
      case InitKind::kGlorot: {
        const double limit = std::sqrt(6.0 / static_cast<double>(spec.shape[0] + spec.shape[1]));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : t.values()) v = dist(rng);
        break;
      }
      case InitKind::kZero:
        break;
      case InitKind::kLstmBias: {
        const std::size_t c = spec.shape[1] / 4;
        for (std::size_t j = c; j < 2 * c; ++j) t[j] = 1.0;
        break;
      }
    }
    params.add(spec.name, std::move(t));
  }
  return params;
}

/// Throws ConsistencyError unless `params` matches the layout of `cfg` exactly.
inline void check_params(const diff::ParamSet& params, const AmiiConfig& cfg) {
  const auto layout = param_layout(cfg);
  if (layout.size() != params.size())
    throw ConsistencyError("parameter set has " + std::to_string(params.size()) + " tensors, configuration expects " +
                           std::to_string(layout.size()));
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (params[i].name != layout[i].name || params[i].value.shape() != layout[i].shape)
      throw ConsistencyError("parameter " + std::to_string(i) + ": found " + params[i].name + " " +
                             diff::shape_str(params[i].value.shape()) + ", expected " + layout[i].name + " " +
                             diff::shape_str(layout[i].shape));
  }
}

// ---------------------------------------------------------------------------
// Encoders and generator
// ---------------------------------------------------------------------------

/// Modality memory: dense -> self-attention -> dense (ReLU) -> memory cell.
/// Without the memory cell the post-attention dense output passes through.
inline Var modality_memory_encode(Tape& tape, Var x_mod, const std::string& modality, const AmiiConfig& cfg,
                                  AttentionTrace* trace = nullptr) {
  Var h = dense(tape, x_mod, modality + ".in", Activation::kLinear);
  h = self_attention(tape, h, modality + ".sa", cfg.heads, trace);
  h = dense(tape, h, modality + ".out", Activation::kRelu);
  if (!cfg.use_memory_lstm) return h;
  return memory_cell_forward(tape, h, modality + ".mem");
}

struct PairEncoding {
  Var left;   // first cross-attention output (or its query input when ablated)
  Var right;  // second
  Var out;    // dense projection of [left, right]
};

/// Dual-modality encoder: speech queries face, face queries speech, then
/// concatenation and a dense layer to c. Without cross-attention the two
/// memories are concatenated directly.
inline PairEncoding dual_modality_encode(Tape& tape, Var speech_mem, Var face_mem, const AmiiConfig& cfg) {
  PairEncoding enc;
  if (cfg.use_dual_cross_attention) {
    enc.left = cross_attention(tape, speech_mem, face_mem, "dual.ca_speech", cfg.heads);
    enc.right = cross_attention(tape, face_mem, speech_mem, "dual.ca_face", cfg.heads);
  } else {
    enc.left = speech_mem;
    enc.right = face_mem;
  }
  enc.out = dense(tape, diff::concat_cols(enc.left, enc.right), "dual.dense", Activation::kRelu);
  return enc;
}

struct IntraEncoding {
  Var speech_mem;
  Var face_mem;
  Var intra;
};

inline IntraEncoding intra_encode(Tape& tape, Var speech, Var face, const AmiiConfig& cfg) {
  IntraEncoding e;
  e.speech_mem = modality_memory_encode(tape, speech, "speech", cfg);
  e.face_mem = modality_memory_encode(tape, face, "face", cfg);
  e.intra = dual_modality_encode(tape, e.speech_mem, e.face_mem, cfg).out;
  return e;
}

/// Inter-personal encoder: A queries U, U queries A, concatenation, dense to c.
inline PairEncoding inter_encode(Tape& tape, Var intra_a, Var intra_u, const AmiiConfig& cfg) {
  PairEncoding enc;
  enc.left = cross_attention(tape, intra_a, intra_u, "inter.ca_a", cfg.heads);
  enc.right = cross_attention(tape, intra_u, intra_a, "inter.ca_u", cfg.heads);
  enc.out = dense(tape, diff::concat_cols(enc.left, enc.right), "inter.dense", Activation::kRelu);
  return enc;
}

inline Var pool_time(Var z, Pooling pooling) {
  if (pooling == Pooling::kMean) return diff::mean_rows(z);
  return diff::slice_rows(z, z.value().rows() - 1, 1);
}

/// Shared decoder for one person: pooled [Z_intra^P, Z_inter] -> hidden (ReLU) -> face frame.
/// `inter` is ignored when the inter-personal encoder is disabled.
inline Var decode_face(Tape& tape, Var intra_p, Var inter, const AmiiConfig& cfg) {
  Var pooled = pool_time(intra_p, cfg.pooling);
  if (cfg.use_inter_encoder) pooled = diff::concat_cols(pooled, pool_time(inter, cfg.pooling));
  Var hidden = dense(tape, pooled, "decoder.hidden", Activation::kRelu);
  return dense(tape, hidden, "decoder.out", Activation::kLinear);
}

inline std::pair<Var, Var> generate_faces(Tape& tape, Var intra_a, Var intra_u, Var inter, const AmiiConfig& cfg) {
  return {decode_face(tape, intra_a, inter, cfg), decode_face(tape, intra_u, inter, cfg)};
}

struct Activations {
  Var speech_mem_a, face_mem_a, speech_mem_u, face_mem_u;
  Var intra_a, intra_u;
  Var inter;  // invalid when the inter-personal encoder is disabled
};

struct Prediction {
  Var y_a;  // [1 x 10]
  Var y_u;
  Activations acts;
};

/// Full network on one set of windows. Both persons go through the same
/// intra-personal encoder.
inline Prediction forward(Tape& tape, const Tensor& speech_a, const Tensor& face_a, const Tensor& speech_u,
                          const Tensor& face_u, const AmiiConfig& cfg) {
  for (const Tensor* w : {&speech_a, &face_a, &speech_u, &face_u}) {
    if (w->rank() != 2 || w->rows() != cfg.window)
      throw DimensionError("forward: window " + diff::shape_str(w->shape()) + " does not have " +
                           std::to_string(cfg.window) + " frames");
  }
  if (speech_a.cols() != cfg.speech_dim || speech_u.cols() != cfg.speech_dim || face_a.cols() != cfg.face_dim ||
      face_u.cols() != cfg.face_dim)
    throw DimensionError("forward: feature width mismatch with configuration");

  Prediction p;
  const IntraEncoding a = intra_encode(tape, tape.constant(speech_a), tape.constant(face_a), cfg);
  const IntraEncoding u = intra_encode(tape, tape.constant(speech_u), tape.constant(face_u), cfg);
  p.acts.speech_mem_a = a.speech_mem;
  p.acts.face_mem_a = a.face_mem;
  p.acts.speech_mem_u = u.speech_mem;
  p.acts.face_mem_u = u.face_mem;
  p.acts.intra_a = a.intra;
  p.acts.intra_u = u.intra;
  if (cfg.use_inter_encoder) p.acts.inter = inter_encode(tape, a.intra, u.intra, cfg).out;
  std::tie(p.y_a, p.y_u) = generate_faces(tape, a.intra, u.intra, p.acts.inter, cfg);
  return p;
}

inline Prediction forward(Tape& tape, const feat::TrainingSample& s, const AmiiConfig& cfg) {
  return forward(tape, s.speech_a, s.face_a, s.speech_u, s.face_u, cfg);
}

/// (MSE_A + MSE_U) / 2 for one sample.
inline Var sample_loss(Tape& tape, const feat::TrainingSample& s, const AmiiConfig& cfg) {
  const Prediction p = forward(tape, s, cfg);
  Var la = diff::mse_loss(p.y_a, tape.constant(s.target_a));
  Var lu = diff::mse_loss(p.y_u, tape.constant(s.target_u));
  return diff::scale(diff::add(la, lu), 0.5);
}

/// Gradient-free evaluation of both next-frame predictions.
inline std::pair<Tensor, Tensor> predict(const diff::ParamSet& params, const Tensor& speech_a, const Tensor& face_a,
                                         const Tensor& speech_u, const Tensor& face_u, const AmiiConfig& cfg) {
  Tape tape(params);
  const Prediction p = forward(tape, speech_a, face_a, speech_u, face_u, cfg);
  return {p.y_a.value(), p.y_u.value()};
}

inline double evaluate_loss(const diff::ParamSet& params, const feat::TrainingSample& s, const AmiiConfig& cfg) {
  Tape tape(params);
  return sample_loss(tape, s, cfg).value().item();
}

}  // namespace amii::model
