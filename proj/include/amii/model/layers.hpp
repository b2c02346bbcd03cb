// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "amii/diff/ops.hpp"
#include "amii/diff/tape.hpp"
#include "amii/error.hpp"

namespace amii::model {

using diff::Tape;
using diff::Tensor;
using diff::Var;

enum class Activation { kLinear, kRelu };

/// x[T x d_in] * w[d_in x d_out] + b, applied per time step.
inline Var dense(Var x, Var w, Var b, Activation act) {
  Var y = diff::add_row_bias(diff::matmul(x, w), b);
  return act == Activation::kRelu ? diff::relu(y) : y;
}

inline Var dense(Tape& tape, Var x, const std::string& prefix, Activation act) {
  return dense(x, tape.param(prefix + ".w"), tape.param(prefix + ".b"), act);
}

/// Softmax weights of each head, captured for inspection.
struct AttentionTrace {
  std::vector<Tensor> head_weights;
};

/// Multi-head scaled dot-product attention. Queries come from q_src, keys and
/// values from kv_src; no mask. Heads split the projected features evenly,
/// scores are scaled by 1/sqrt(c/h), and the concatenated heads go through an
/// output projection. Parameters: <prefix>.{wq,bq,wk,bk,wv,bv,wo,bo}.
inline Var cross_attention(Tape& tape, Var q_src, Var kv_src, const std::string& prefix, std::size_t heads,
                           AttentionTrace* trace = nullptr) {
  const std::size_t c = q_src.value().cols();
  if (kv_src.value().cols() != c)
    throw DimensionError("attention " + prefix + ": query features " + std::to_string(c) + " vs key/value features " +
                         std::to_string(kv_src.value().cols()));
  if (heads == 0 || c % heads != 0)
    throw DimensionError("attention " + prefix + ": " + std::to_string(c) + " features not divisible by " +
                         std::to_string(heads) + " heads");
  Var q = dense(q_src, tape.param(prefix + ".wq"), tape.param(prefix + ".bq"), Activation::kLinear);
  Var k = dense(kv_src, tape.param(prefix + ".wk"), tape.param(prefix + ".bk"), Activation::kLinear);
  Var v = dense(kv_src, tape.param(prefix + ".wv"), tape.param(prefix + ".bv"), Activation::kLinear);
  const std::size_t dh = c / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Var merged;
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = diff::slice_cols(q, h * dh, dh);
    Var kh = diff::slice_cols(k, h * dh, dh);
    Var vh = diff::slice_cols(v, h * dh, dh);
    Var weights = diff::softmax_rows(diff::scale(diff::matmul(qh, diff::transpose(kh)), scale));
    if (trace) trace->head_weights.push_back(weights.value());
    Var head = diff::matmul(weights, vh);
    merged = h == 0 ? head : diff::concat_cols(merged, head);
  }
  return dense(merged, tape.param(prefix + ".wo"), tape.param(prefix + ".bo"), Activation::kLinear);
}

inline Var self_attention(Tape& tape, Var x, const std::string& prefix, std::size_t heads,
                          AttentionTrace* trace = nullptr) {
  return cross_attention(tape, x, x, prefix, heads, trace);
}

/// Gated recurrent memory cell over the window; returns every hidden state.
/// Parameters: <prefix>.{w_in,w_rec,b}.
inline Var memory_cell_forward(Tape& tape, Var x, const std::string& prefix) {
  return diff::lstm_sequence(x, tape.param(prefix + ".w_in"), tape.param(prefix + ".w_rec"), tape.param(prefix + ".b"));
}

}  // namespace amii::model
