// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include "amii/diff/tape.hpp"
#include "amii/diff/tensor.hpp"
#include "amii/error.hpp"

namespace amii::diff {

namespace detail {

inline void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

inline void require_matrix(const Var& a, const char* op) { diff::require_matrix(a.value(), op); }

// out[m x n] += a[m x k] * b[k x n]
inline void gemm_nn(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out[m x k] += g[m x n] * b[k x n]^T
inline void gemm_nt(const Tensor& g, const Tensor& b, Tensor& out) {
  const std::size_t m = g.rows(), n = g.cols(), k = b.rows();
  const double* pg = g.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = pg + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = pb + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
      po[i * k + p] += acc;
    }
  }
}

// out[k x n] += a[m x k]^T * g[m x n]
inline void gemm_tn(const Tensor& a, const Tensor& g, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = g.cols();
  const double* pa = a.data().data();
  const double* pg = g.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = pg + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      double* orow = po + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * grow[j];
    }
  }
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename F>
Var unary(Var a, F&& f, Tape::BackwardFn fn) {
  Tensor out(a.shape());
  auto in = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(in[i]);
  return a.tape->record(std::move(out), {a}, std::move(fn));
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  detail::require_matrix(a, "matmul");
  detail::require_matrix(b, "matmul");
  if (a.value().cols() != b.value().rows())
    throw DimensionError("matmul: shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out = Tensor::matrix(a.value().rows(), b.value().cols());
  detail::gemm_nn(a.value(), b.value(), out);
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) detail::gemm_nt(g, t.value(ib), t.grad(ia));
    if (t.requires_grad(ib)) detail::gemm_tn(t.value(ia), g, t.grad(ib));
  });
}

inline Var transpose(Var a) {
  detail::require_matrix(a, "transpose");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  Tensor out = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(j, i) = a.value()(i, j);
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {a}, [ia, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga(i, j) += g(j, i);
  });
}

inline Var add(Var a, Var b) {
  detail::require_same_shape(a, b, "add");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    auto g = t.grad(self).data();
    for (std::size_t in : {ia, ib}) {
      if (!t.requires_grad(in)) continue;
      auto d = t.grad(in).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
    }
  });
}

inline Var sub(Var a, Var b) {
  detail::require_same_shape(a, b, "sub");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    auto g = t.grad(self).data();
    if (t.requires_grad(ia)) {
      auto d = t.grad(ia).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      auto d = t.grad(ib).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= g[i];
    }
  });
}

inline Var mul(Var a, Var b) {
  detail::require_same_shape(a, b, "mul");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    auto g = t.grad(self).data();
    if (t.requires_grad(ia)) {
      auto d = t.grad(ia).data();
      auto bv = t.value(ib).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * bv[i];
    }
    if (t.requires_grad(ib)) {
      auto d = t.grad(ib).data();
      auto av = t.value(ia).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * av[i];
    }
  });
}

inline Var scale(Var a, double s) {
  const std::size_t ia = a.id;
  return detail::unary(a, [s](double x) { return s * x; }, [ia, s](Tape& t, std::size_t self) {
    auto g = t.grad(self).data();
    auto d = t.grad(ia).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s * g[i];
  });
}

inline Var sigmoid(Var a) {
  const std::size_t ia = a.id;
  return detail::unary(a, detail::sigmoid, [ia](Tape& t, std::size_t self) {
    auto g = t.grad(self).data();
    auto y = t.value(self).data();
    auto d = t.grad(ia).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

inline Var tanh(Var a) {
  const std::size_t ia = a.id;
  return detail::unary(a, [](double x) { return std::tanh(x); }, [ia](Tape& t, std::size_t self) {
    auto g = t.grad(self).data();
    auto y = t.value(self).data();
    auto d = t.grad(ia).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

inline Var relu(Var a) {
  const std::size_t ia = a.id;
  return detail::unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [ia](Tape& t, std::size_t self) {
    auto g = t.grad(self).data();
    auto x = t.value(ia).data();
    auto d = t.grad(ia).data();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (x[i] > 0.0) d[i] += g[i];
  });
}

enum class Elementwise { kAdd, kMul, kSigmoid, kTanh, kRelu, kScale };

/// Dispatches to the named elementwise op. Binary ops read `b`; kScale reads `factor`.
inline Var elementwise(Elementwise op, Var a, Var b = {}, double factor = 1.0) {
  switch (op) {
    case Elementwise::kAdd: return add(a, b);
    case Elementwise::kMul: return mul(a, b);
    case Elementwise::kSigmoid: return sigmoid(a);
    case Elementwise::kTanh: return diff::tanh(a);
    case Elementwise::kRelu: return relu(a);
    case Elementwise::kScale: return scale(a, factor);
  }
  throw ParameterError("elementwise: unknown op");
}

/// x[m x n] + b[1 x n] broadcast over rows.
inline Var add_row_bias(Var x, Var b) {
  detail::require_matrix(x, "add_row_bias");
  const std::size_t m = x.value().rows(), n = x.value().cols();
  if (b.value().size() != n || b.value().rows() != 1)
    throw DimensionError("add_row_bias: shape " + shape_str(x.shape()) + " vs " + shape_str(b.shape()));
  Tensor out = x.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) += b.value()[j];
  const std::size_t ix = x.id, ib = b.id;
  return x.tape->record(std::move(out), {x, b}, [ix, ib, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ix)) {
      auto d = t.grad(ix).data();
      auto gs = g.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += gs[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g(i, j);
    }
  });
}

/// Row-wise softmax with max subtraction.
inline Var softmax_rows(Var x) {
  detail::require_matrix(x, "softmax_rows");
  const std::size_t m = x.value().rows(), n = x.value().cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    auto row = x.value().row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : row) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = std::exp(row[j] - mx);
      sum += out(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) out(i, j) /= sum;
  }
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {x}, [ix, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& d = t.grad(ix);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < n; ++j) d(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

/// Feature-axis concatenation: [T x a] ++ [T x b] -> [T x (a+b)].
inline Var concat_cols(Var a, Var b) {
  detail::require_matrix(a, "concat_cols");
  detail::require_matrix(b, "concat_cols");
  const std::size_t m = a.value().rows();
  if (b.value().rows() != m)
    throw DimensionError("concat_cols: shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const std::size_t na = a.value().cols(), nb = b.value().cols();
  Tensor out = Tensor::matrix(m, na + nb);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < na; ++j) out(i, j) = a.value()(i, j);
    for (std::size_t j = 0; j < nb; ++j) out(i, na + j) = b.value()(i, j);
  }
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, [ia, ib, m, na, nb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& d = t.grad(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < na; ++j) d(i, j) += g(i, j);
    }
    if (t.requires_grad(ib)) {
      Tensor& d = t.grad(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < nb; ++j) d(i, j) += g(i, na + j);
    }
  });
}

inline Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  detail::require_matrix(x, "slice_cols");
  const std::size_t m = x.value().rows(), n = x.value().cols();
  if (begin + count > n)
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside " + shape_str(x.shape()));
  Tensor out = Tensor::matrix(m, count);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = x.value()(i, begin + j);
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {x}, [ix, m, begin, count](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& d = t.grad(ix);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) d(i, begin + j) += g(i, j);
  });
}

/// Inverse of concat_cols: the first `left_cols` features and the rest.
inline std::pair<Var, Var> split_cols(Var x, std::size_t left_cols) {
  detail::require_matrix(x, "split_cols");
  if (left_cols > x.value().cols())
    throw DimensionError("split_cols: " + std::to_string(left_cols) + " columns from " + shape_str(x.shape()));
  return {slice_cols(x, 0, left_cols), slice_cols(x, left_cols, x.value().cols() - left_cols)};
}

inline Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  detail::require_matrix(x, "slice_rows");
  const std::size_t m = x.value().rows(), n = x.value().cols();
  if (begin + count > m)
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside " + shape_str(x.shape()));
  Tensor out = Tensor::matrix(count, n);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = x.value()(begin + i, j);
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {x}, [ix, n, begin, count](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& d = t.grad(ix);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = 0; j < n; ++j) d(begin + i, j) += g(i, j);
  });
}

/// Column means: [m x n] -> [1 x n].
inline Var mean_rows(Var x) {
  detail::require_matrix(x, "mean_rows");
  const std::size_t m = x.value().rows(), n = x.value().cols();
  if (m == 0) throw DimensionError("mean_rows: no rows");
  Tensor out = Tensor::matrix(1, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += x.value()(i, j);
  for (std::size_t j = 0; j < n; ++j) out[j] /= static_cast<double>(m);
  const std::size_t ix = x.id;
  return x.tape->record(std::move(out), {x}, [ix, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& d = t.grad(ix);
    const double inv = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) d(i, j) += g[j] * inv;
  });
}

/// Mean over all elements of (pred - target)^2, as a shape {1} scalar.
inline Var mse_loss(Var pred, Var target) {
  detail::require_same_shape(pred, target, "mse_loss");
  auto p = pred.value().data();
  auto y = target.value().data();
  const std::size_t n = p.size();
  if (n == 0) throw DimensionError("mse_loss: empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = p[i] - y[i];
    acc += d * d;
  }
  const std::size_t ip = pred.id, iy = target.id;
  return pred.tape->record(Tensor::scalar(acc / static_cast<double>(n)), {pred, target},
                           [ip, iy, n](Tape& t, std::size_t self) {
                             const double g = t.grad(self)[0] * 2.0 / static_cast<double>(n);
                             auto p = t.value(ip).data();
                             auto y = t.value(iy).data();
                             if (t.requires_grad(ip)) {
                               auto d = t.grad(ip).data();
                               for (std::size_t i = 0; i < n; ++i) d[i] += g * (p[i] - y[i]);
                             }
                             if (t.requires_grad(iy)) {
                               auto d = t.grad(iy).data();
                               for (std::size_t i = 0; i < n; ++i) d[i] -= g * (p[i] - y[i]);
                             }
                           });
}

/// Gated recurrent memory cell over a sequence, zero initial state.
///
/// x: [T x d], w_in: [d x 4c], w_rec: [c x 4c], bias: [1 x 4c]. Gate blocks in
/// column order are input, forget, candidate, output. Returns h_1..h_T as [T x c].
inline Var lstm_sequence(Var x, Var w_in, Var w_rec, Var bias) {
  detail::require_matrix(x, "lstm_sequence");
  detail::require_matrix(w_in, "lstm_sequence");
  detail::require_matrix(w_rec, "lstm_sequence");
  const std::size_t steps = x.value().rows(), d = x.value().cols();
  const std::size_t c = w_rec.value().rows();
  if (w_in.value().rows() != d || w_in.value().cols() != 4 * c || w_rec.value().cols() != 4 * c ||
      bias.value().size() != 4 * c) {
    throw DimensionError("lstm_sequence: x " + shape_str(x.shape()) + ", w_in " + shape_str(w_in.shape()) +
                         ", w_rec " + shape_str(w_rec.shape()) + ", bias " + shape_str(bias.shape()));
  }
  const Tensor& wi = w_in.value();
  const Tensor& wr = w_rec.value();
  const Tensor& b = bias.value();

  // gates: [T x 4c] post-activation; cells: [T x c] cell state.
  Tensor gates = Tensor::matrix(steps, 4 * c);
  Tensor cells = Tensor::matrix(steps, c);
  Tensor out = Tensor::matrix(steps, c);
  std::vector<double> z(4 * c);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t k = 0; k < 4 * c; ++k) z[k] = b[k];
    for (std::size_t p = 0; p < d; ++p) {
      const double xv = x.value()(t, p);
      if (xv == 0.0) continue;
      for (std::size_t k = 0; k < 4 * c; ++k) z[k] += xv * wi(p, k);
    }
    if (t > 0) {
      for (std::size_t p = 0; p < c; ++p) {
        const double hv = out(t - 1, p);
        if (hv == 0.0) continue;
        for (std::size_t k = 0; k < 4 * c; ++k) z[k] += hv * wr(p, k);
      }
    }
    for (std::size_t j = 0; j < c; ++j) {
      const double ig = detail::sigmoid(z[j]);
      const double fg = detail::sigmoid(z[c + j]);
      const double gg = std::tanh(z[2 * c + j]);
      const double og = detail::sigmoid(z[3 * c + j]);
      const double prev = t > 0 ? cells(t - 1, j) : 0.0;
      const double cell = fg * prev + ig * gg;
      gates(t, j) = ig;
      gates(t, c + j) = fg;
      gates(t, 2 * c + j) = gg;
      gates(t, 3 * c + j) = og;
      cells(t, j) = cell;
      out(t, j) = og * std::tanh(cell);
    }
  }

  const std::size_t ix = x.id, iwi = w_in.id, iwr = w_rec.id, ib = bias.id;
  return x.tape->record(
      std::move(out), {x, w_in, w_rec, bias},
      [ix, iwi, iwr, ib, steps, d, c, gates = std::move(gates), cells = std::move(cells)](Tape& tp,
                                                                                          std::size_t self) {
        const Tensor& dh_out = tp.grad(self);
        const Tensor& h = tp.value(self);
        const Tensor& xs = tp.value(ix);
        const Tensor& wi = tp.value(iwi);
        const Tensor& wr = tp.value(iwr);
        const bool gx = tp.requires_grad(ix), gwi = tp.requires_grad(iwi), gwr = tp.requires_grad(iwr),
                   gb = tp.requires_grad(ib);
        std::vector<double> dh_next(c, 0.0), dc_next(c, 0.0), dz(4 * c);
        for (std::size_t t = steps; t-- > 0;) {
          for (std::size_t j = 0; j < c; ++j) {
            const double ig = gates(t, j), fg = gates(t, c + j), gg = gates(t, 2 * c + j), og = gates(t, 3 * c + j);
            const double tc = std::tanh(cells(t, j));
            const double dh = dh_out(t, j) + dh_next[j];
            const double dc = dh * og * (1.0 - tc * tc) + dc_next[j];
            const double prev = t > 0 ? cells(t - 1, j) : 0.0;
            dz[j] = dc * gg * ig * (1.0 - ig);
            dz[c + j] = dc * prev * fg * (1.0 - fg);
            dz[2 * c + j] = dc * ig * (1.0 - gg * gg);
            dz[3 * c + j] = dh * tc * og * (1.0 - og);
            dc_next[j] = dc * fg;
          }
          if (gb) {
            Tensor& dbias = tp.grad(ib);
            for (std::size_t k = 0; k < 4 * c; ++k) dbias[k] += dz[k];
          }
          if (gwi) {
            Tensor& dwi = tp.grad(iwi);
            for (std::size_t p = 0; p < d; ++p) {
              const double xv = xs(t, p);
              if (xv == 0.0) continue;
              for (std::size_t k = 0; k < 4 * c; ++k) dwi(p, k) += xv * dz[k];
            }
          }
          if (gx) {
            Tensor& dx = tp.grad(ix);
            for (std::size_t p = 0; p < d; ++p) {
              double acc = 0.0;
              for (std::size_t k = 0; k < 4 * c; ++k) acc += wi(p, k) * dz[k];
              dx(t, p) += acc;
            }
          }
          if (t > 0) {
            if (gwr) {
              Tensor& dwr = tp.grad(iwr);
              for (std::size_t p = 0; p < c; ++p) {
                const double hv = h(t - 1, p);
                if (hv == 0.0) continue;
                for (std::size_t k = 0; k < 4 * c; ++k) dwr(p, k) += hv * dz[k];
              }
            }
            for (std::size_t p = 0; p < c; ++p) {
              double acc = 0.0;
              for (std::size_t k = 0; k < 4 * c; ++k) acc += wr(p, k) * dz[k];
              dh_next[p] = acc;
            }
          }
        }
      });
}

}  // namespace amii::diff
