// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "amii/diff/param.hpp"
#include "amii/diff/tensor.hpp"
#include "amii/error.hpp"

namespace amii::diff {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  bool valid() const noexcept { return tape != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Records primitive operations of one forward pass and replays them in
/// reverse to accumulate gradients. A tape supports exactly one backward
/// pass; reset() clears it for reuse.
///
/// Parameter leaves are bound to one ParamSet. Using the same parameter twice
/// yields the same leaf, so shared weights collect gradient from every path.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(ParamSet* params = nullptr, bool record_grad = true)
      : params_(params), mutable_params_(params), record_grad_(record_grad) {}

  /// Forward-only tape over read-only parameters.
  explicit Tape(const ParamSet& params) : params_(&params), record_grad_(false) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) { return push(std::move(value), false, nullptr, -1); }

  Var param(std::size_t index) {
    if (params_ == nullptr) throw StateError("tape: no parameter set bound");
    if (index >= params_->size()) throw ParameterError("tape: parameter index out of range");
    if (auto it = param_nodes_.find(index); it != param_nodes_.end()) return Var{this, it->second};
    Var v = push((*params_)[index].value, record_grad_, nullptr, static_cast<std::ptrdiff_t>(index));
    param_nodes_.emplace(index, v.id);
    return v;
  }

  Var param(const std::string& name) {
    if (params_ == nullptr) throw StateError("tape: no parameter set bound");
    return param(params_->index_of(name));
  }

  /// Appends an op result. `inputs` decides whether the node needs a gradient;
  /// `fn` is kept only when it does.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
    bool needs = false;
    for (const Var& in : inputs) {
      if (in.tape != this) throw StateError("tape: input recorded on a different tape");
      needs = needs || nodes_[in.id].requires_grad;
    }
    needs = needs && record_grad_;
    return push(std::move(value), needs, needs ? std::move(fn) : nullptr, -1);
  }

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  Tensor& grad(std::size_t id) { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool records_grad() const noexcept { return record_grad_; }
  const ParamSet* params() const noexcept { return params_; }

  /// Accumulates d(loss)/d(param) into the bound ParamSet's grads.
  void backward(Var loss) {
    if (params_ == nullptr) {
      run_backward(loss);
      return;
    }
    if (mutable_params_ == nullptr) throw StateError("tape: parameter set is read-only");
    auto* params = mutable_params_;
    run_backward(loss);
    for (const auto& [index, node] : param_nodes_) {
      Tensor& dst = (*params)[index].grad;
      add_into(dst, nodes_[node].grad);
    }
  }

  /// Accumulates parameter gradients into caller-owned buffers indexed like the ParamSet.
  void backward(Var loss, std::span<Tensor> grads) {
    if (params_ == nullptr || grads.size() != params_->size())
      throw StateError("tape: gradient buffer count does not match parameter set");
    run_backward(loss);
    for (const auto& [index, node] : param_nodes_) add_into(grads[index], nodes_[node].grad);
  }

  void reset() {
    nodes_.clear();
    param_nodes_.clear();
    consumed_ = false;
  }

  /// When set, backward appends the id of every node it visits.
  void set_trace(std::vector<std::size_t>* trace) { trace_ = trace; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    std::ptrdiff_t param = -1;
    bool requires_grad = false;
  };

  Var push(Tensor value, bool requires_grad, BackwardFn fn, std::ptrdiff_t param) {
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(fn), param, requires_grad});
    return Var{this, nodes_.size() - 1};
  }

  static void add_into(Tensor& dst, const Tensor& src) {
    if (src.empty()) return;
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  }

  void run_backward(Var loss) {
    if (!record_grad_) throw StateError("tape: recorded without gradients");
    if (consumed_) throw StateError("tape: backward already run; reset the tape first");
    if (loss.tape != this) throw StateError("tape: loss recorded on a different tape");
    if (nodes_[loss.id].value.size() != 1)
      throw DimensionError("backward: loss must be scalar, got " + shape_str(nodes_[loss.id].value.shape()));
    consumed_ = true;
    for (auto& n : nodes_) {
      if (n.requires_grad) n.grad = Tensor(n.value.shape());
    }
    if (!nodes_[loss.id].requires_grad) return;
    nodes_[loss.id].grad[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      if (trace_) trace_->push_back(i);
      if (nodes_[i].backward) nodes_[i].backward(*this, i);
    }
  }

  std::vector<Node> nodes_;
  std::unordered_map<std::size_t, std::size_t> param_nodes_;
  const ParamSet* params_ = nullptr;
  ParamSet* mutable_params_ = nullptr;
  std::vector<std::size_t>* trace_ = nullptr;
  bool record_grad_ = true;
  bool consumed_ = false;
};

inline const Tensor& Var::value() const { return tape->value(id); }

}  // namespace amii::diff
