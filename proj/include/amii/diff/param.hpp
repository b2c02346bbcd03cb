// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "amii/diff/tensor.hpp"
#include "amii/error.hpp"

namespace amii::diff {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Ordered, uniquely named parameter collection. Indices are stable once added.
class ParamSet {
 public:
  std::size_t add(std::string name, Tensor value) {
    if (index_.contains(name)) throw ParameterError("duplicate parameter name: " + name);
    const std::size_t idx = params_.size();
    index_.emplace(name, idx);
    Tensor grad(value.shape());
    params_.push_back(Param{std::move(name), std::move(value), std::move(grad)});
    return idx;
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ParameterError("unknown parameter: " + name);
    return it->second;
  }

  Param& operator[](std::size_t i) { return params_[i]; }
  const Param& operator[](std::size_t i) const { return params_[i]; }
  Param& at(const std::string& name) { return params_[index_of(name)]; }
  const Param& at(const std::string& name) const { return params_[index_of(name)]; }

  std::size_t size() const noexcept { return params_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  void zero_grads() {
    for (auto& p : params_) p.grad.fill(0.0);
  }

  /// Fresh zeroed gradient buffers shaped like the parameters, for worker-local accumulation.
  std::vector<Tensor> make_grad_buffers() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.emplace_back(p.value.shape());
    return out;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace amii::diff
