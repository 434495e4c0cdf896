// Copyright 2026 The depwsc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "depwsc/numcore/tensor.hpp"

namespace depwsc::num {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until the node takes part in a backward pass
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;
};

/// Handle to a node in the computation graph. Copies share the node, so a
/// parameter held in two places is one parameter.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false)
      : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  static Var parameter(Tensor<T> value) { return Var(std::move(value), true); }
  static Var constant(Tensor<T> value) { return Var(std::move(value), false); }

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Tensor<T>& value() const { return node_->value; }
  /// Parameter updates only; never call while a graph built on this var is alive.
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& dims() const { return node_->value.dims(); }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }

  /// Gradient accumulated by backward(); zeros if none was accumulated.
  Tensor<T> grad() const {
    if (node_->grad.empty()) return Tensor<T>(node_->value.dims());
    return node_->grad;
  }
  void zero_grad() { node_->grad = Tensor<T>(); }

  const std::shared_ptr<Node<T>>& node() const noexcept { return node_; }
  bool same_node(const Var& other) const noexcept { return node_ == other.node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Builds an op node. The result requires grad iff some parent does; the
/// backward closure is dropped otherwise. Exposed so tests and callers can
/// define custom differentiable functions.
template <typename T>
Var<T> make_op(Tensor<T> value, std::vector<Var<T>> parents,
               std::function<void(Node<T>&)> backward) {
  Var<T> out(std::move(value), false);
  bool any = false;
  for (const auto& p : parents) any = any || p.requires_grad();
  if (any) {
    auto& node = *out.node();
    node.requires_grad = true;
    node.parents.reserve(parents.size());
    for (auto& p : parents) node.parents.push_back(p.node());
    node.backward = std::move(backward);
  }
  return out;
}

/// Gradient buffer of a node, allocated on first use.
template <typename T>
Tensor<T>& grad_of(Node<T>& node) {
  if (node.grad.empty()) node.grad = Tensor<T>(node.value.dims());
  return node.grad;
}

/// Nodes reachable from a root that require grad, in topological order
/// (parents before children).
template <typename T>
class Graph {
 public:
  explicit Graph(const Var<T>& root);

  const std::vector<Node<T>*>& order() const noexcept { return order_; }
  std::size_t size() const noexcept { return order_.size(); }

 private:
  std::vector<Node<T>*> order_;
};

/// Reverse-mode sweep from a scalar loss. Gradients of leaf parameters
/// accumulate across calls until zero_grad(); intermediate nodes start from
/// zero. Returns the number of nodes visited (each exactly once).
template <typename T>
std::size_t backward(const Var<T>& loss);

/// Convenience: zero the given parameters, run backward, return their grads.
/// Parameters with no path to the loss get zero tensors.
template <typename T>
std::vector<Tensor<T>> gradients(const Var<T>& loss, std::vector<Var<T>> params);

}  // namespace depwsc::num
