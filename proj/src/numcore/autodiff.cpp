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

#include "depwsc/numcore/autodiff.hpp"

#include <unordered_set>
#include <utility>

namespace depwsc::num {

template <typename T>
Graph<T>::Graph(const Var<T>& root) {
  if (!root.requires_grad()) return;
  // Iterative post-order DFS; graphs can be deep enough to make recursion
  // uncomfortable.
  std::unordered_set<const Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order_.push_back(node);
      stack.pop_back();
    }
  }
}

template <typename T>
std::size_t backward(const Var<T>& loss) {
  if (!loss.defined() || loss.value().size() != 1) {
    throw ContractError("backward needs a scalar loss, got dims " +
                        (loss.defined() ? shape_str(loss.dims()) : std::string("<undefined>")));
  }
  Graph<T> graph(loss);
  for (Node<T>* node : graph.order()) {
    // Interior nodes restart from zero; leaves keep accumulating.
    if (node->backward) node->grad = Tensor<T>(node->value.dims());
  }
  if (graph.size() == 0) return 0;
  grad_of(*loss.node())[0] += T{1};
  const auto& order = graph.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward) node->backward(*node);
  }
  return graph.size();
}

template <typename T>
std::vector<Tensor<T>> gradients(const Var<T>& loss, std::vector<Var<T>> params) {
  for (auto& p : params) p.zero_grad();
  backward(loss);
  std::vector<Tensor<T>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.grad());
  return out;
}

template class Graph<float>;
template class Graph<double>;
template std::size_t backward(const Var<float>&);
template std::size_t backward(const Var<double>&);
template std::vector<Tensor<float>> gradients(const Var<float>&, std::vector<Var<float>>);
template std::vector<Tensor<double>> gradients(const Var<double>&, std::vector<Var<double>>);

}  // namespace depwsc::num
