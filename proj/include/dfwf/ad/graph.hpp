// Copyright 2026 The DFWF Lab Authors
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

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dfwf/ad/tensor.hpp"

namespace dfwf::ad {

template <class T>
struct Node;

template <class T>
using BackwardFn = std::function<void(Node<T>&)>;

// One vertex of the computation graph. Leaves hold parameters or inputs;
// interior nodes carry a backward function that reads `grad` and
// accumulates into the parents' gradients.
template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn<T> backward;

  // Gradient buffer, allocated (zero) on first use.
  Tensor<T>& grad_buffer() {
    if (grad.shape() != value.shape()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

// Handle to a graph node. Copies share the node.
template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var constant(Tensor<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    return Var(std::move(n));
  }

  static Var leaf(Tensor<T> value, bool requires_grad = true) {
    auto v = constant(std::move(value));
    v.node_->requires_grad = requires_grad;
    return v;
  }

  bool defined() const { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  Node<T>& node() const { return *node_; }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Gradient recording switch for the current thread.
inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

inline bool grad_enabled() { return grad_mode_flag(); }

// Disables graph recording for its lifetime (inference, teacher passes).
class NoGradGuard {
 public:
  NoGradGuard() : previous_(grad_mode_flag()) { grad_mode_flag() = false; }
  ~NoGradGuard() { grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds the output node of an op. The backward function is attached only
// when some input requires a gradient, so forward passes through frozen
// models record no graph.
template <class T>
Var<T> make_op(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn<T> backward) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  bool any = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) any = any || in.requires_grad();
  }
  if (any) {
    n->requires_grad = true;
    n->is_leaf = false;
    for (const auto& in : inputs) n->parents.push_back(in.node_ptr());
    n->backward = std::move(backward);
  }
  return Var<T>(std::move(n));
}

// Trainable tensor with its gradient. Copying a Parameter copies the tensor
// and the gradient into a fresh leaf, so models built from Parameters have
// value semantics.
template <class T>
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor<T> value, bool trainable = true)
      : name_(std::move(name)), var_(Var<T>::leaf(std::move(value), trainable)) {
    var_.node().grad = Tensor<T>(var_.shape());
  }
  Parameter(const Parameter& other)
      : name_(other.name_), var_(Var<T>::leaf(other.tensor(), other.trainable())) {
    var_.node().grad = other.gradient();
  }
  Parameter& operator=(const Parameter& other) {
    if (this != &other) *this = Parameter(other);
    return *this;
  }
  Parameter(Parameter&&) noexcept = default;
  Parameter& operator=(Parameter&&) noexcept = default;

  const std::string& name() const { return name_; }
  const Var<T>& var() const { return var_; }
  const Tensor<T>& tensor() const { return var_.value(); }
  Tensor<T>& tensor() { return var_.mutable_value(); }
  const Tensor<T>& gradient() const { return var_.grad(); }
  Tensor<T>& gradient() { return var_.node().grad; }
  const Shape& shape() const { return var_.shape(); }

  bool trainable() const { return var_.requires_grad(); }
  void set_trainable(bool on) { var_.node().requires_grad = on; }
  void zero_grad() { var_.node().grad_buffer().fill(T{0}); }

 private:
  std::string name_;
  Var<T> var_;
};

// Reverse-mode sweep from a scalar. Interior gradients are recomputed from
// scratch on every call; leaf gradients accumulate, so two calls without
// zeroing double them.
template <class T>
void backward(const Var<T>& loss) {
  if (!loss.defined() || loss.value().size() != 1) {
    throw ShapeError("backward() requires a scalar loss, got " +
                     (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{&loss.node(), 0}};
  visited.insert(&loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<T>* n : order) {
    if (!n->is_leaf) n->grad = Tensor<T>(n->value.shape());
  }
  loss.node().grad_buffer()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (!n->is_leaf && n->backward) n->backward(*n);
  }
}

}  // namespace dfwf::ad
