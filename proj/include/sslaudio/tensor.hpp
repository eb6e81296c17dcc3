// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sslaudio/error.hpp"

namespace sslaudio {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape);

namespace detail {

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;  // empty when absent
  bool requires_grad = false;
  bool is_leaf = true;
};

}  // namespace detail

/// Dense row-major array handle. Copies share storage; values are treated as
/// immutable once the tensor enters a graph. Only the grad slot (and, between
/// steps, parameter values touched by an optimizer) may change.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false)
      : impl_(std::make_shared<detail::TensorImpl<T>>()) {
    for (std::size_t extent : shape) {
      if (extent == 0) {
        throw DimensionError("tensor extents must be positive, got " +
                             shape_string(shape));
      }
    }
    if (shape.empty()) shape = {1};
    if (shape_size(shape) != values.size()) {
      throw DimensionError("shape " + shape_string(shape) + " holds " +
                           std::to_string(shape_size(shape)) +
                           " values, got " + std::to_string(values.size()));
    }
    impl_->shape = std::move(shape);
    impl_->values = std::move(values);
    impl_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<T>(n, T{0}), requires_grad);
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    const std::size_t n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return Tensor({1}, {value}, requires_grad);
  }

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->values.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  // Leading extent and the product of the rest; every tensor is viewable as
  // a matrix this way.
  std::size_t rows() const { return impl_->shape.front(); }
  std::size_t cols() const { return size() / rows(); }

  std::span<const T> values() const { return impl_->values; }
  std::span<T> mutable_values() { return impl_->values; }
  const T* data() const { return impl_->values.data(); }
  T item() const {
    if (size() != 1) {
      throw ContractError("item() on tensor of shape " + shape_string(shape()));
    }
    return impl_->values[0];
  }
  T at(std::size_t r, std::size_t c) const {
    return impl_->values[r * cols() + c];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool flag) { impl_->requires_grad = flag; }
  bool is_leaf() const { return impl_->is_leaf; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }
  std::span<T> mutable_grad() const {
    ensure_grad();
    return impl_->grad;
  }
  void ensure_grad() const {
    if (impl_->grad.empty()) impl_->grad.assign(size(), T{0});
  }
  void zero_grad() const {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T{0});
  }
  void clear_grad() const { impl_->grad.clear(); impl_->grad.shrink_to_fit(); }

  // The grad slot lives in shared storage, so it is writable through const
  // handles. Accumulates g, allocating the slot on first use.
  void accumulate_grad(std::span<const T> g) const {
    if (g.size() != size()) {
      throw DimensionError("gradient size mismatch");
    }
    ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) impl_->grad[i] += g[i];
  }

  // Deep copy detached from any graph.
  Tensor clone(bool requires_grad = false) const {
    return Tensor(impl_->shape, impl_->values, requires_grad);
  }

  // Detached copy with new extents.
  Tensor reshaped_copy(Shape shape) const {
    return Tensor(std::move(shape), impl_->values, false);
  }

  const detail::TensorImpl<T>* id() const { return impl_.get(); }
  void mark_non_leaf() { impl_->is_leaf = false; }

 private:
  std::shared_ptr<detail::TensorImpl<T>> impl_;
};

/// Tape of recorded operations in execution order. Every node's inputs were
/// produced earlier on the tape (or are leaves), so a reverse sweep is a
/// valid topological traversal.
template <typename T>
class Graph {
 public:
  // Receives the output gradient; accumulates into input grad slots.
  using BackwardFn = std::function<void(std::span<const T> grad_output)>;

  struct Node {
    std::string kind;
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    BackwardFn backward;
  };

  void record(std::string_view kind, std::vector<Tensor<T>> inputs,
              Tensor<T> output, BackwardFn backward) {
    output.mark_non_leaf();
    nodes_.push_back(Node{std::string(kind), std::move(inputs),
                          std::move(output), std::move(backward)});
  }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::vector<Node>& mutable_nodes() { return nodes_; }
  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

namespace detail {
template <typename T>
Graph<T>*& active_graph_slot() {
  thread_local Graph<T>* graph = nullptr;
  return graph;
}
}  // namespace detail

template <typename T>
Graph<T>* active_graph() {
  return detail::active_graph_slot<T>();
}

/// Makes `graph` the recording target for primitives on this thread for the
/// lifetime of the scope. Scopes nest.
template <typename T>
class GraphScope {
 public:
  explicit GraphScope(Graph<T>& graph) : previous_(active_graph<T>()) {
    detail::active_graph_slot<T>() = &graph;
  }
  ~GraphScope() { detail::active_graph_slot<T>() = previous_; }
  GraphScope(const GraphScope&) = delete;
  GraphScope& operator=(const GraphScope&) = delete;

 private:
  Graph<T>* previous_;
};

/// Suspends recording (evaluation passes, finite-difference probes).
template <typename T>
class NoGradScope {
 public:
  NoGradScope() : previous_(active_graph<T>()) {
    detail::active_graph_slot<T>() = nullptr;
  }
  ~NoGradScope() { detail::active_graph_slot<T>() = previous_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Graph<T>* previous_;
};

/// Reverse sweep from a scalar loss. Leaf tensors with requires_grad receive
/// d(loss)/d(leaf) added to their grad slot; intermediate grad slots are
/// released afterwards.
template <typename T>
void backward(Graph<T>& graph, Tensor<T> loss) {
  if (loss.size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        shape_string(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw ContractError("loss does not depend on any tensor requiring grad");
  }
  loss.ensure_grad();
  loss.mutable_grad()[0] += T{1};
  auto& nodes = graph.mutable_nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    if (!it->output.has_grad()) continue;  // not on a path to the loss
    it->backward(it->output.grad());
    it->output.clear_grad();
  }
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace sslaudio
