#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "morphtag/error.hpp"
#include "morphtag/tensor.hpp"

namespace morphtag {

enum class Mode { train, eval };

// A named trainable tensor. Gradients accumulate into `grad` when the
// parameter takes part in a graph and is not frozen.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() {
    if (!grad.same_shape(value)) grad = Tensor<T>(value.shape());
    grad.zero();
  }
};

template <typename T>
class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives
// and has not been reset.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Graph<T>* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph<T>& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor<T>& value() const { return graph_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const { return graph_->requires_grad(id_); }
  const Tensor<T>& grad() const { return graph_->grad_of(id_); }

 private:
  Graph<T>* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Define-by-run tape. Nodes are appended in evaluation order, which is a
// topological order of the dataflow; backward() walks it in reverse.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  // With track_gradients=false no node requires a gradient and parameters
  // are only read, so several such graphs may share a parameter set.
  explicit Graph(bool track_gradients = true) : track_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> constant(Tensor<T> value) { return push(std::move(value), false, {}, "constant"); }

  // Leaf that receives a gradient (used for inputs under test).
  Var<T> input(Tensor<T> value) { return push(std::move(value), track_, {}, "input"); }

  Var<T> param(Parameter<T>& p) {
    const bool tracked = track_ && !p.frozen;
    if (tracked && !p.grad.same_shape(p.value)) p.zero_grad();
    Node& node = nodes_.emplace_back();
    node.value = &p.value;
    node.grad_target = tracked ? &p.grad : nullptr;
    node.requires_grad = tracked;
    return {this, nodes_.size() - 1};
  }

  // Appends an op result. `requires_grad` should be true iff any input
  // requires a gradient; `backward` then propagates this node's grad.
  Var<T> record(Tensor<T> value, bool requires_grad, BackwardFn backward, const char* op) {
    return push(std::move(value), requires_grad, std::move(backward), op);
  }

  const Tensor<T>& value(std::size_t id) const { return *nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  // Gradient buffer of a node, zero-initialised on first access.
  Tensor<T>& grad(std::size_t id) {
    Node& node = nodes_.at(id);
    node.touched = true;
    if (node.grad_target) return *node.grad_target;
    if (!node.grad_owned.same_shape(*node.value)) node.grad_owned = Tensor<T>(node.value->shape());
    return node.grad_owned;
  }

  const Tensor<T>& grad_of(std::size_t id) const {
    const Node& node = nodes_.at(id);
    if (node.grad_target) return *node.grad_target;
    if (!node.touched) throw GraphError("no gradient recorded for node " + std::to_string(id));
    return node.grad_owned;
  }

  void backward(const Var<T>& loss) {
    if (loss.valid() && &loss.graph() != this) throw GraphError("loss belongs to another graph");
    if (backward_done_) throw GraphError("backward called twice without reset");
    if (loss.value().size() != 1) {
      throw GraphError("backward requires a scalar loss, got shape " + shape_string(loss.shape()));
    }
    backward_done_ = true;
    if (!requires_grad(loss.id())) return;
    grad(loss.id())[0] += T(1);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (node.backward && node.requires_grad && node.touched) node.backward(*this, i);
    }
    for (std::size_t i = 0; i <= loss.id(); ++i) {
      const Node& node = nodes_[i];
      if (!node.backward && node.touched && !grad_of(i).all_finite()) {
        throw NumericError("non-finite gradient at leaf node " + std::to_string(i));
      }
    }
  }

  void reset() {
    nodes_.clear();
    backward_done_ = false;
  }

  std::size_t size() const { return nodes_.size(); }
  bool tracks_gradients() const { return track_; }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* value = nullptr;
    Tensor<T> grad_owned;
    Tensor<T>* grad_target = nullptr;
    bool requires_grad = false;
    bool touched = false;
    BackwardFn backward;
  };

  Var<T> push(Tensor<T> value, bool requires_grad, BackwardFn backward, const char* op) {
    if (!value.all_finite()) throw NumericError(std::string("non-finite output from ") + op);
    Node& node = nodes_.emplace_back();
    node.owned = std::move(value);
    node.value = &node.owned;
    node.requires_grad = requires_grad;
    node.backward = std::move(backward);
    return {this, nodes_.size() - 1};
  }

  // deque keeps node addresses stable so `value` may point into `owned`.
  std::deque<Node> nodes_;
  bool track_ = true;
  bool backward_done_ = false;
};

}  // namespace morphtag
