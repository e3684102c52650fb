// Copyright 2026 The lmtag Authors.
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

#ifndef LMTAG_GRAPH_H_
#define LMTAG_GRAPH_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lmtag/tensor.h"

namespace lmtag {

// A named trainable array with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  // Frozen parameters never receive gradient (pre-trained LM weights).
  bool frozen = false;

  void zero_grad() { grad.fill(0.0); }
};

// Owns parameters in insertion order. Pointers stay valid for the lifetime
// of the set.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  Parameter& add(std::string name, Tensor value);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  // Total scalar count over all parameters.
  std::size_t scalar_count() const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;

  void zero_grad();
  void set_frozen(bool frozen);

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Graph;

// Handle to a node recorded in a Graph.
class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph& graph() const { return *graph_; }
  int id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Graph;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  int id_ = -1;
};

// Tape of operations for reverse-mode differentiation.
//
// Nodes are appended in evaluation order, so the tape order is a topological
// order and backward() walks it in reverse. Gradients of intermediate nodes
// are materialized lazily and only on nodes that depend on a trainable
// parameter.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Tensor& out_grad)>;

  // With record_gradients off, parameter leaves never require gradient and
  // no backward closures are kept (inference mode).
  explicit Graph(bool record_gradients = true) : record_gradients_(record_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Leaf bound to a parameter. backward() adds dLoss/dParam into p.grad
  // unless p is frozen.
  Var param(Parameter& p);

  // Accumulates d(loss)/d(node) for every node; loss must be a scalar.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(int id) const { return nodes_[id].value; }
  const char* op(int id) const { return nodes_[id].op; }
  std::span<const int> parents(int id) const { return nodes_[id].parents; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  // Gradient buffer of a node, zero-filled on first access.
  Tensor& grad(int id);
  bool has_grad(int id) const { return !nodes_[id].grad.empty(); }

  // Used by operation implementations.
  Var record(Tensor value, const char* op, std::span<const Var> parents,
             BackwardFn backward);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    const char* op = "";
    std::vector<int> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  bool record_gradients_ = true;
};

// Graph operations. Shape rules (all operands rank 2):
//
//   matmul        [m x k] . [k x n]                      -> [m x n]
//   add           [m x n] + [m x n] | [1 x n] | [m x 1]  -> [m x n]
//   sub, mul      [m x n] (op) [m x n]                   -> [m x n]
//   concat        axis 0: equal cols; axis 1: equal rows
//   slice         axis 0 rows [start, start+len); axis 1 columns likewise
//   reshape       any shape with the same element count
//   sigmoid, tanh, scale  elementwise
//   softmax, log_softmax  row-wise                       -> [m x n]
//   logsumexp     axis 1 -> [m x 1]; axis 0 -> [1 x n]   (max-shifted)
//   max_over_axis axis 0 -> [1 x n]; axis 1 -> [m x 1]   (first max wins)
//   dropout_mask_apply    [m x n] * constant mask [m x n]
//   embedding_lookup      table [V x d], ids (each < V)  -> [len(ids) x d]
//   sum           [m x n] -> [1 x 1]
//   gather_sum    sum of the listed (row, col) entries   -> [1 x 1]
//
// Violations throw ShapeError naming the operation and the operand shapes.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var concat(std::span<const Var> parts, int axis);
Var slice(Var a, int axis, std::size_t start, std::size_t length);
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var sigmoid(Var a);
Var tanh(Var a);
Var softmax(Var a);
Var log_softmax(Var a);
Var logsumexp(Var a, int axis);
Var max_over_axis(Var a, int axis);
Var dropout_mask_apply(Var a, const Tensor& mask);
Var embedding_lookup(Var table, std::span<const int> ids);
Var sum(Var a);
Var gather_sum(Var a, std::span<const std::pair<std::size_t, std::size_t>> cells);

inline Var concat(std::initializer_list<Var> parts, int axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

// Inverted-dropout mask: each entry is 0 with probability rate, otherwise
// 1 / (1 - rate). rate == 0 yields all ones.
class RngStream;
Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate,
                    RngStream& rng);

// Scales all gradients by max_norm / g when their global L2 norm g exceeds
// max_norm. Returns g. Throws NumericError naming the first parameter with a
// non-finite gradient.
double clip_gradients(std::span<Parameter* const> params, double max_norm);

}  // namespace lmtag

#endif  // LMTAG_GRAPH_H_
