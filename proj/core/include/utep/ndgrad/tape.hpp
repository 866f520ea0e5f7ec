#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "utep/ndgrad/array2.hpp"

namespace utep::ndgrad {

/// A trainable tensor owned outside the tape. `grad` accumulates across
/// backward passes until zero_grad().
struct Parameter {
  std::string name;
  Array2 value;
  Array2 grad;

  Parameter() = default;
  Parameter(std::string n, Array2 v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = Array2(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Array2& value() const;
  const Array2& grad() const;
  /// Value of a 1x1 node.
  double item() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recording of a computation. Nodes are appended in evaluation
/// order, so reverse index order is a valid topological order for backward().
class Tape {
 public:
  /// Receives the node's upstream gradient and pushes contributions to parents
  /// through Tape::accumulate.
  using BackwardFn = std::function<void(Tape&, const Array2& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array2 value);
  /// Gradient-tracking leaf not bound to a Parameter (gradient checks, tests).
  Var leaf(Array2 value);
  /// Binds a Parameter; repeated calls with the same parameter return the same node.
  Var parameter(Parameter& p);
  /// Read-only binding: the parameter value enters as a constant.
  Var parameter(const Parameter& p) { return constant(p.value); }

  Var record(std::string_view op, Array2 value, std::vector<std::size_t> parents,
             BackwardFn backward);

  /// Seeds d(out)/d(out) = 1 and propagates. `out` must be 1x1. Gradients of
  /// bound parameters are added into Parameter::grad.
  void backward(Var out);

  void accumulate(std::size_t id, const Array2& delta);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  const Array2& value(std::size_t id) const { return nodes_[id].value; }
  const Array2& grad(std::size_t id) const;
  const std::string& op_name(std::size_t id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::string op;
    Array2 value;
    Array2 grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::vector<std::pair<Parameter*, std::size_t>> bound_;
  bool backward_done_ = false;
};

}  // namespace utep::ndgrad
