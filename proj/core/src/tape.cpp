#include "utep/ndgrad/tape.hpp"

#include <stdexcept>

namespace utep::ndgrad {

const Array2& Var::value() const { return tape_->value(id_); }
const Array2& Var::grad() const { return tape_->grad(id_); }

double Var::item() const {
  const Array2& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("item(): node is " + v.shape_string() + ", expected (1x1)");
  }
  return v[0];
}

Var Tape::push(Node node) {
  if (!node.value.all_finite()) {
    throw NonFiniteError(node.op + ": non-finite value " + node.value.shape_string());
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Array2 value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::leaf(Array2 value) {
  Node n;
  n.op = "leaf";
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  for (const auto& [ptr, id] : bound_) {
    if (ptr == &p) return Var(this, id);
  }
  Node n;
  n.op = "parameter:" + p.name;
  n.value = p.value;
  n.requires_grad = true;
  Var v = push(std::move(n));
  bound_.emplace_back(&p, v.id());
  return v;
}

Var Tape::record(std::string_view op, Array2 value, std::vector<std::size_t> parents,
                 BackwardFn backward) {
  Node n;
  n.op = std::string(op);
  n.value = std::move(value);
  for (std::size_t p : parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Array2& Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) {
    // Never reached by backward: the gradient is identically zero.
    const_cast<Node&>(n).grad = Array2(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Array2& delta) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.empty()) {
    require_same_shape(n.value, delta, "accumulate");
    n.grad = delta;
  } else {
    n.grad += delta;
  }
}

void Tape::backward(Var out) {
  if (out.id() >= nodes_.size() || &out.tape() != this) {
    throw std::invalid_argument("backward: node does not belong to this tape");
  }
  const Array2& v = nodes_[out.id()].value;
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("backward: output must be scalar, got " + v.shape_string());
  }
  if (backward_done_) throw std::logic_error("backward: tape already consumed");
  backward_done_ = true;

  accumulate(out.id(), Array2::scalar(1.0));
  for (std::size_t i = out.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, n.grad);
  }
  for (auto& [param, id] : bound_) {
    const Node& n = nodes_[id];
    if (!n.grad.empty()) param->grad += n.grad;
  }
}

}  // namespace utep::ndgrad
