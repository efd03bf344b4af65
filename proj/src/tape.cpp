#include "dyntta/tape.hpp"

#include <string>

namespace dyntta {

Tape::Node& Tape::node(Var v) {
  require(v.id >= 0 && v.id < static_cast<int32_t>(nodes_.size()), "invalid tape variable");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  require(v.id >= 0 && v.id < static_cast<int32_t>(nodes_.size()), "invalid tape variable");
  return nodes_[v.id];
}

Var Tape::leaf(const Tensor& t) {
  Node n;
  n.op = "leaf";
  n.value = t;
  n.value.grad.reset();
  n.requires_grad = t.requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor t) {
  t.requires_grad = false;
  return leaf(t);
}

Var Tape::emit(const char* op, std::vector<Var> inputs, Tensor value, Vjp vjp) {
  Node n;
  n.op = op;
  n.requires_grad = false;
  for (Var in : inputs) {
    if (node(in).requires_grad) n.requires_grad = true;
  }
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  if (n.requires_grad) n.vjp = std::move(vjp);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Array& Tape::grad(Var v) {
  Node& n = node(v);
  if (n.grad.size() == 0) n.grad = Array::Zero(n.value.size());
  return n.grad;
}

const Array& Tape::grad(Var v) const {
  const Node& n = node(v);
  require(n.grad.size() > 0, std::string("gradient not computed for op ") + n.op);
  return n.grad;
}

void Tape::backward(Var root) {
  require(size(root) == 1, "backward root must be scalar");
  backward(root, Array::Ones(1));
}

void Tape::backward(Var root, const Array& seed_grad) {
  require(seed_grad.size() == size(root), "backward seed gradient has wrong length");
  for (int32_t i = 0; i <= root.id; ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad) n.grad = Array::Zero(n.value.size());
  }
  grad(root) = seed_grad;
  for (int32_t i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.vjp) n.vjp(*this, Var{i});
  }
}

void Tape::validate_finite() const {
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!n.value.data.allFinite())
      throw NumericError(std::string("non-finite value in op ") + n.op);
    if (n.grad.size() > 0 && !n.grad.allFinite())
      throw NumericError(std::string("non-finite gradient in op ") + n.op);
  }
}

}  // namespace dyntta
