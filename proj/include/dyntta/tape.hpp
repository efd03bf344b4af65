#pragma once

#include "dyntta/tensor.hpp"

#include <functional>
#include <vector>

namespace dyntta {

class Tape;

// Handle to a node on a tape.
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Define-by-run recording tape. Nodes are appended in execution order; the
// backward pass walks them in exact reverse order and each node's VJP adds
// into (never overwrites) its inputs' gradients. One tape is single-writer;
// concurrent forward passes must use independent tapes.
class Tape {
 public:
  using Vjp = std::function<void(Tape&, Var out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf node holding a copy of `t`; participates in gradients iff
  // t.requires_grad.
  Var leaf(const Tensor& t);
  // Convenience: non-differentiable constant.
  Var constant(Tensor t);
  Var scalar_constant(float v) { return constant(Tensor::scalar(v)); }

  // Appends an interior node. `vjp` may be empty for non-differentiable ops.
  Var emit(const char* op, std::vector<Var> inputs, Tensor value, Vjp vjp);

  const Tensor& value(Var v) const { return node(v).value; }
  const Shape& shape(Var v) const { return node(v).value.shape; }
  int64_t size(Var v) const { return node(v).value.size(); }
  const char* op_name(Var v) const { return node(v).op; }
  bool needs_grad(Var v) const { return node(v).requires_grad; }

  // Gradient buffer of a node; allocated (zeroed) by backward(). Accumulate
  // with += only.
  Array& grad(Var v);
  const Array& grad(Var v) const;
  bool has_grad(Var v) const { return node(v).grad.size() > 0; }

  // Reverse pass seeded with d(root)/d(root) = 1. `root` must be scalar.
  void backward(Var root);
  // Reverse pass seeded with an explicit output gradient (equivalent to
  // backward of dot(root, seed_grad) without rounding the dot to float).
  void backward(Var root, const Array& seed_grad);

  size_t node_count() const { return nodes_.size(); }

  // Throws NumericError naming the first op with non-finite values or grads.
  void validate_finite() const;

 private:
  struct Node {
    const char* op;
    std::vector<Var> inputs;
    Tensor value;
    Array grad;  // empty until backward
    bool requires_grad = false;
    Vjp vjp;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace dyntta
