#pragma once

#include "dyntta/ops.hpp"
#include "dyntta/rng.hpp"
#include "dyntta/tape.hpp"

#include <string>
#include <vector>

namespace dyntta::nn {

struct Conv2d {
  Tensor w;  // {OC,C,K,K}
  Tensor b;  // {OC}
  static Conv2d he_init(int in_ch, int out_ch, int k, Rng& rng);
  static Conv2d zero_init(int in_ch, int out_ch, int k);
};

struct Linear {
  Tensor w;  // {out,in}
  Tensor b;  // {out}
  static Linear he_init(int in, int out, Rng& rng);
  static Linear zero_init(int in, int out);
};

struct StagedConv {
  Var w, b;
};
struct StagedLinear {
  Var w, b;
};

StagedConv stage(Tape& t, const Conv2d& c, bool trainable);
StagedLinear stage(Tape& t, const Linear& l, bool trainable);

inline Var apply(Tape& t, Var x, const StagedConv& c) { return ops::conv2d(t, x, c.w, c.b); }
inline Var apply(Tape& t, Var x, const StagedLinear& l) { return ops::linear(t, x, l.w, l.b); }

// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8 by default).
// Operates on externally supplied gradient arrays aligned with the parameter
// list; parameters are updated in list order.
class Adam {
 public:
  explicit Adam(std::vector<Tensor*> params, float lr = 1e-3f, float beta1 = 0.9f,
                float beta2 = 0.999f, float eps = 1e-8f);

  void set_lr(float lr) { lr_ = lr; }
  float lr() const { return lr_; }
  int64_t step_count() const { return step_; }

  void step(const std::vector<Array>& grads);

 private:
  std::vector<Tensor*> params_;
  std::vector<Array> m_, v_;
  float lr_, beta1_, beta2_, eps_;
  int64_t step_ = 0;
};

}  // namespace dyntta::nn
