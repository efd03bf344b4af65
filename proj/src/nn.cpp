#include "dyntta/nn.hpp"

#include <cmath>

namespace dyntta::nn {

Conv2d Conv2d::he_init(int in_ch, int out_ch, int k, Rng& rng) {
  Conv2d c;
  c.w = Tensor({out_ch, in_ch, k, k});
  const float std = std::sqrt(2.0f / static_cast<float>(in_ch * k * k));
  for (int64_t i = 0; i < c.w.size(); ++i) c.w.data[i] = rng.normal(0.0f, std);
  c.b = Tensor({out_ch});
  c.w.requires_grad = c.b.requires_grad = true;
  return c;
}

Conv2d Conv2d::zero_init(int in_ch, int out_ch, int k) {
  Conv2d c;
  c.w = Tensor({out_ch, in_ch, k, k});
  c.b = Tensor({out_ch});
  c.w.requires_grad = c.b.requires_grad = true;
  return c;
}

Linear Linear::he_init(int in, int out, Rng& rng) {
  Linear l;
  l.w = Tensor({out, in});
  const float std = std::sqrt(2.0f / static_cast<float>(in));
  for (int64_t i = 0; i < l.w.size(); ++i) l.w.data[i] = rng.normal(0.0f, std);
  l.b = Tensor({out});
  l.w.requires_grad = l.b.requires_grad = true;
  return l;
}

Linear Linear::zero_init(int in, int out) {
  Linear l;
  l.w = Tensor({out, in});
  l.b = Tensor({out});
  l.w.requires_grad = l.b.requires_grad = true;
  return l;
}

namespace {
Var stage_tensor(Tape& t, const Tensor& p, bool trainable) {
  Tensor copy = p;
  copy.requires_grad = trainable;
  return t.leaf(copy);
}
}  // namespace

StagedConv stage(Tape& t, const Conv2d& c, bool trainable) {
  return {stage_tensor(t, c.w, trainable), stage_tensor(t, c.b, trainable)};
}

StagedLinear stage(Tape& t, const Linear& l, bool trainable) {
  return {stage_tensor(t, l.w, trainable), stage_tensor(t, l.b, trainable)};
}

Adam::Adam(std::vector<Tensor*> params, float lr, float beta1, float beta2, float eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Tensor* p : params_) {
    m_.push_back(Array::Zero(p->size()));
    v_.push_back(Array::Zero(p->size()));
  }
}

void Adam::step(const std::vector<Array>& grads) {
  require(grads.size() == params_.size(), "Adam: gradient list size mismatch");
  ++step_;
  const float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(step_));
  const float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(step_));
  for (size_t i = 0; i < params_.size(); ++i) {
    const Array& g = grads[i];
    require(g.size() == params_[i]->size(), "Adam: gradient shape mismatch");
    m_[i] = beta1_ * m_[i] + (1.0f - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0f - beta2_) * g.square();
    Array m_hat = m_[i] / bc1;
    Array v_hat = v_[i] / bc2;
    params_[i]->data -= lr_ * m_hat / (v_hat.sqrt() + eps_);
  }
}

}  // namespace dyntta::nn
