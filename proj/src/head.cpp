#include "dyntta/head.hpp"

#include <cmath>

namespace dyntta::head {

std::string mode_name(Mode m) { return m == Mode::Full ? "full" : "blend-only"; }

std::optional<Mode> mode_from_name(const std::string& name) {
  if (name == "full") return Mode::Full;
  if (name == "blend-only" || name == "blendonly") return Mode::BlendOnly;
  return std::nullopt;
}

DynttaParams DynttaParams::init(uint64_t seed, const std::vector<aug::AugmentationSpec>& specs,
                                int in_channels, int width) {
  Rng rng(Rng::mix(seed, 0xD1A77A));
  DynttaParams p;
  p.width = width;
  p.p_count = aug::parameterized_count(specs);
  p.k_count = static_cast<int>(specs.size());
  p.c1 = nn::Conv2d::he_init(in_channels, width, 3, rng);
  p.c2 = nn::Conv2d::he_init(width, width, 3, rng);
  p.c3 = nn::Conv2d::he_init(width, width, 3, rng);
  p.head = nn::Linear::zero_init(width, p.p_count + p.k_count);
  // Bias the enhancer's weight slot so its (initially idle) residual path
  // receives gradient signal from the start; blend gradients scale with the
  // blend weight, so a uniform 1/K start starves the one entry that must
  // learn its behavior from scratch.
  for (size_t i = 0; i < specs.size(); ++i)
    if (specs[i].kind == aug::Kind::NeuralEnhance)
      p.head.b.data[p.p_count + static_cast<int>(i)] = 1.5f;
  p.enhancer = aug::EnhancerParams::init(seed, in_channels);
  return p;
}

std::vector<Var> StagedDyntta::vars() const {
  return {c1.w,          c1.b,          c2.w,          c2.b,          c3.w,
          c3.b,          head.w,        head.b,        enhancer.c1.w, enhancer.c1.b,
          enhancer.c2.w, enhancer.c2.b, enhancer.c3.w, enhancer.c3.b};
}

StagedDyntta stage(Tape& t, const DynttaParams& p, bool trainable) {
  StagedDyntta s;
  s.c1 = nn::stage(t, p.c1, trainable);
  s.c2 = nn::stage(t, p.c2, trainable);
  s.c3 = nn::stage(t, p.c3, trainable);
  s.head = nn::stage(t, p.head, trainable);
  s.enhancer = aug::stage(t, p.enhancer, trainable);
  return s;
}

BackboneOut backbone_forward(Tape& t, Var image, const StagedDyntta& p) {
  require(t.shape(image).size() == 3, "backbone_forward: image must be {C,H,W}");
  require(t.shape(image)[0] == t.shape(p.c1.w)[1], "backbone_forward: channel mismatch");
  require(t.shape(image)[1] % 8 == 0 && t.shape(image)[2] % 8 == 0,
          "backbone_forward: H and W must be divisible by 8");
  Var h = ops::maxpool2(t, ops::relu(t, nn::apply(t, image, p.c1)));
  h = ops::maxpool2(t, ops::relu(t, nn::apply(t, h, p.c2)));
  h = ops::maxpool2(t, ops::relu(t, nn::apply(t, h, p.c3)));
  h = ops::global_avg_pool(t, h);
  Var out = nn::apply(t, h, p.head);
  return {out, out};  // split into [P | K] by the caller
}

Var blend(Tape& t, std::span<const Var> images, Var weights) {
  const Array& w = t.value(weights).data;
  require(w.size() == static_cast<int64_t>(images.size()),
          "blend: weight count must match image count");
  require((w >= 0.0f).all(), "blend: weights must be nonnegative");
  const double sum = w.cast<double>().sum();
  require(std::abs(sum - 1.0) <= 1e-6, "blend: weights must sum to 1 within 1e-6");
  return ops::clamp01(t, ops::blend_images(t, images, weights));
}

Tensor blend(const std::vector<Tensor>& images, const Array& weights) {
  Tape t;
  std::vector<Var> vars;
  vars.reserve(images.size());
  for (const Tensor& im : images) vars.push_back(t.constant(im));
  Tensor w({static_cast<int>(weights.size())}, weights);
  return t.value(blend(t, vars, t.constant(std::move(w))));
}

int PrunePlan::executed_count() const {
  int n = 0;
  for (uint8_t m : exec_mask) n += m ? 1 : 0;
  return n;
}

namespace {

Array redistribute_row(const Array& row, const std::vector<uint8_t>& mask) {
  const int k = static_cast<int>(row.size());
  int first_exec = -1;
  for (int i = 0; i < k; ++i)
    if (mask[i]) {
      first_exec = i;
      break;
    }
  Array out = Array::Zero(k);
  for (int i = 0; i < k; ++i) {
    if (mask[i]) {
      out[i] += row[i];
      continue;
    }
    // next executed entry in catalog order, wrapping to the first executed
    int target = -1;
    for (int j = i + 1; j < k; ++j)
      if (mask[j]) {
        target = j;
        break;
      }
    if (target < 0) target = first_exec;
    out[target] += row[i];
  }
  return out;
}

}  // namespace

PrunePlan prune_plan(const std::vector<Array>& batch_weights, float threshold) {
  require(!batch_weights.empty(), "prune_plan: empty batch");
  require(threshold >= 0.0f, "prune_plan: threshold must be nonnegative");
  const int k = static_cast<int>(batch_weights[0].size());
  for (const Array& row : batch_weights) {
    require(row.size() == k, "prune_plan: ragged weight rows");
    require(std::abs(row.cast<double>().sum() - 1.0) <= 1e-6,
            "prune_plan: each row must sum to 1 within 1e-6");
  }

  PrunePlan plan;
  if (threshold == 0.0f) {
    // Bitwise passthrough.
    plan.exec_mask.assign(k, 1);
    plan.redistributed = batch_weights;
    return plan;
  }

  Array col_max = Array::Zero(k);
  for (const Array& row : batch_weights) col_max = col_max.max(row);
  int argmax = 0;
  for (int i = 1; i < k; ++i)
    if (col_max[i] > col_max[argmax]) argmax = i;

  plan.exec_mask.assign(k, 0);
  bool any = false;
  for (int i = 0; i < k; ++i) {
    plan.exec_mask[i] = col_max[i] >= threshold ? 1 : 0;
    any = any || plan.exec_mask[i];
  }
  if (!any) throw DegeneratePlanError(argmax);

  plan.redistributed.reserve(batch_weights.size());
  for (const Array& row : batch_weights)
    plan.redistributed.push_back(redistribute_row(row, plan.exec_mask));
  return plan;
}

PrunePlan prune_plan_forced(const std::vector<Array>& batch_weights, int forced_index) {
  require(!batch_weights.empty(), "prune_plan_forced: empty batch");
  const int k = static_cast<int>(batch_weights[0].size());
  require(forced_index >= 0 && forced_index < k, "prune_plan_forced: index out of range");
  PrunePlan plan;
  plan.exec_mask.assign(k, 0);
  plan.exec_mask[forced_index] = 1;
  plan.redistributed.reserve(batch_weights.size());
  for (const Array& row : batch_weights)
    plan.redistributed.push_back(redistribute_row(row, plan.exec_mask));
  return plan;
}

namespace {

// Magnitude vars per catalog entry. BlendOnly pins raw magnitudes at a
// constant 0 (tanh kinds neutral, sigmoid kinds mid-range), so only the
// blend weights stay learnable.
std::vector<std::optional<Var>> magnitude_vars(Tape& t, Var raw_magnitudes,
                                               const std::vector<aug::AugmentationSpec>& specs,
                                               Mode mode,
                                               std::vector<std::optional<float>>* values) {
  std::vector<std::optional<Var>> out(specs.size());
  if (values) values->assign(specs.size(), std::nullopt);
  int slot = 0;
  for (size_t i = 0; i < specs.size(); ++i) {
    if (!specs[i].parameterized()) continue;
    Var raw = mode == Mode::Full ? ops::slice(t, raw_magnitudes, slot, 1)
                                 : t.scalar_constant(0.0f);
    ++slot;
    Var m = aug::map_magnitude(t, raw, specs[i]);
    out[i] = m;
    if (values) (*values)[i] = t.value(m).data[0];
  }
  return out;
}

Var forward_impl(Tape& t, Var image, const StagedDyntta& p,
                 const std::vector<aug::AugmentationSpec>& specs, Mode mode,
                 const std::vector<uint8_t>* exec_mask, const Array* planned_weights,
                 ForwardInfo* info) {
  const int k = static_cast<int>(specs.size());
  const int pcount = aug::parameterized_count(specs);
  BackboneOut bb = backbone_forward(t, image, p);
  require(t.size(bb.raw_weights) == pcount + k,
          "dyntta_forward: head width must equal P+K for this catalog");
  Var raw_w = ops::slice(t, bb.raw_weights, pcount, k);
  Var weights = ops::softmax(t, raw_w);

  std::vector<std::optional<float>> mag_values;
  std::vector<std::optional<Var>> mags;
  if (pcount > 0) {
    Var raw_m = ops::slice(t, bb.raw_magnitudes, 0, pcount);
    mags = magnitude_vars(t, raw_m, specs, mode, &mag_values);
  } else {
    mags.assign(specs.size(), std::nullopt);
    mag_values.assign(specs.size(), std::nullopt);
  }

  std::vector<uint8_t> mask(k, 1);
  if (exec_mask) mask = *exec_mask;
  std::vector<Var> executed_images;
  executed_images.reserve(k);
  for (int i = 0; i < k; ++i) {
    if (!mask[i]) continue;
    const aug::AugmentationSpec& spec = specs[i];
    const aug::StagedEnhancer* enh =
        spec.kind == aug::Kind::NeuralEnhance ? &p.enhancer : nullptr;
    executed_images.push_back(aug::apply(t, spec, image, mags[i], enh));
  }

  Var out;
  if (!exec_mask) {
    // Unpruned reference path: all K entries, softmax weights as a variable.
    out = blend(t, executed_images, weights);
  } else {
    require(planned_weights != nullptr, "dyntta_forward: planned weights required with a mask");
    Array wexec(static_cast<int64_t>(executed_images.size()));
    int j = 0;
    for (int i = 0; i < k; ++i)
      if (mask[i]) wexec[j++] = (*planned_weights)[i];
    Tensor wt({static_cast<int>(executed_images.size())}, std::move(wexec));
    out = blend(t, executed_images, t.constant(std::move(wt)));
  }

  if (info) {
    info->blend_weights = t.value(weights).data;
    info->magnitudes = std::move(mag_values);
    info->exec_mask = std::move(mask);
    info->executed = static_cast<int>(executed_images.size());
  }
  return out;
}

// Backbone-only blend weights, evaluated without gradients.
Array backbone_weights(const Tensor& image, Tape& t, const StagedDyntta& p,
                       const std::vector<aug::AugmentationSpec>& specs) {
  const int k = static_cast<int>(specs.size());
  const int pcount = aug::parameterized_count(specs);
  Tape scratch;
  Var im = scratch.constant(image);
  StagedDyntta sp;
  sp.c1 = {scratch.constant(t.value(p.c1.w)), scratch.constant(t.value(p.c1.b))};
  sp.c2 = {scratch.constant(t.value(p.c2.w)), scratch.constant(t.value(p.c2.b))};
  sp.c3 = {scratch.constant(t.value(p.c3.w)), scratch.constant(t.value(p.c3.b))};
  sp.head = {scratch.constant(t.value(p.head.w)), scratch.constant(t.value(p.head.b))};
  sp.enhancer = {
      {scratch.constant(t.value(p.enhancer.c1.w)), scratch.constant(t.value(p.enhancer.c1.b))},
      {scratch.constant(t.value(p.enhancer.c2.w)), scratch.constant(t.value(p.enhancer.c2.b))},
      {scratch.constant(t.value(p.enhancer.c3.w)), scratch.constant(t.value(p.enhancer.c3.b))}};
  BackboneOut bb = backbone_forward(scratch, im, sp);
  Var raw_w = ops::slice(scratch, bb.raw_weights, pcount, k);
  return scratch.value(ops::softmax(scratch, raw_w)).data;
}

}  // namespace

Var dyntta_forward(Tape& t, Var image, const StagedDyntta& p,
                   const std::vector<aug::AugmentationSpec>& specs, float threshold, Mode mode,
                   ForwardInfo* info) {
  require(threshold >= 0.0f, "dyntta_forward: threshold must be nonnegative");
  if (threshold == 0.0f) return forward_impl(t, image, p, specs, mode, nullptr, nullptr, info);

  // Batch of one: compute weights, prune, execute the reduced plan.
  Array w = backbone_weights(t.value(image), t, p, specs);
  PrunePlan plan;
  try {
    plan = prune_plan({w}, threshold);
  } catch (const DegeneratePlanError& e) {
    plan = prune_plan_forced({w}, e.argmax);
  }
  return forward_impl(t, image, p, specs, mode, &plan.exec_mask, &plan.redistributed[0], info);
}

Var dyntta_forward_planned(Tape& t, Var image, const StagedDyntta& p,
                           const std::vector<aug::AugmentationSpec>& specs, Mode mode,
                           const std::vector<uint8_t>& exec_mask, const Array& planned_weights,
                           ForwardInfo* info) {
  return forward_impl(t, image, p, specs, mode, &exec_mask, &planned_weights, info);
}

Tensor dyntta_enhance(const Tensor& image, const DynttaParams& p,
                      const std::vector<aug::AugmentationSpec>& specs, float threshold, Mode mode,
                      ForwardInfo* info) {
  Tape t;
  Var im = t.constant(image);
  StagedDyntta staged = stage(t, p, false);
  return t.value(dyntta_forward(t, im, staged, specs, threshold, mode, info));
}

Array blend_weights(const Tensor& image, const DynttaParams& p,
                    const std::vector<aug::AugmentationSpec>& specs) {
  Tape t;
  Var im = t.constant(image);
  StagedDyntta staged = stage(t, p, false);
  BackboneOut bb = backbone_forward(t, im, staged);
  Var raw_w = ops::slice(t, bb.raw_weights, aug::parameterized_count(specs),
                         static_cast<int>(specs.size()));
  return t.value(ops::softmax(t, raw_w)).data;
}

}  // namespace dyntta::head
