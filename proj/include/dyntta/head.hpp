#pragma once

#include "dyntta/augment.hpp"
#include "dyntta/nn.hpp"

#include <span>

namespace dyntta::head {

enum class Mode { Full, BlendOnly };

std::string mode_name(Mode m);
std::optional<Mode> mode_from_name(const std::string& name);

// Backbone CNN (3 conv/pool stages, global average pool, linear head of
// width P+K) plus the jointly trained enhancer.
struct DynttaParams {
  nn::Conv2d c1, c2, c3;
  nn::Linear head;
  aug::EnhancerParams enhancer;
  int p_count = 0, k_count = 0;
  int width = 16;

  static DynttaParams init(uint64_t seed, const std::vector<aug::AugmentationSpec>& specs,
                           int in_channels = 3, int width = 32);

  template <typename F>
  void visit(F&& f) {
    f("backbone.c1.w", c1.w);
    f("backbone.c1.b", c1.b);
    f("backbone.c2.w", c2.w);
    f("backbone.c2.b", c2.b);
    f("backbone.c3.w", c3.w);
    f("backbone.c3.b", c3.b);
    f("backbone.head.w", head.w);
    f("backbone.head.b", head.b);
    enhancer.visit(f);
  }
};

struct StagedDyntta {
  nn::StagedConv c1, c2, c3;
  nn::StagedLinear head;
  aug::StagedEnhancer enhancer;
  // Leaf vars in DynttaParams::visit order, for gradient extraction.
  std::vector<Var> vars() const;
};

StagedDyntta stage(Tape& t, const DynttaParams& p, bool trainable);

// Raw magnitude and blend-weight heads; magnitudes come first, both in
// catalog order (magnitudes restricted to parameterized entries).
struct BackboneOut {
  Var raw_magnitudes;  // {P}
  Var raw_weights;     // {K}
};
BackboneOut backbone_forward(Tape& t, Var image, const StagedDyntta& p);

// Convex combination of augmented images followed by clamp. Weights must be
// nonnegative and sum to 1 within 1e-6.
Var blend(Tape& t, std::span<const Var> images, Var weights);
Tensor blend(const std::vector<Tensor>& images, const Array& weights);

// Thrown when a pruning threshold skips every augmentation; callers should
// force-execute the argmax entry (see prune_plan_forced).
struct DegeneratePlanError : ContractError {
  int argmax = 0;
  explicit DegeneratePlanError(int argmax_index)
      : ContractError("pruning threshold skips every augmentation; "
                      "force-execute the argmax entry"),
        argmax(argmax_index) {}
};

struct PrunePlan {
  std::vector<uint8_t> exec_mask;       // K
  std::vector<Array> redistributed;     // N rows of K
  int executed_count() const;
};

// Appendix-style batch pruning: an entry executes iff any row reaches the
// threshold; skipped weight moves to the next executed entry in catalog
// order, wrapping to the first executed entry.
PrunePlan prune_plan(const std::vector<Array>& batch_weights, float threshold);
// Fallback plan with a single forced entry.
PrunePlan prune_plan_forced(const std::vector<Array>& batch_weights, int forced_index);

// Per-sample result of a DynTTA forward pass.
struct ForwardInfo {
  Array blend_weights;                        // K, post-softmax (pre-redistribution)
  std::vector<std::optional<float>> magnitudes;  // per catalog entry
  std::vector<uint8_t> exec_mask;             // K
  int executed = 0;
};

// Full differentiable pipeline for one image: backbone -> magnitude mapping
// (BlendOnly pins raw magnitudes at 0) -> pruning -> per-entry augmentation
// -> blending -> clamp. threshold 0 keeps the exact unpruned path.
Var dyntta_forward(Tape& t, Var image, const StagedDyntta& p,
                   const std::vector<aug::AugmentationSpec>& specs, float threshold, Mode mode,
                   ForwardInfo* info = nullptr);

// Variant with an externally supplied (batch-level) plan row.
Var dyntta_forward_planned(Tape& t, Var image, const StagedDyntta& p,
                           const std::vector<aug::AugmentationSpec>& specs, Mode mode,
                           const std::vector<uint8_t>& exec_mask, const Array& planned_weights,
                           ForwardInfo* info = nullptr);

// Convenience: plain-tensor forward on a scratch tape (inference).
Tensor dyntta_enhance(const Tensor& image, const DynttaParams& p,
                      const std::vector<aug::AugmentationSpec>& specs, float threshold, Mode mode,
                      ForwardInfo* info = nullptr);

// Softmax blend weights for one image (backbone only, no gradients).
Array blend_weights(const Tensor& image, const DynttaParams& p,
                    const std::vector<aug::AugmentationSpec>& specs);

}  // namespace dyntta::head
