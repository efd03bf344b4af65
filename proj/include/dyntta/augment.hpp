#pragma once

#include "dyntta/nn.hpp"
#include "dyntta/tape.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dyntta::aug {

enum class Kind {
  Rotate,
  Scale,
  Saturate,
  Contrast,
  Sharpness,
  Brightness,
  AutoContrast,
  Hue,
  Equalize,
  Invert,
  Gamma,
  LowPass,
  HighPass,
  NeuralEnhance,
};

enum class Activation { Tanh, Sigmoid, None };

enum class MagnitudeScale { Small, Standard, Large };

std::string kind_name(Kind k);
std::optional<Kind> kind_from_name(const std::string& name);
std::string scale_name(MagnitudeScale s);
std::optional<MagnitudeScale> scale_from_name(const std::string& name);

// One catalog entry: operation kind, magnitude activation, magnitude range,
// and the frequency cutoff for filter kinds.
struct AugmentationSpec {
  Kind kind;
  Activation activation = Activation::None;
  std::optional<float> magnitude_range;
  float cutoff = 0.0f;  // LowPass/HighPass only

  bool parameterized() const { return activation != Activation::None; }
  std::string name() const;  // e.g. "rotate", "lowpass_0.35"
};

// The full ordered augmentation catalog: 11 pixel/geometry operations,
// 19 low-pass filters, 19 high-pass filters (ascending cutoffs 0.05..0.95),
// and the neural enhancer; 50 entries. Magnitude ranges scale by 0.5 / 1.5
// for Small / Large.
std::vector<AugmentationSpec> catalog(MagnitudeScale scale = MagnitudeScale::Standard);

// Number of parameterized entries in a catalog.
int parameterized_count(const std::vector<AugmentationSpec>& specs);

// Magnitude mapping: Tanh -> M*tanh(raw) in (-M,M); Sigmoid -> M*sigmoid(raw)
// in (0,M); None -> absent.
Var map_magnitude(Tape& t, Var raw, const AugmentationSpec& spec);
std::optional<float> map_magnitude(float raw, const AugmentationSpec& spec);

// Small residual image-to-image network treated as one catalog entry and
// trained jointly with the blending head. The final conv starts at zero so
// the untrained enhancer is an identity.
struct EnhancerParams {
  nn::Conv2d c1, c2, c3;
  int channels = 3, hidden = 16;

  static EnhancerParams init(uint64_t seed, int channels = 3, int hidden = 32);
  int64_t param_count() const;

  template <typename F>
  void visit(F&& f) {
    f("enhancer.c1.w", c1.w);
    f("enhancer.c1.b", c1.b);
    f("enhancer.c2.w", c2.w);
    f("enhancer.c2.b", c2.b);
    f("enhancer.c3.w", c3.w);
    f("enhancer.c3.b", c3.b);
  }
};

struct StagedEnhancer {
  nn::StagedConv c1, c2, c3;
};

StagedEnhancer stage(Tape& t, const EnhancerParams& p, bool trainable);

// out = clamp01(image + f(image))
Var neural_enhance(Tape& t, Var image, const StagedEnhancer& e);
Tensor neural_enhance(const Tensor& image, const EnhancerParams& p);

// Applies one catalog operation. `magnitude` must be present exactly for
// parameterized kinds; `enhancer` exactly for NeuralEnhance. Output is
// clamped to [0,1].
Var apply(Tape& t, const AugmentationSpec& spec, Var image, std::optional<Var> magnitude,
          const StagedEnhancer* enhancer = nullptr);
Tensor apply(const AugmentationSpec& spec, const Tensor& image, std::optional<float> magnitude,
             const EnhancerParams* enhancer = nullptr);

}  // namespace dyntta::aug
