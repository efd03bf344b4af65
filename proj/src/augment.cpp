#include "dyntta/augment.hpp"

#include <cmath>
#include <sstream>

namespace dyntta::aug {

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::Rotate: return "rotate";
    case Kind::Scale: return "scale";
    case Kind::Saturate: return "saturate";
    case Kind::Contrast: return "contrast";
    case Kind::Sharpness: return "sharpness";
    case Kind::Brightness: return "brightness";
    case Kind::AutoContrast: return "autocontrast";
    case Kind::Hue: return "hue";
    case Kind::Equalize: return "equalize";
    case Kind::Invert: return "invert";
    case Kind::Gamma: return "gamma";
    case Kind::LowPass: return "lowpass";
    case Kind::HighPass: return "highpass";
    case Kind::NeuralEnhance: return "neural-enhance";
  }
  return "?";
}

std::optional<Kind> kind_from_name(const std::string& name) {
  static const std::pair<const char*, Kind> table[] = {
      {"rotate", Kind::Rotate},           {"scale", Kind::Scale},
      {"saturate", Kind::Saturate},       {"contrast", Kind::Contrast},
      {"sharpness", Kind::Sharpness},     {"brightness", Kind::Brightness},
      {"autocontrast", Kind::AutoContrast}, {"hue", Kind::Hue},
      {"equalize", Kind::Equalize},       {"invert", Kind::Invert},
      {"gamma", Kind::Gamma},             {"lowpass", Kind::LowPass},
      {"highpass", Kind::HighPass},       {"neural-enhance", Kind::NeuralEnhance},
  };
  for (const auto& [n, k] : table)
    if (name == n) return k;
  return std::nullopt;
}

std::string scale_name(MagnitudeScale s) {
  switch (s) {
    case MagnitudeScale::Small: return "small";
    case MagnitudeScale::Standard: return "standard";
    case MagnitudeScale::Large: return "large";
  }
  return "?";
}

std::optional<MagnitudeScale> scale_from_name(const std::string& name) {
  if (name == "small") return MagnitudeScale::Small;
  if (name == "standard") return MagnitudeScale::Standard;
  if (name == "large") return MagnitudeScale::Large;
  return std::nullopt;
}

std::string AugmentationSpec::name() const {
  if (kind == Kind::LowPass || kind == Kind::HighPass) {
    std::ostringstream os;
    os << kind_name(kind) << "_";
    os.precision(2);
    os << std::fixed << cutoff;
    return os.str();
  }
  return kind_name(kind);
}

std::vector<AugmentationSpec> catalog(MagnitudeScale scale) {
  const float mul = scale == MagnitudeScale::Small ? 0.5f
                    : scale == MagnitudeScale::Large ? 1.5f
                                                     : 1.0f;
  auto param = [mul](Kind k, Activation a, float range) {
    AugmentationSpec s;
    s.kind = k;
    s.activation = a;
    s.magnitude_range = range * mul;
    return s;
  };
  auto plain = [](Kind k) {
    AugmentationSpec s;
    s.kind = k;
    return s;
  };

  std::vector<AugmentationSpec> out;
  out.reserve(50);
  out.push_back(param(Kind::Rotate, Activation::Tanh, 30.0f));
  out.push_back(param(Kind::Scale, Activation::Tanh, 0.3f));
  out.push_back(param(Kind::Saturate, Activation::Sigmoid, 5.0f));
  out.push_back(param(Kind::Contrast, Activation::Sigmoid, 3.0f));
  out.push_back(param(Kind::Sharpness, Activation::Sigmoid, 10.0f));
  out.push_back(param(Kind::Brightness, Activation::Tanh, 0.6f));
  out.push_back(plain(Kind::AutoContrast));
  out.push_back(param(Kind::Hue, Activation::Tanh, 2.0f));
  out.push_back(plain(Kind::Equalize));
  out.push_back(plain(Kind::Invert));
  out.push_back(param(Kind::Gamma, Activation::Sigmoid, 3.0f));
  for (int i = 1; i <= 19; ++i) {
    AugmentationSpec s = plain(Kind::LowPass);
    s.cutoff = static_cast<float>(0.05 * i);
    out.push_back(s);
  }
  for (int i = 1; i <= 19; ++i) {
    AugmentationSpec s = plain(Kind::HighPass);
    s.cutoff = static_cast<float>(0.05 * i);
    out.push_back(s);
  }
  out.push_back(plain(Kind::NeuralEnhance));
  return out;
}

int parameterized_count(const std::vector<AugmentationSpec>& specs) {
  int p = 0;
  for (const auto& s : specs)
    if (s.parameterized()) ++p;
  return p;
}

Var map_magnitude(Tape& t, Var raw, const AugmentationSpec& spec) {
  require(spec.parameterized(), "map_magnitude: spec has no magnitude");
  Var act = spec.activation == Activation::Tanh ? ops::tanh_map(t, raw) : ops::sigmoid_map(t, raw);
  return ops::affine(t, act, *spec.magnitude_range, 0.0f);
}

std::optional<float> map_magnitude(float raw, const AugmentationSpec& spec) {
  require(std::isfinite(raw), "map_magnitude: raw value must be finite");
  if (!spec.parameterized()) return std::nullopt;
  const float m = *spec.magnitude_range;
  if (spec.activation == Activation::Tanh) return m * std::tanh(raw);
  return m / (1.0f + std::exp(-raw));
}

EnhancerParams EnhancerParams::init(uint64_t seed, int channels, int hidden) {
  Rng rng(Rng::mix(seed, 0xE0A0CE));
  EnhancerParams p;
  p.channels = channels;
  p.hidden = hidden;
  p.c1 = nn::Conv2d::he_init(channels, hidden, 3, rng);
  p.c2 = nn::Conv2d::he_init(hidden, hidden, 3, rng);
  p.c3 = nn::Conv2d::zero_init(hidden, channels, 3);
  return p;
}

int64_t EnhancerParams::param_count() const {
  return c1.w.size() + c1.b.size() + c2.w.size() + c2.b.size() + c3.w.size() + c3.b.size();
}

StagedEnhancer stage(Tape& t, const EnhancerParams& p, bool trainable) {
  return {nn::stage(t, p.c1, trainable), nn::stage(t, p.c2, trainable),
          nn::stage(t, p.c3, trainable)};
}

Var neural_enhance(Tape& t, Var image, const StagedEnhancer& e) {
  require(t.shape(image).size() == 3, "neural_enhance: image must be {C,H,W}");
  require(t.shape(image)[0] == t.shape(e.c1.w)[1],
          "neural_enhance: channel count mismatch");
  Var h = ops::relu(t, nn::apply(t, image, e.c1));
  h = ops::relu(t, nn::apply(t, h, e.c2));
  Var residual = nn::apply(t, h, e.c3);
  return ops::clamp01(t, ops::add(t, image, residual));
}

Tensor neural_enhance(const Tensor& image, const EnhancerParams& p) {
  Tape t;
  Var x = t.constant(image);
  StagedEnhancer e = stage(t, p, false);
  return t.value(neural_enhance(t, x, e));
}

Var apply(Tape& t, const AugmentationSpec& spec, Var image, std::optional<Var> magnitude,
          const StagedEnhancer* enhancer) {
  require(t.shape(image).size() == 3, "apply: image must be {C,H,W}");
  check_finite(t.value(image), "apply input (" + spec.name() + ")");
  if (spec.parameterized())
    require(magnitude.has_value(), "apply: magnitude required for " + spec.name());
  else
    require(!magnitude.has_value(), "apply: magnitude not accepted for " + spec.name());
  if (spec.kind == Kind::NeuralEnhance)
    require(enhancer != nullptr, "apply: enhancer parameters required for neural-enhance");

  switch (spec.kind) {
    case Kind::Rotate: return ops::clamp01(t, ops::rotate(t, image, *magnitude));
    case Kind::Scale: return ops::clamp01(t, ops::zoom(t, image, *magnitude));
    case Kind::Saturate: {
      Var g3 = ops::replicate_channels(t, ops::grayscale(t, image), t.shape(image)[0]);
      return ops::clamp01(t, ops::lerp(t, g3, image, *magnitude));
    }
    case Kind::Contrast: {
      Var mean = ops::mean_all(t, ops::grayscale(t, image));
      Var base = ops::broadcast_to(t, mean, t.shape(image));
      return ops::clamp01(t, ops::lerp(t, base, image, *magnitude));
    }
    case Kind::Sharpness: {
      Var blur = ops::gaussian3(t, image);
      return ops::clamp01(t, ops::lerp(t, blur, image, *magnitude));
    }
    case Kind::Brightness: return ops::clamp01(t, ops::add_scalar(t, image, *magnitude));
    case Kind::AutoContrast: return ops::clamp01(t, ops::autocontrast(t, image));
    case Kind::Hue: return ops::clamp01(t, ops::hue_rotate(t, image, *magnitude));
    case Kind::Equalize: return ops::clamp01(t, ops::equalize(t, image));
    case Kind::Invert: return ops::clamp01(t, ops::affine(t, image, -1.0f, 1.0f));
    case Kind::Gamma: return ops::clamp01(t, ops::pow_gamma(t, image, *magnitude));
    case Kind::LowPass: return ops::clamp01(t, ops::fft_filter(t, image, spec.cutoff, true));
    case Kind::HighPass: return ops::clamp01(t, ops::fft_filter(t, image, spec.cutoff, false));
    case Kind::NeuralEnhance: return neural_enhance(t, image, *enhancer);
  }
  throw ContractError("apply: unknown augmentation kind");
}

Tensor apply(const AugmentationSpec& spec, const Tensor& image, std::optional<float> magnitude,
             const EnhancerParams* enhancer) {
  Tape t;
  Var x = t.constant(image);
  std::optional<Var> m;
  if (magnitude) m = t.scalar_constant(*magnitude);
  StagedEnhancer staged;
  const StagedEnhancer* staged_ptr = nullptr;
  if (spec.kind == Kind::NeuralEnhance) {
    require(enhancer != nullptr, "apply: enhancer parameters required for neural-enhance");
    staged = stage(t, *enhancer, false);
    staged_ptr = &staged;
  }
  return t.value(apply(t, spec, x, m, staged_ptr));
}

}  // namespace dyntta::aug
