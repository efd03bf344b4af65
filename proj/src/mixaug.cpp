#include "dyntta/corrupt.hpp"
#include "dyntta/fft.hpp"
#include "dyntta/imgproc.hpp"

#include <cmath>

namespace dyntta::corrupt {

namespace {

Tensor sharpness(const Tensor& x, float factor) {
  Tensor blur = img::gaussian3(x);
  Tensor out(x.shape);
  out.data = blur.data + factor * (x.data - blur.data);
  return img::clamp01(std::move(out));
}

Tensor high_pass_recentered(const Tensor& x, float cutoff) {
  Tensor f = fft::ideal_filter(x, cutoff, false);
  f.data += 0.5f;  // re-center the zero-mean residue
  return img::clamp01(std::move(f));
}

Tensor apply_mix_op(const std::string& name, const Tensor& x, Rng& rng) {
  if (name == "identity") return x;
  if (name == "autocontrast") return img::autocontrast(x);
  if (name == "equalize") return img::equalize(x);
  if (name == "posterize") return img::posterize(x, 3 + rng.uniform_int(4));
  if (name == "rotate") return img::clamp01(img::rotate_bilinear(x, rng.uniform(-25.0f, 25.0f)));
  if (name == "solarize") return img::solarize(x, rng.uniform(0.3f, 1.0f));
  if (name == "shearX")
    return img::clamp01(img::warp(x, img::Affine::shear_x(rng.uniform(-0.25f, 0.25f))));
  if (name == "shearY")
    return img::clamp01(img::warp(x, img::Affine::shear_y(rng.uniform(-0.25f, 0.25f))));
  if (name == "translateX")
    return img::clamp01(img::warp(x, img::Affine::translate(rng.uniform(-0.25f, 0.25f) * x.shape[2], 0)));
  if (name == "translateY")
    return img::clamp01(img::warp(x, img::Affine::translate(0, rng.uniform(-0.25f, 0.25f) * x.shape[1])));
  if (name == "saturate") return img::saturate(x, rng.uniform(0.15f, 3.0f));
  // Inverse-operation direction: training-time contrast reduces, brightness
  // raises, saturation oversaturates (opposite of the test-time-effective
  // adjustment).
  if (name == "contrast") return img::contrast(x, rng.uniform(0.15f, 0.8f));
  if (name == "brightness") return img::brightness(x, rng.uniform(0.08f, 0.38f));
  if (name == "sharpness") return sharpness(x, rng.uniform(0.2f, 3.0f));
  if (name == "saturation") return img::saturate(x, rng.uniform(1.4f, 3.0f));
  if (name == "highpass") return high_pass_recentered(x, rng.uniform(0.05f, 0.45f));
  if (name == "lowpass")
    return img::clamp01(fft::ideal_filter(x, rng.uniform(0.35f, 0.95f), true));
  if (name == "gamma")
    return img::gamma(x, std::exp(rng.uniform(std::log(0.45f), std::log(2.3f))));
  if (name == "inverse-gamma")
    return img::gamma(x, 1.0f / std::exp(rng.uniform(std::log(0.45f), std::log(2.3f))));
  if (name == "blur") return img::clamp01(img::gaussian_blur(x, rng.uniform(0.4f, 1.3f)));
  if (name == "zoom") return img::clamp01(img::zoom_bilinear(x, rng.uniform(0.75f, 1.35f)));
  if (name == "hue") return img::hue_shift(x, rng.uniform(-0.9f, 0.9f));
  if (name == "invert") return img::invert(x);
  throw ContractError("mix_augment: unknown op name '" + name + "'");
}

}  // namespace

const std::vector<std::string>& mix_ops_normal() {
  static const std::vector<std::string> ops = {"autocontrast", "equalize",   "posterize",
                                               "rotate",       "solarize",   "shearX",
                                               "shearY",       "translateX", "translateY"};
  return ops;
}

std::vector<std::string> mix_ops_all() {
  std::vector<std::string> ops = mix_ops_normal();
  ops.insert(ops.end(), {"saturate", "contrast", "brightness", "sharpness"});
  return ops;
}

bool is_known_mix_op(const std::string& name) {
  static const std::vector<std::string> known = {
      "identity",   "autocontrast", "equalize",  "posterize", "rotate",     "solarize",
      "shearX",     "shearY",       "translateX", "translateY", "saturate",  "contrast",
      "brightness", "sharpness",    "saturation", "highpass",  "lowpass",    "gamma",
      "inverse-gamma", "blur",      "zoom",      "hue",        "invert"};
  for (const auto& k : known)
    if (k == name) return true;
  return false;
}

Tensor mix_augment_with_blend(const Tensor& image, Rng& rng,
                              const std::vector<std::string>& op_set, float original_blend) {
  require(!op_set.empty(), "mix_augment: op set must be non-empty");
  for (const auto& op : op_set)
    if (!is_known_mix_op(op)) throw ContractError("mix_augment: unknown op name '" + op + "'");
  if (original_blend <= 0.0f) return image;

  constexpr int kChains = 3;
  // Dirichlet(1,1,1) over chains
  double wsum = 0;
  double w[kChains];
  for (int i = 0; i < kChains; ++i) {
    w[i] = -std::log(rng.uniform_pos());
    wsum += w[i];
  }
  Tensor mixed(image.shape);
  for (int i = 0; i < kChains; ++i) {
    Tensor chain = image;
    const int len = 1 + rng.uniform_int(3);
    for (int j = 0; j < len; ++j)
      chain = apply_mix_op(op_set[rng.uniform_int(static_cast<int>(op_set.size()))], chain, rng);
    mixed.data += static_cast<float>(w[i] / wsum) * chain.data;
  }
  Tensor out(image.shape);
  out.data = (1.0f - original_blend) * image.data + original_blend * mixed.data;
  return img::clamp01(std::move(out));
}

Tensor mix_augment(const Tensor& image, uint64_t seed, const std::vector<std::string>& op_set) {
  Rng rng(Rng::mix(seed, 0x313A6D1C));
  const float m = rng.uniform();  // Beta(1,1)
  return mix_augment_with_blend(image, rng, op_set, m);
}

}  // namespace dyntta::corrupt
