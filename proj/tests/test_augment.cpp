#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dyntta/augment.hpp"
#include "dyntta/fft.hpp"
#include "dyntta/grad_suite.hpp"
#include "dyntta/imgproc.hpp"
#include "dyntta/ops.hpp"
#include "dyntta/rng.hpp"

#include <cmath>

using namespace dyntta;

namespace {

Tensor random_image(int h, int w, uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  Rng rng(seed);
  Tensor t({3, h, w});
  for (int64_t i = 0; i < t.size(); ++i) t.data[i] = rng.uniform(lo, hi);
  return t;
}

Tensor apply_plain(const aug::AugmentationSpec& spec, const Tensor& image,
                   std::optional<float> magnitude = std::nullopt,
                   const aug::EnhancerParams* enhancer = nullptr) {
  return aug::apply(spec, image, magnitude, enhancer);
}

aug::AugmentationSpec find_spec(aug::Kind kind, float cutoff = 0) {
  for (const auto& s : aug::catalog())
    if (s.kind == kind && (cutoff == 0 || std::abs(s.cutoff - cutoff) < 1e-6f)) return s;
  throw std::runtime_error("spec not found");
}

}  // namespace

TEST_CASE("catalog layout follows the published table") {
  const auto specs = aug::catalog();
  CHECK(specs.size() == 50);

  CHECK(specs[0].kind == aug::Kind::Rotate);
  CHECK(specs[0].activation == aug::Activation::Tanh);
  CHECK(*specs[0].magnitude_range == doctest::Approx(30.0f));
  CHECK(specs[1].kind == aug::Kind::Scale);
  CHECK(*specs[1].magnitude_range == doctest::Approx(0.3f));
  CHECK(specs[2].kind == aug::Kind::Saturate);
  CHECK(specs[2].activation == aug::Activation::Sigmoid);
  CHECK(*specs[2].magnitude_range == doctest::Approx(5.0f));
  CHECK(specs[3].kind == aug::Kind::Contrast);
  CHECK(specs[4].kind == aug::Kind::Sharpness);
  CHECK(*specs[4].magnitude_range == doctest::Approx(10.0f));
  CHECK(specs[5].kind == aug::Kind::Brightness);
  CHECK(*specs[5].magnitude_range == doctest::Approx(0.6f));
  CHECK(specs[6].kind == aug::Kind::AutoContrast);
  CHECK_FALSE(specs[6].parameterized());
  CHECK(specs[7].kind == aug::Kind::Hue);
  CHECK(*specs[7].magnitude_range == doctest::Approx(2.0f));
  CHECK(specs[8].kind == aug::Kind::Equalize);
  CHECK(specs[9].kind == aug::Kind::Invert);
  CHECK(specs[10].kind == aug::Kind::Gamma);
  for (int i = 0; i < 19; ++i) {
    CHECK(specs[11 + i].kind == aug::Kind::LowPass);
    CHECK(specs[11 + i].cutoff == doctest::Approx(0.05 * (i + 1)));
    CHECK(specs[30 + i].kind == aug::Kind::HighPass);
    CHECK(specs[30 + i].cutoff == doctest::Approx(0.05 * (i + 1)));
  }
  CHECK(specs[49].kind == aug::Kind::NeuralEnhance);
  CHECK(aug::parameterized_count(specs) == 8);

  // parameterized <=> activation present <=> magnitude range present
  for (const auto& s : specs) {
    CHECK(s.parameterized() == (s.activation != aug::Activation::None));
    CHECK(s.parameterized() == s.magnitude_range.has_value());
  }
}

TEST_CASE("magnitude scales multiply the table ranges") {
  const auto small = aug::catalog(aug::MagnitudeScale::Small);
  const auto large = aug::catalog(aug::MagnitudeScale::Large);
  CHECK(*small[0].magnitude_range == doctest::Approx(15.0f));
  CHECK(*large[3].magnitude_range == doctest::Approx(4.5f));  // contrast 3.0 * 1.5
}

TEST_CASE("magnitude mapping") {
  const auto rotate = find_spec(aug::Kind::Rotate);
  const auto contrast = find_spec(aug::Kind::Contrast);
  CHECK(*aug::map_magnitude(0.0f, rotate) == doctest::Approx(0.0f));
  CHECK(*aug::map_magnitude(0.0f, contrast) == doctest::Approx(1.5f));
  // extended-precision oracle: 30*tanh(1)
  const double oracle = 30.0L * tanhl(1.0L);
  CHECK(std::abs(*aug::map_magnitude(1.0f, rotate) - oracle) < 1e-3);

  // open-interval ranges (float32 tanh saturates to exactly 1 beyond ~9)
  for (float raw : {-5.0f, -2.0f, 0.3f, 2.0f, 5.0f}) {
    const float mt = *aug::map_magnitude(raw, rotate);
    CHECK(mt > -30.0f);
    CHECK(mt < 30.0f);
    const float ms = *aug::map_magnitude(raw, contrast);
    CHECK(ms > 0.0f);
    CHECK(ms < 3.0f);
  }
  CHECK_FALSE(aug::map_magnitude(1.0f, find_spec(aug::Kind::Invert)).has_value());
}

TEST_CASE("apply contract errors") {
  Tensor img = random_image(8, 8, 1);
  CHECK_THROWS_AS(apply_plain(find_spec(aug::Kind::Rotate), img), ContractError);
  CHECK_THROWS_AS(apply_plain(find_spec(aug::Kind::Invert), img, 0.5f), ContractError);
  CHECK_THROWS_AS(apply_plain(find_spec(aug::Kind::NeuralEnhance), img), ContractError);
  Tensor bad = img;
  bad.data[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(apply_plain(find_spec(aug::Kind::Invert), bad), NumericError);
}

TEST_CASE("invert is one minus x") {
  Tensor img = random_image(8, 8, 2);
  Tensor out = apply_plain(find_spec(aug::Kind::Invert), img);
  CHECK(((1.0f - img.data) - out.data).abs().maxCoeff() == 0.0f);
}

TEST_CASE("rotate by zero is a bitwise identity") {
  Tensor img = random_image(16, 16, 3);
  Tensor out = apply_plain(find_spec(aug::Kind::Rotate), img, 0.0f);
  CHECK((out.data == img.data).all());
}

TEST_CASE("high-pass of a constant image is zero") {
  Tensor img = Tensor::full({3, 16, 16}, 0.37f);
  for (float cutoff : {0.05f, 0.5f, 0.95f}) {
    Tensor out = apply_plain(find_spec(aug::Kind::HighPass, cutoff), img);
    CHECK(out.data.abs().maxCoeff() < 1e-6f);
  }
}

TEST_CASE("complementary filters reconstruct the input") {
  for (uint64_t seed : {1, 2}) {
    Tensor img = random_image(16, 16, seed);
    for (int i = 1; i <= 19; ++i) {
      const float cutoff = static_cast<float>(0.05 * i);
      Tensor lp = fft::ideal_filter(img, cutoff, true);
      Tensor hp = fft::ideal_filter(img, cutoff, false);
      CHECK((lp.data + hp.data - img.data).abs().maxCoeff() < 1e-4f);
    }
  }
}

TEST_CASE("filters are linear") {
  Rng rng(7);
  Tensor x = random_image(16, 16, 10);
  Tensor y = random_image(16, 16, 11);
  const float a = rng.uniform(-2.0f, 2.0f), b = rng.uniform(-2.0f, 2.0f);
  for (float cutoff : {0.15f, 0.5f, 0.85f}) {
    for (bool low : {true, false}) {
      Tensor combo({3, 16, 16}, a * x.data + b * y.data);
      Array lhs = fft::ideal_filter(combo, cutoff, low).data;
      Array rhs = a * fft::ideal_filter(x, cutoff, low).data +
                  b * fft::ideal_filter(y, cutoff, low).data;
      CHECK((lhs - rhs).abs().maxCoeff() < 1e-4f);
    }
  }
}

TEST_CASE("autocontrast is idempotent") {
  for (uint64_t seed : {4, 5, 6}) {
    Tensor img = random_image(16, 16, seed, 0.2f, 0.7f);
    Tensor once = apply_plain(find_spec(aug::Kind::AutoContrast), img);
    Tensor twice = apply_plain(find_spec(aug::Kind::AutoContrast), once);
    CHECK((twice.data - once.data).abs().maxCoeff() < 1e-5f);
  }
  // degenerate constant channel passes through
  Tensor flat = Tensor::full({3, 8, 8}, 0.42f);
  Tensor out = apply_plain(find_spec(aug::Kind::AutoContrast), flat);
  CHECK((out.data - flat.data).abs().maxCoeff() == 0.0f);
}

TEST_CASE("identity limits reproduce the input") {
  Tensor img = random_image(16, 16, 9, 0.05f, 0.95f);
  auto check_identity = [&](aug::Kind kind, float magnitude, float tol) {
    Tensor out = apply_plain(find_spec(kind), img, magnitude);
    INFO(aug::kind_name(kind));
    CHECK((out.data - img.data).abs().maxCoeff() < tol);
  };
  check_identity(aug::Kind::Rotate, 0.0f, 1e-6f);
  check_identity(aug::Kind::Scale, 0.0f, 1e-6f);  // factor 1
  check_identity(aug::Kind::Brightness, 0.0f, 1e-6f);
  check_identity(aug::Kind::Hue, 0.0f, 1e-6f);
  check_identity(aug::Kind::Saturate, 1.0f, 1e-6f);
  check_identity(aug::Kind::Contrast, 1.0f, 1e-6f);
  check_identity(aug::Kind::Sharpness, 1.0f, 1e-6f);
  check_identity(aug::Kind::Gamma, 1.0f, 1e-6f);
}

TEST_CASE("every kind preserves the pixel range") {
  Rng rng(21);
  const auto specs = aug::catalog();
  aug::EnhancerParams enhancer = aug::EnhancerParams::init(3);
  for (int64_t i = 0; i < enhancer.c3.w.size(); ++i)
    enhancer.c3.w.data[i] = rng.uniform(-0.1f, 0.1f);  // non-trivial residual
  for (const auto& spec : specs) {
    Tensor img = random_image(16, 16, 100 + static_cast<uint64_t>(spec.kind));
    std::optional<float> m;
    if (spec.parameterized()) m = aug::map_magnitude(rng.uniform(-2.5f, 2.5f), spec);
    Tensor out = apply_plain(spec, img, m,
                             spec.kind == aug::Kind::NeuralEnhance ? &enhancer : nullptr);
    INFO(spec.name());
    CHECK(out.data.minCoeff() >= 0.0f);
    CHECK(out.data.maxCoeff() <= 1.0f);
    CHECK(out.shape == img.shape);
  }
}

TEST_CASE("zero-initialized enhancer is an identity") {
  aug::EnhancerParams params = aug::EnhancerParams::init(17);
  Tensor img = random_image(16, 16, 23);
  Tensor out = aug::neural_enhance(img, params);
  CHECK((out.data == img.data).all());
  CHECK(params.param_count() ==
        params.c1.w.size() + params.c1.b.size() + params.c2.w.size() + params.c2.b.size() +
            params.c3.w.size() + params.c3.b.size());
}

TEST_CASE("random enhancer keeps outputs in range") {
  aug::EnhancerParams params = aug::EnhancerParams::init(31);
  Rng rng(32);
  for (int64_t i = 0; i < params.c3.w.size(); ++i) params.c3.w.data[i] = rng.uniform(-1, 1);
  Tensor zeros = Tensor::zeros({3, 8, 8});
  Tensor out = aug::neural_enhance(zeros, params);
  CHECK(out.data.minCoeff() >= 0.0f);
  CHECK(out.data.maxCoeff() <= 1.0f);
}
