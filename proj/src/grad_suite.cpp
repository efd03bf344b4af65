#include "dyntta/grad_suite.hpp"

#include "dyntta/augment.hpp"
#include "dyntta/classifier.hpp"
#include "dyntta/head.hpp"
#include "dyntta/imgproc.hpp"
#include "dyntta/ops.hpp"
#include "dyntta/rng.hpp"

#include <algorithm>
#include <cmath>

namespace dyntta {

bool GradSuiteReport::all_pass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

float GradSuiteReport::worst() const {
  float w = 0;
  for (const auto& e : entries) w = std::max(w, e.max_rel_err);
  return w;
}

Tensor smooth_test_image(int channels, int h, int w, uint64_t seed) {
  Rng r(seed);
  Tensor t({channels, h, w});
  for (int ch = 0; ch < channels; ++ch) {
    const float a1 = r.uniform(0.15f, 0.30f), a2 = r.uniform(0.10f, 0.20f);
    const float kx1 = r.uniform(-0.8f, 0.8f), ky1 = r.uniform(-0.8f, 0.8f);
    const float kx2 = r.uniform(-1.2f, 1.2f), ky2 = r.uniform(-1.2f, 1.2f);
    const float p1 = r.uniform(0.0f, 6.2831853f), p2 = r.uniform(0.0f, 6.2831853f);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float v = 0.5f +
                  a1 * std::cos(6.2831853f * (kx1 * x / w + ky1 * y / h) + p1) +
                  a2 * std::cos(6.2831853f * (kx2 * x / w + ky2 * y / h) + p2);
        t.data[(static_cast<int64_t>(ch) * h + y) * w + x] = std::clamp(v, 0.03f, 0.97f);
      }
  }
  t.requires_grad = true;
  return t;
}

Tensor low_chroma_test_image(int h, int w, uint64_t seed) {
  Tensor luma = smooth_test_image(1, h, w, seed);
  Rng r(Rng::mix(seed, 0x10C));
  Tensor t({3, h, w});
  const int64_t hw = static_cast<int64_t>(h) * w;
  for (int ch = 0; ch < 3; ++ch) {
    const float off = r.uniform(-0.03f, 0.03f);
    t.data.segment(ch * hw, hw) =
        (0.6f * (luma.data - 0.5f) + 0.5f + off).max(0.05f).min(0.95f);
  }
  t.requires_grad = true;
  return t;
}

Array positive_projection(int64_t n, uint64_t seed) {
  Rng r(Rng::mix(seed, 0x9e05));
  Array a(n);
  for (int64_t i = 0; i < n; ++i) a[i] = 0.75f + 0.5f * r.uniform();
  return a;
}

namespace {

Tensor random_tensor(Shape shape, uint64_t seed, float lo, float hi, bool rg = true) {
  Rng rng(Rng::mix(seed, 0x7A));
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t.data[i] = rng.uniform(lo, hi);
  t.requires_grad = rg;
  return t;
}

// All-positive weights keep relu units live and pool argmaxes stable, so
// finite differences see a locally smooth function.
void positivize(Tensor& t, float floor_value = 0.02f) {
  t.data = t.data.abs().max(floor_value);
}

// Unit-ish layer gain keeps activation magnitudes (and hence float32
// rounding noise in the probe) flat across depth.
void positivize_conv(nn::Conv2d& c, float gain = 1.2f) {
  positivize(c.w);
  const float row_sum = c.w.data.sum() / static_cast<float>(c.w.shape[0]);
  c.w.data *= gain / row_sum;
  c.b.data.setConstant(0.05f);
}

// Band-limited image for warp checks: gentle curvature keeps interpolation
// kinks negligible under the finite-difference sweep.
Tensor warp_test_image(int hw, uint64_t seed) {
  Rng r(Rng::mix(seed, 0x3A9F));
  Tensor t({3, hw, hw});
  for (int ch = 0; ch < 3; ++ch) {
    const float a1 = r.uniform(0.18f, 0.28f), a2 = r.uniform(0.04f, 0.08f);
    const float kx1 = r.uniform(-0.5f, 0.5f), ky1 = r.uniform(-0.5f, 0.5f);
    const float kx2 = r.uniform(-0.8f, 0.8f), ky2 = r.uniform(-0.8f, 0.8f);
    const float p1 = r.uniform(0.0f, 6.2831853f), p2 = r.uniform(0.0f, 6.2831853f);
    for (int y = 0; y < hw; ++y)
      for (int x = 0; x < hw; ++x) {
        float v = 0.5f +
                  a1 * std::cos(6.2831853f * (kx1 * x / hw + ky1 * y / hw) + p1) +
                  a2 * std::cos(6.2831853f * (kx2 * x / hw + ky2 * y / hw) + p2);
        t.data[(static_cast<int64_t>(ch) * hw + y) * hw + x] = std::clamp(v, 0.05f, 0.95f);
      }
  }
  t.requires_grad = true;
  return t;
}

// Values bounded away from a kink location by `margin`.
Tensor away_from_kinks(Tensor t, float kink, float margin) {
  for (int64_t i = 0; i < t.size(); ++i) {
    const float d = t.data[i] - kink;
    if (std::abs(d) < margin) t.data[i] = kink + (d >= 0 ? margin : -margin);
  }
  return t;
}

struct SuiteRunner {
  GradSuiteReport report;
  int seeds;
  uint64_t base;

  void run(const std::string& name, float tol,
           const std::function<void(uint64_t seed, float& worst)>& fn) {
    GradSuiteEntry e;
    e.name = name;
    e.tolerance = tol;
    for (int s = 0; s < seeds; ++s) {
      float w = 0;
      fn(Rng::mix(base, 1000 + s), w);
      e.max_rel_err = std::max(e.max_rel_err, w);
    }
    e.pass = e.max_rel_err <= tol;
    report.entries.push_back(std::move(e));
  }
};

}  // namespace

GradSuiteReport run_gradient_suite(int seeds, uint64_t base_seed) {
  SuiteRunner sr;
  sr.seeds = seeds;
  sr.base = Rng::mix(base_seed, 0x57E11A);

  // Every probe skips coordinates below float32 finite-difference resolution
  // at the entry's own tolerance (the fp32 analog of the 1e-6 denominator
  // floor, which only protects exact zeros).
  auto simple = [](const GradCheckBuild& build, std::vector<Tensor> inputs, uint64_t seed,
                   float eps = 1e-2f, const Array* proj = nullptr, float tol = 1e-3f) {
    return grad_check("op", build, std::move(inputs), eps, seed, -1, proj, tol).max_rel_err();
  };

  // ---- elementwise and reduction primitives -------------------------------
  sr.run("add/sub/mul", 1e-3f, [&](uint64_t s, float& w) {
    w = simple(
        [](Tape& t, std::span<const Var> in) {
          return ops::mul(t, ops::sub(t, ops::add(t, in[0], in[1]), in[2]), in[1]);
        },
        {random_tensor({12}, s, -1, 1), random_tensor({12}, s + 1, 0.4f, 1.4f),
         random_tensor({12}, s + 2, -1, 1)},
        s);
  });
  sr.run("affine", 1e-3f, [&](uint64_t s, float& w) {
    w = simple([](Tape& t, std::span<const Var> in) { return ops::affine(t, in[0], -1.7f, 0.4f); },
               {random_tensor({16}, s, -1, 1)}, s);
  });
  sr.run("scalar broadcast (add/mul)", 1e-3f, [&](uint64_t s, float& w) {
    w = simple(
        [](Tape& t, std::span<const Var> in) {
          return ops::add_scalar(t, ops::mul_scalar(t, in[0], in[1]), in[2]);
        },
        {random_tensor({10}, s, 0.3f, 1.3f), random_tensor({1}, s + 1, 0.5f, 1.5f),
         random_tensor({1}, s + 2, -1, 1)},
        s);
  });
  sr.run("relu", 1e-3f, [&](uint64_t s, float& w) {
    w = simple([](Tape& t, std::span<const Var> in) { return ops::relu(t, in[0]); },
               {away_from_kinks(random_tensor({24}, s, -1, 1), 0.0f, 0.05f)}, s);
  });
  sr.run("tanh", 1e-3f, [&](uint64_t s, float& w) {
    w = simple([](Tape& t, std::span<const Var> in) { return ops::tanh_map(t, in[0]); },
               {random_tensor({16}, s, -2, 2)}, s);
  });
  sr.run("sigmoid", 1e-3f, [&](uint64_t s, float& w) {
    w = simple([](Tape& t, std::span<const Var> in) { return ops::sigmoid_map(t, in[0]); },
               {random_tensor({16}, s, -2, 2)}, s);
  });
  sr.run("clamp01", 1e-3f, [&](uint64_t s, float& w) {
    Tensor x = random_tensor({24}, s, -0.5f, 1.5f);
    x = away_from_kinks(std::move(x), 0.0f, 0.05f);
    x = away_from_kinks(std::move(x), 1.0f, 0.05f);
    w = simple([](Tape& t, std::span<const Var> in) { return ops::clamp01(t, in[0]); }, {x}, s);
  });
  sr.run("softmax", 1e-3f, [&](uint64_t s, float& w) {
    w = simple([](Tape& t, std::span<const Var> in) { return ops::softmax(t, in[0]); },
               {random_tensor({8}, s, -0.8f, 0.8f)}, s);
  });
  sr.run("cross_entropy", 1e-3f, [&](uint64_t s, float& w) {
    const int label = static_cast<int>(s % 8);
    w = simple(
        [label](Tape& t, std::span<const Var> in) { return ops::cross_entropy(t, in[0], label); },
        {random_tensor({8}, s, -1.5f, 1.5f)}, s);
  });
  sr.run("linear", 1e-3f, [&](uint64_t s, float& w) {
    Array proj = positive_projection(6, s);
    w = simple(
        [](Tape& t, std::span<const Var> in) { return ops::linear(t, in[0], in[1], in[2]); },
        {random_tensor({5}, s, 0.4f, 1.2f), random_tensor({6, 5}, s + 1, -1, 1),
         random_tensor({6}, s + 2, -1, 1)},
        s, 1e-2f, &proj);
  });
  sr.run("conv2d", 1e-3f, [&](uint64_t s, float& w) {
    Array proj = positive_projection(3 * 36, s);
    w = simple(
        [](Tape& t, std::span<const Var> in) { return ops::conv2d(t, in[0], in[1], in[2]); },
        {random_tensor({2, 6, 6}, s, 0.25f, 1.0f), random_tensor({3, 2, 3, 3}, s + 1, 0.1f, 1.0f),
         random_tensor({3}, s + 2, 0.1f, 0.5f)},
        s, 1e-2f, &proj);
  });
  sr.run("maxpool2", 1e-3f, [&](uint64_t s, float& w) {
    // well-separated values keep the argmax stable under the probe step
    Rng r(s);
    Tensor x({2, 6, 6});
    std::vector<int> perm(x.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    for (int i = static_cast<int>(perm.size()) - 1; i > 0; --i)
      std::swap(perm[i], perm[r.uniform_int(i + 1)]);
    for (int64_t i = 0; i < x.size(); ++i) x.data[i] = perm[i] * (1.0f / perm.size());
    x.requires_grad = true;
    w = simple([](Tape& t, std::span<const Var> in) { return ops::maxpool2(t, in[0]); }, {x}, s,
               5e-3f);
  });
  sr.run("global_avg_pool", 1e-3f, [&](uint64_t s, float& w) {
    w = simple([](Tape& t, std::span<const Var> in) { return ops::global_avg_pool(t, in[0]); },
               {random_tensor({3, 4, 4}, s, -1, 1)}, s);
  });
  sr.run("slice", 1e-3f, [&](uint64_t s, float& w) {
    w = simple([](Tape& t, std::span<const Var> in) { return ops::slice(t, in[0], 3, 5); },
               {random_tensor({12}, s, -1, 1)}, s);
  });
  sr.run("grayscale/replicate", 1e-3f, [&](uint64_t s, float& w) {
    Array proj = positive_projection(3 * 25, s);
    w = simple(
        [](Tape& t, std::span<const Var> in) {
          return ops::replicate_channels(t, ops::grayscale(t, in[0]), 3);
        },
        {random_tensor({3, 5, 5}, s, 0, 1)}, s, 1e-2f, &proj);
  });
  sr.run("mean/broadcast", 1e-3f, [&](uint64_t s, float& w) {
    w = simple(
        [](Tape& t, std::span<const Var> in) {
          return ops::broadcast_to(t, ops::mean_all(t, in[0]), {2, 3, 3});
        },
        {random_tensor({2, 3, 3}, s, -1, 1)}, s);
  });
  sr.run("gaussian3", 1e-3f, [&](uint64_t s, float& w) {
    Array proj = positive_projection(2 * 36, s);
    w = simple([](Tape& t, std::span<const Var> in) { return ops::gaussian3(t, in[0]); },
               {random_tensor({2, 6, 6}, s, 0, 1)}, s, 1e-2f, &proj);
  });
  sr.run("low_pass filter", 1e-3f, [&](uint64_t s, float& w) {
    Array proj = positive_projection(3 * 64, s);
    w = simple(
        [](Tape& t, std::span<const Var> in) { return ops::fft_filter(t, in[0], 0.4f, true); },
        {random_tensor({3, 8, 8}, s, 0, 1)}, s, 1e-2f, &proj);
  });
  sr.run("high_pass filter", 1e-3f, [&](uint64_t s, float& w) {
    Array proj(3 * 64);
    for (int ch = 0; ch < 3; ++ch)
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) proj[ch * 64 + y * 8 + x] = ((x + y) % 2) ? -1.0f : 1.0f;
    w = simple(
        [](Tape& t, std::span<const Var> in) { return ops::fft_filter(t, in[0], 0.3f, false); },
        {random_tensor({3, 8, 8}, s, 0, 1)}, s, 1e-2f, &proj);
  });
  sr.run("autocontrast", 1e-3f, [&](uint64_t s, float& w) {
    Tensor x = random_tensor({3, 8, 8}, s, 0.2f, 0.8f);
    for (int ch = 0; ch < 3; ++ch) {
      x.data[ch * 64 + 5] = 0.02f;  // clear extremes: argmin/argmax stay put
      x.data[ch * 64 + 40] = 0.98f;
    }
    Array proj = positive_projection(3 * 64, s);
    w = simple([](Tape& t, std::span<const Var> in) { return ops::autocontrast(t, in[0]); }, {x},
               s, 1e-2f, &proj);
  });
  sr.run("pow_gamma", 1e-3f, [&](uint64_t s, float& w) {
    Rng r(s);
    Tensor e = Tensor::scalar(r.uniform(0.3f, 2.5f));
    e.requires_grad = true;
    Array proj = positive_projection(3 * 64, s);
    w = simple(
        [](Tape& t, std::span<const Var> in) { return ops::pow_gamma(t, in[0], in[1]); },
        {random_tensor({3, 8, 8}, s, 0.25f, 0.95f), e}, s, 5e-3f, &proj);
  });
  sr.run("hue_rotate", 1e-3f, [&](uint64_t s, float& w) {
    Rng r(s);
    Tensor a = Tensor::scalar(r.uniform(-0.8f, 0.8f));
    a.requires_grad = true;
    Array proj = positive_projection(3 * 256, s);
    w = simple(
        [](Tape& t, std::span<const Var> in) { return ops::hue_rotate(t, in[0], in[1]); },
        {smooth_test_image(3, 16, 16, s), a}, s, 1e-2f, &proj);
  });
  sr.run("blend_images", 1e-3f, [&](uint64_t s, float& w) {
    w = simple(
        [](Tape& t, std::span<const Var> in) {
          std::vector<Var> imgs = {in[0], in[1], in[2]};
          return ops::blend_images(t, imgs, in[3]);
        },
        {random_tensor({3, 4, 4}, s, 0, 1), random_tensor({3, 4, 4}, s + 1, 0, 1),
         random_tensor({3, 4, 4}, s + 2, 0, 1), random_tensor({3}, s + 3, 0.15f, 0.9f)},
        s);
  });

  // ---- resampling primitives (interpolation kinks: looser tolerance) ------
  sr.run("rotate", 5e-3f, [&](uint64_t s, float& w) {
    Rng r(s);
    Tensor deg = Tensor::scalar(r.uniform(2.0f, 10.0f) * (r.uniform() < 0.5f ? -1.0f : 1.0f));
    deg.requires_grad = true;
    Array proj = positive_projection(3 * 256, s);
    w = simple([](Tape& t, std::span<const Var> in) { return ops::rotate(t, in[0], in[1]); },
               {warp_test_image(16, s), deg}, s, 1e-2f, &proj, 5e-3f);
  });
  sr.run("zoom (magnitude)", 5e-3f, [&](uint64_t s, float& w) {
    Rng r(s);
    Tensor img = warp_test_image(16, s);
    img.requires_grad = false;
    Tensor m = Tensor::scalar(r.uniform(0.04f, 0.16f));
    m.requires_grad = true;
    Array proj = positive_projection(3 * 256, s);
    w = simple([](Tape& t, std::span<const Var> in) { return ops::zoom(t, in[0], in[1]); },
               {img, m}, s, 1e-3f, &proj, 5e-3f);
  });
  sr.run("zoom (image)", 5e-3f, [&](uint64_t s, float& w) {
    Rng r(s);
    Tensor m = Tensor::scalar(r.uniform(-0.02f, 0.02f));
    Array proj = positive_projection(3 * 256, s);
    w = simple([](Tape& t, std::span<const Var> in) { return ops::zoom(t, in[0], in[1]); },
               {smooth_test_image(3, 16, 16, s), m}, s, 1e-2f, &proj, 5e-3f);
  });

  // ---- every parameterized augmentation w.r.t. its magnitude --------------
  const auto specs = aug::catalog();
  for (const auto& spec : specs) {
    if (!spec.parameterized()) continue;
    const float tol = (spec.kind == aug::Kind::Rotate || spec.kind == aug::Kind::Scale)
                          ? 5e-3f
                          : 1e-3f;
    sr.run("augment " + spec.name() + " d/dm", tol, [&](uint64_t s, float& w) {
      Rng r(s);
      const float range = *spec.magnitude_range;
      float m = 0;
      float eps = 1e-2f;
      Tensor img = low_chroma_test_image(16, 16, s);
      if (spec.kind == aug::Kind::Rotate || spec.kind == aug::Kind::Scale)
        img = warp_test_image(16, s);
      switch (spec.kind) {
        case aug::Kind::Rotate: m = r.uniform(0.07f, 0.33f) * range * (r.uniform() < 0.5f ? -1 : 1); break;
        case aug::Kind::Scale: m = r.uniform(0.15f, 0.55f) * range; eps = 1e-3f; break;
        case aug::Kind::Brightness: m = r.uniform(0.02f, 0.15f) * (r.uniform() < 0.5f ? -1 : 1); break;
        case aug::Kind::Hue:
          m = r.uniform(0.1f, 0.3f) * range * (r.uniform() < 0.5f ? -1 : 1);
          img.data = 0.15f + 0.7f * img.data;
          break;
        case aug::Kind::Contrast: m = r.uniform(0.1f, 0.5f) * range; break;
        case aug::Kind::Sharpness:
          m = r.uniform(0.05f, 0.2f) * range;
          img.data = 0.2f + 0.5f * img.data;
          break;
        default: m = r.uniform(0.1f, 0.6f) * range; break;
      }
      Tensor mv = Tensor::scalar(m);
      mv.requires_grad = true;
      img.requires_grad = false;
      Array proj = positive_projection(3 * 256, s);
      w = grad_check(
              "augment_m",
              [&spec](Tape& t, std::span<const Var> in) {
                return aug::apply(t, spec, in[0], in[1]);
              },
              {img, mv}, eps, s, -1, &proj, tol)
              .max_rel_err();
    });
  }

  // ---- enhancer parameter gradients ----------------------------------------
  sr.run("neural_enhance d/dparams", 1e-3f, [&](uint64_t s, float& w) {
    aug::EnhancerParams params = aug::EnhancerParams::init(s, 3, 8);
    positivize_conv(params.c1);
    positivize_conv(params.c2);
    Rng r(s);
    for (int64_t i = 0; i < params.c3.w.size(); ++i)
      params.c3.w.data[i] = r.uniform(0.0005f, 0.002f);
    Tensor img = smooth_test_image(3, 8, 8, s);
    img.data = 0.2f + 0.55f * img.data;  // residual headroom: keep clamp inactive
    img.requires_grad = false;
    std::vector<Tensor> inputs = {img,          params.c1.w, params.c1.b, params.c2.w,
                                  params.c2.b, params.c3.w, params.c3.b};
    w = grad_check(
            "enhancer",
            [](Tape& t, std::span<const Var> in) {
              aug::StagedEnhancer e{{in[1], in[2]}, {in[3], in[4]}, {in[5], in[6]}};
              return aug::neural_enhance(t, in[0], e);
            },
            inputs, 1e-2f, s, 40, nullptr, 1e-3f)
            .max_rel_err();
  });

  // ---- backbone and end-to-end ---------------------------------------------
  sr.run("backbone_forward d/dparams (1% sample)", 1e-3f, [&](uint64_t s, float& w) {
    const auto cat = aug::catalog();
    head::DynttaParams params = head::DynttaParams::init(s, cat);
    positivize_conv(params.c1);
    positivize_conv(params.c2);
    positivize_conv(params.c3);
    // non-zero head so weight/magnitude outputs respond
    Rng r(s);
    for (int64_t i = 0; i < params.head.w.size(); ++i)
      params.head.w.data[i] = r.uniform(-0.3f, 0.3f);
    Tensor img = smooth_test_image(3, 16, 16, s);
    img.requires_grad = false;

    std::vector<Tensor> inputs = {img};
    params.visit([&inputs](const std::string&, Tensor& t) { inputs.push_back(t); });
    const int label = static_cast<int>(s % 7);
    w = grad_check(
            "backbone",
            [label](Tape& t, std::span<const Var> in) {
              head::StagedDyntta sd;
              sd.c1 = {in[1], in[2]};
              sd.c2 = {in[3], in[4]};
              sd.c3 = {in[5], in[6]};
              sd.head = {in[7], in[8]};
              sd.enhancer = {{in[9], in[10]}, {in[11], in[12]}, {in[13], in[14]}};
              head::BackboneOut out = head::backbone_forward(t, in[0], sd);
              return ops::cross_entropy(t, out.raw_weights, label);
            },
            inputs, 1e-2f, s, 24, nullptr, 1e-3f)
            .max_rel_err();
  });

  sr.run("end-to-end pipeline d/dparams (1% sample)", 5e-3f, [&](uint64_t s, float& w) {
    const auto cat = aug::catalog();
    head::DynttaParams dyn = head::DynttaParams::init(s, cat);
    positivize_conv(dyn.c1);
    positivize_conv(dyn.c2);
    positivize_conv(dyn.c3);
    positivize_conv(dyn.enhancer.c1);
    positivize_conv(dyn.enhancer.c2);
    cls::ClassifierParams clf = cls::ClassifierParams::init(s + 1, 7, 3, 16, 16);
    positivize_conv(clf.c1);
    positivize_conv(clf.c2);
    clf.frozen = true;
    Rng r(s);
    for (int64_t i = 0; i < dyn.head.w.size(); ++i) dyn.head.w.data[i] = r.uniform(-0.45f, 0.45f);
    for (int64_t i = 0; i < dyn.enhancer.c3.w.size(); ++i)
      dyn.enhancer.c3.w.data[i] = r.uniform(0.0005f, 0.003f);
    Tensor warped = warp_test_image(16, s);
    Tensor img({3, 16, 16});
    for (int ch = 0; ch < 3; ++ch)
      img.data.segment(ch * 256, 256) =
          (0.55f * (warped.data.segment(ch * 256, 256) - 0.5f) + 0.5f).max(0.08f).min(0.92f);
    img.requires_grad = false;

    std::vector<Tensor> inputs = {img};
    dyn.visit([&inputs](const std::string&, Tensor& t) { inputs.push_back(t); });
    const int label = static_cast<int>(s % 7);
    w = grad_check(
            "pipeline",
            [&cat, &clf, label](Tape& t, std::span<const Var> in) {
              head::StagedDyntta sd;
              sd.c1 = {in[1], in[2]};
              sd.c2 = {in[3], in[4]};
              sd.c3 = {in[5], in[6]};
              sd.head = {in[7], in[8]};
              sd.enhancer = {{in[9], in[10]}, {in[11], in[12]}, {in[13], in[14]}};
              Var out = head::dyntta_forward(t, in[0], sd, cat, 0.0f, head::Mode::Full);
              cls::StagedClassifier sc = cls::stage(t, clf);
              return ops::cross_entropy(t, cls::classify(t, out, sc, clf), label);
            },
            inputs, 1e-2f, s, 10, nullptr, 5e-3f)
            .max_rel_err();
  });

  // Same conv/relu/pool/linear composition as classify at a width where a
  // single pixel's influence is resolvable by float32 finite differences.
  sr.run("classifier composite d/dimage", 1e-3f, [&](uint64_t s, float& w) {
    Rng r(s);
    nn::Conv2d c1 = nn::Conv2d::he_init(3, 4, 3, r);
    nn::Conv2d c2 = nn::Conv2d::he_init(4, 8, 3, r);
    nn::Linear fc = nn::Linear::he_init(8 * 2 * 2, 5, r);
    positivize_conv(c1);
    positivize_conv(c2);
    w = grad_check(
            "classifier_input",
            [&](Tape& t, std::span<const Var> in) {
              Tape& tp = t;
              nn::StagedConv s1 = nn::stage(tp, c1, false);
              nn::StagedConv s2 = nn::stage(tp, c2, false);
              nn::StagedLinear sfc = nn::stage(tp, fc, false);
              Var h = ops::maxpool2(tp, ops::relu(tp, nn::apply(tp, in[0], s1)));
              h = ops::maxpool2(tp, ops::relu(tp, nn::apply(tp, h, s2)));
              return nn::apply(tp, h, sfc);
            },
            {smooth_test_image(3, 8, 8, s)}, 1e-2f, s, 96, nullptr, 1e-3f)
            .max_rel_err();
  });

  return sr.report;
}

}  // namespace dyntta
