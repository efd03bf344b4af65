#include "dyntta/corrupt.hpp"

#include "dyntta/fft.hpp"
#include "dyntta/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dyntta::corrupt {

namespace {

constexpr double kTwoPi = 6.283185307179586;

// Severity tables, frozen after calibration against the baseline classifier.
constexpr float kGaussSigma[5] = {0.04f, 0.06f, 0.08f, 0.12f, 0.18f};
constexpr float kShotLambda[5] = {60.0f, 35.0f, 20.0f, 10.0f, 5.0f};
constexpr float kImpulseProb[5] = {0.02f, 0.04f, 0.07f, 0.12f, 0.18f};
constexpr float kDefocusRadius[5] = {0.8f, 1.2f, 1.7f, 2.3f, 3.2f};
constexpr float kMotionLen[5] = {2.0f, 3.0f, 4.5f, 6.5f, 9.0f};
constexpr float kZoomBlurMax[5] = {0.04f, 0.08f, 0.13f, 0.20f, 0.30f};
constexpr float kFogT[5] = {0.20f, 0.30f, 0.42f, 0.55f, 0.70f};
constexpr float kBrightShift[5] = {0.08f, 0.14f, 0.20f, 0.28f, 0.38f};
constexpr float kContrastFactor[5] = {0.65f, 0.50f, 0.40f, 0.30f, 0.20f};
constexpr float kElasticAmp[5] = {0.7f, 1.1f, 1.7f, 2.5f, 3.5f};
constexpr float kPixelateFactor[5] = {1.4f, 1.8f, 2.4f, 3.2f, 4.5f};
constexpr float kJpegQuant[5] = {0.04f, 0.07f, 0.11f, 0.17f, 0.27f};
constexpr float kSpeckleSigma[5] = {0.08f, 0.13f, 0.19f, 0.28f, 0.42f};
constexpr float kGaussBlurSigma[5] = {0.4f, 0.65f, 0.95f, 1.35f, 1.9f};
constexpr int kSpatterCount[5] = {3, 5, 8, 12, 17};
constexpr float kSpatterAlpha[5] = {0.35f, 0.45f, 0.55f, 0.65f, 0.78f};
// severities 1-2 desaturate, 3-5 oversaturate (mirrors the canonical benchmark)
constexpr float kSaturateFactor[5] = {0.45f, 0.18f, 2.6f, 4.2f, 7.0f};

float sample_clamp(const float* plane, int h, int w, float sy, float sx) {
  sy = std::clamp(sy, 0.0f, static_cast<float>(h - 1));
  sx = std::clamp(sx, 0.0f, static_cast<float>(w - 1));
  int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
  int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  float dy = sy - y0, dx = sx - x0;
  return (1 - dy) * ((1 - dx) * plane[y0 * w + x0] + dx * plane[y0 * w + x1]) +
         dy * ((1 - dx) * plane[y1 * w + x0] + dx * plane[y1 * w + x1]);
}

Array low_freq_field(Rng& rng, int h, int w) {
  float amp[3], kx[3], ky[3], ph[3];
  for (int i = 0; i < 3; ++i) {
    amp[i] = 1.0f / 3.0f;
    kx[i] = rng.uniform(-1.5f, 1.5f);
    ky[i] = rng.uniform(-1.5f, 1.5f);
    ph[i] = rng.uniform(0.0f, static_cast<float>(kTwoPi));
  }
  Array field(static_cast<int64_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float v = 0;
      for (int i = 0; i < 3; ++i)
        v += amp[i] * std::cos(static_cast<float>(kTwoPi) *
                                   (kx[i] * x / w + ky[i] * y / h) +
                               ph[i]);
      field[y * w + x] = 0.5f * (v + 1.0f);
    }
  return field;
}

Tensor disk_blur(const Tensor& x, float radius) {
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  const int r = static_cast<int>(std::ceil(radius));
  std::vector<float> k((2 * r + 1) * (2 * r + 1));
  float sum = 0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      float d = std::sqrt(static_cast<float>(dy * dy + dx * dx));
      float v = std::clamp(radius - d + 0.5f, 0.0f, 1.0f);
      k[(dy + r) * (2 * r + 1) + (dx + r)] = v;
      sum += v;
    }
  for (float& v : k) v /= sum;
  auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  Tensor out(x.shape);
  for (int ch = 0; ch < c; ++ch) {
    const float* src = x.data.data() + static_cast<int64_t>(ch) * h * w;
    float* dst = out.data.data() + static_cast<int64_t>(ch) * h * w;
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        float acc = 0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx)
            acc += k[(dy + r) * (2 * r + 1) + (dx + r)] *
                   src[clampi(y + dy, 0, h - 1) * w + clampi(xx + dx, 0, w - 1)];
        dst[y * w + xx] = acc;
      }
  }
  return out;
}

Tensor motion_blur(const Tensor& x, float length, Rng& rng) {
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  const float angle = rng.uniform(0.0f, 3.14159265f);
  const float ca = std::cos(angle), sa = std::sin(angle);
  const int n = std::max(3, static_cast<int>(2.0f * length) + 1);
  Tensor out(x.shape);
  for (int ch = 0; ch < c; ++ch) {
    const float* src = x.data.data() + static_cast<int64_t>(ch) * h * w;
    float* dst = out.data.data() + static_cast<int64_t>(ch) * h * w;
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        float acc = 0;
        for (int j = 0; j < n; ++j) {
          float t = -0.5f * length + length * j / (n - 1);
          acc += sample_clamp(src, h, w, y + t * sa, xx + t * ca);
        }
        dst[y * w + xx] = acc / n;
      }
  }
  return out;
}

Tensor zoom_blur(const Tensor& x, float zmax) {
  constexpr int kSteps = 7;
  Tensor acc(x.shape);
  for (int j = 0; j < kSteps; ++j) {
    float f = 1.0f + zmax * j / (kSteps - 1);
    Tensor z = img::zoom_bilinear(x, f);
    acc.data += z.data;
  }
  acc.data /= static_cast<float>(kSteps);
  return acc;
}

Tensor elastic(const Tensor& x, float amp, Rng& rng) {
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  Tensor fy({1, h, w}), fx({1, h, w});
  for (int64_t i = 0; i < fy.data.size(); ++i) fy.data[i] = rng.normal();
  for (int64_t i = 0; i < fx.data.size(); ++i) fx.data[i] = rng.normal();
  fy = img::gaussian_blur(fy, 4.0f);
  fx = img::gaussian_blur(fx, 4.0f);
  const float my = fy.data.abs().maxCoeff() + 1e-6f;
  const float mx = fx.data.abs().maxCoeff() + 1e-6f;
  fy.data *= amp / my;
  fx.data *= amp / mx;
  Tensor out(x.shape);
  for (int ch = 0; ch < c; ++ch) {
    const float* src = x.data.data() + static_cast<int64_t>(ch) * h * w;
    float* dst = out.data.data() + static_cast<int64_t>(ch) * h * w;
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx)
        dst[y * w + xx] =
            sample_clamp(src, h, w, y + fy.data[y * w + xx], xx + fx.data[y * w + xx]);
  }
  return out;
}

Tensor pixelate(const Tensor& x, float factor) {
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  const int h2 = std::max(1, static_cast<int>(std::lround(h / factor)));
  const int w2 = std::max(1, static_cast<int>(std::lround(w / factor)));
  Array small(static_cast<int64_t>(c) * h2 * w2);
  Array count(static_cast<int64_t>(h2) * w2);
  Tensor out(x.shape);
  for (int ch = 0; ch < c; ++ch) {
    const float* src = x.data.data() + static_cast<int64_t>(ch) * h * w;
    float* sm = small.data() + static_cast<int64_t>(ch) * h2 * w2;
    std::fill(sm, sm + static_cast<int64_t>(h2) * w2, 0.0f);
    count.setZero();
    for (int y = 0; y < h; ++y) {
      int ty = std::min(h2 - 1, y * h2 / h);
      for (int xx = 0; xx < w; ++xx) {
        int tx = std::min(w2 - 1, xx * w2 / w);
        sm[ty * w2 + tx] += src[y * w + xx];
        count[ty * w2 + tx] += 1.0f;
      }
    }
    for (int64_t i = 0; i < static_cast<int64_t>(h2) * w2; ++i) sm[i] /= count[i];
    float* dst = out.data.data() + static_cast<int64_t>(ch) * h * w;
    for (int y = 0; y < h; ++y) {
      int ty = std::min(h2 - 1, y * h2 / h);
      for (int xx = 0; xx < w; ++xx)
        dst[y * w + xx] = sm[ty * w2 + std::min(w2 - 1, xx * w2 / w)];
    }
  }
  return out;
}

// Block-DCT quantization, jpeg-like. Orthonormal 8x8 DCT-II basis.
struct DctBasis {
  float b[8][8];
  DctBasis() {
    for (int u = 0; u < 8; ++u) {
      double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int y = 0; y < 8; ++y)
        b[u][y] = static_cast<float>(a * std::cos((2 * y + 1) * u * 3.141592653589793 / 16.0));
    }
  }
};

Tensor jpeg_like(const Tensor& x, float quant) {
  static const DctBasis dct;
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  Tensor out = x;
  for (int ch = 0; ch < c; ++ch) {
    float* plane = out.data.data() + static_cast<int64_t>(ch) * h * w;
    for (int by = 0; by + 8 <= h; by += 8)
      for (int bx = 0; bx + 8 <= w; bx += 8) {
        float blk[8][8], coef[8][8], tmp[8][8];
        for (int y = 0; y < 8; ++y)
          for (int xx = 0; xx < 8; ++xx) blk[y][xx] = plane[(by + y) * w + bx + xx] - 0.5f;
        // coef = B * blk * B^T
        for (int u = 0; u < 8; ++u)
          for (int xx = 0; xx < 8; ++xx) {
            float acc = 0;
            for (int y = 0; y < 8; ++y) acc += dct.b[u][y] * blk[y][xx];
            tmp[u][xx] = acc;
          }
        for (int u = 0; u < 8; ++u)
          for (int v = 0; v < 8; ++v) {
            float acc = 0;
            for (int xx = 0; xx < 8; ++xx) acc += tmp[u][xx] * dct.b[v][xx];
            float step = quant * (1.0f + 0.5f * (u + v));
            coef[u][v] = std::round(acc / step) * step;
          }
        // blk = B^T * coef * B
        for (int y = 0; y < 8; ++y)
          for (int v = 0; v < 8; ++v) {
            float acc = 0;
            for (int u = 0; u < 8; ++u) acc += dct.b[u][y] * coef[u][v];
            tmp[y][v] = acc;
          }
        for (int y = 0; y < 8; ++y)
          for (int xx = 0; xx < 8; ++xx) {
            float acc = 0;
            for (int v = 0; v < 8; ++v) acc += tmp[y][v] * dct.b[v][xx];
            plane[(by + y) * w + bx + xx] = acc + 0.5f;
          }
      }
  }
  return img::clamp01(std::move(out));
}

Tensor spatter(const Tensor& x, int count, float alpha, Rng& rng) {
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  Tensor out = x;
  for (int blob = 0; blob < count; ++blob) {
    float cy = rng.uniform(0.0f, static_cast<float>(h));
    float cx = rng.uniform(0.0f, static_cast<float>(w));
    float r = rng.uniform(1.5f, 3.5f);
    float color = rng.uniform() < 0.5f ? 0.08f : 0.92f;
    const int ir = static_cast<int>(std::ceil(r)) + 1;
    for (int y = std::max(0, static_cast<int>(cy) - ir);
         y < std::min(h, static_cast<int>(cy) + ir + 1); ++y)
      for (int xx = std::max(0, static_cast<int>(cx) - ir);
           xx < std::min(w, static_cast<int>(cx) + ir + 1); ++xx) {
        float d = std::sqrt((y - cy) * (y - cy) + (xx - cx) * (xx - cx));
        float cov = std::clamp(r - d + 0.5f, 0.0f, 1.0f) * alpha;
        if (cov <= 0) continue;
        for (int ch = 0; ch < c; ++ch) {
          float& px = out.data[static_cast<int64_t>(ch) * h * w + y * w + xx];
          px = px * (1 - cov) + color * cov;
        }
      }
  }
  return out;
}

}  // namespace

const std::vector<CorruptionKind>& seen_kinds() {
  static const std::vector<CorruptionKind> kinds = {
      CorruptionKind::GaussianNoise, CorruptionKind::ShotNoise,
      CorruptionKind::ImpulseNoise,  CorruptionKind::DefocusBlur,
      CorruptionKind::MotionBlur,    CorruptionKind::ZoomBlur,
      CorruptionKind::Fog,           CorruptionKind::BrightnessShift,
      CorruptionKind::ContrastShift, CorruptionKind::Elastic,
      CorruptionKind::Pixelate,      CorruptionKind::JpegLike};
  return kinds;
}

const std::vector<CorruptionKind>& unseen_kinds() {
  static const std::vector<CorruptionKind> kinds = {
      CorruptionKind::SpeckleNoise, CorruptionKind::GaussianBlur, CorruptionKind::Spatter,
      CorruptionKind::SaturateShift};
  return kinds;
}

const std::vector<CorruptionKind>& all_kinds() {
  static const std::vector<CorruptionKind> kinds = [] {
    std::vector<CorruptionKind> v = seen_kinds();
    const auto& u = unseen_kinds();
    v.insert(v.end(), u.begin(), u.end());
    return v;
  }();
  return kinds;
}

bool is_unseen(CorruptionKind k) {
  const auto& u = unseen_kinds();
  return std::find(u.begin(), u.end(), k) != u.end();
}

std::string kind_name(CorruptionKind k) {
  switch (k) {
    case CorruptionKind::GaussianNoise: return "gaussian-noise";
    case CorruptionKind::ShotNoise: return "shot-noise";
    case CorruptionKind::ImpulseNoise: return "impulse-noise";
    case CorruptionKind::DefocusBlur: return "defocus-blur";
    case CorruptionKind::MotionBlur: return "motion-blur";
    case CorruptionKind::ZoomBlur: return "zoom-blur";
    case CorruptionKind::Fog: return "fog";
    case CorruptionKind::BrightnessShift: return "brightness-shift";
    case CorruptionKind::ContrastShift: return "contrast-shift";
    case CorruptionKind::Elastic: return "elastic";
    case CorruptionKind::Pixelate: return "pixelate";
    case CorruptionKind::JpegLike: return "jpeg";
    case CorruptionKind::SpeckleNoise: return "speckle-noise";
    case CorruptionKind::GaussianBlur: return "gaussian-blur";
    case CorruptionKind::Spatter: return "spatter";
    case CorruptionKind::SaturateShift: return "saturate-shift";
  }
  return "?";
}

std::optional<CorruptionKind> kind_from_name(const std::string& name) {
  for (CorruptionKind k : all_kinds())
    if (kind_name(k) == name) return k;
  return std::nullopt;
}

Tensor ImageBatch::image(int i) const {
  require(i >= 0 && i < n, "ImageBatch::image index out of range");
  Tensor t({c, h, w});
  t.data = data.segment(static_cast<int64_t>(i) * image_size(), image_size());
  return t;
}

void ImageBatch::set_image(int i, const Tensor& t) {
  require(i >= 0 && i < n, "ImageBatch::set_image index out of range");
  require(t.size() == image_size(), "ImageBatch::set_image shape mismatch");
  data.segment(static_cast<int64_t>(i) * image_size(), image_size()) = t.data;
}

ImageBatch ImageBatch::subset(std::span<const int> indices) const {
  ImageBatch out;
  out.n = static_cast<int>(indices.size());
  out.c = c;
  out.h = h;
  out.w = w;
  out.data = Array(static_cast<int64_t>(out.n) * image_size());
  out.labels.resize(out.n);
  for (size_t j = 0; j < indices.size(); ++j) {
    const int i = indices[j];
    require(i >= 0 && i < n, "ImageBatch::subset index out of range");
    out.data.segment(static_cast<int64_t>(j) * image_size(), image_size()) =
        data.segment(static_cast<int64_t>(i) * image_size(), image_size());
    out.labels[j] = labels[i];
  }
  return out;
}

ImageBatch ImageBatch::empty_like(const ImageBatch& proto, int n) {
  ImageBatch out;
  out.n = n;
  out.c = proto.c;
  out.h = proto.h;
  out.w = proto.w;
  out.data = Array::Zero(static_cast<int64_t>(n) * proto.image_size());
  out.labels.assign(n, 0);
  return out;
}

namespace {

// Signed distance functions in pixel units; negative inside.
float shape_sdf(int shape_id, float qx, float qy, float size) {
  switch (shape_id) {
    case 0:  // disk
      return std::sqrt(qx * qx + qy * qy) - size;
    case 1:  // square
      return std::max(std::abs(qx), std::abs(qy)) - 0.8f * size;
    case 2: {  // equilateral triangle, half side 0.95*size
      const float r = 0.95f * size;
      const float k = 1.7320508f;
      float px = std::abs(qx) - r;
      float py = qy + r / k;
      if (px + k * py > 0.0f) {
        float nx = (px - k * py) * 0.5f;
        float ny = (-k * px - py) * 0.5f;
        px = nx;
        py = ny;
      }
      px -= std::clamp(px, -2.0f * r, 0.0f);
      float len = std::sqrt(px * px + py * py);
      return -(py > 0 ? len : -len);
    }
    case 3: {  // plus
      const float b = 0.35f * size;
      float d1 = std::max(std::abs(qx) - size, std::abs(qy) - b);
      float d2 = std::max(std::abs(qx) - b, std::abs(qy) - size);
      return std::min(d1, d2);
    }
    default: {  // ring
      float d = std::sqrt(qx * qx + qy * qy);
      return std::abs(d - 0.72f * size) - 0.30f * size;
    }
  }
}

Tensor render_sample(Rng& rng, int class_id, int classes, int h, int w) {
  const int palettes = 2;
  const int shape_id = (class_id / palettes) % 5;
  const int palette = class_id % palettes;
  (void)classes;

  // textured background
  float bg[3];
  const float base = rng.uniform(0.32f, 0.68f);
  for (float& v : bg) v = std::clamp(base + rng.uniform(-0.05f, 0.05f), 0.05f, 0.95f);
  Array field = low_freq_field(rng, h, w);
  const float tex_amp = rng.uniform(0.03f, 0.09f);

  float color[3];
  if (palette == 0) {  // warm
    color[0] = rng.uniform(0.65f, 0.95f);
    color[1] = rng.uniform(0.15f, 0.45f);
    color[2] = rng.uniform(0.05f, 0.35f);
  } else {  // cool
    color[0] = rng.uniform(0.05f, 0.35f);
    color[1] = rng.uniform(0.25f, 0.55f);
    color[2] = rng.uniform(0.65f, 0.95f);
  }

  const float cy = 0.5f * (h - 1) + rng.uniform(-3.5f, 3.5f);
  const float cx = 0.5f * (w - 1) + rng.uniform(-3.5f, 3.5f);
  const float size = rng.uniform(6.0f, 9.0f);
  const float angle = rng.uniform(0.0f, static_cast<float>(kTwoPi));
  const float ca = std::cos(angle), sa = std::sin(angle);

  Tensor out({3, h, w});
  const int64_t hw = static_cast<int64_t>(h) * w;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float tex = tex_amp * (field[y * w + x] - 0.5f) + rng.normal(0.0f, 0.01f);
      const float py = y - cy, px = x - cx;
      const float qx = ca * px + sa * py;
      const float qy = -sa * px + ca * py;
      const float d = shape_sdf(shape_id, qx, qy, size);
      const float cov = std::clamp(0.5f - d, 0.0f, 1.0f);
      for (int ch = 0; ch < 3; ++ch) {
        float v = bg[ch] + tex + cov * (color[ch] - bg[ch] - tex);
        out.data[ch * hw + y * w + x] = std::clamp(v, 0.0f, 1.0f);
      }
    }
  // per-image saturation jitter: chroma diversity the palettes alone lack
  const float sat = rng.uniform(0.40f, 1.90f);
  Array g = img::luma(out);
  for (int ch = 0; ch < 3; ++ch)
    out.data.segment(ch * hw, hw) = g + sat * (out.data.segment(ch * hw, hw) - g);
  out.data = out.data.max(0.0f).min(1.0f);
  return out;
}

ImageBatch make_split(uint64_t seed, int n, int classes, int h, int w) {
  ImageBatch batch;
  batch.n = n;
  batch.c = 3;
  batch.h = h;
  batch.w = w;
  batch.data = Array(static_cast<int64_t>(n) * 3 * h * w);
  batch.labels.resize(n);
  int i = 0;
  for (int cls = 0; cls < classes; ++cls) {
    const int count = n / classes + (cls < n % classes ? 1 : 0);
    for (int j = 0; j < count; ++j, ++i) {
      Rng rng(Rng::mix(seed, (static_cast<uint64_t>(cls) << 32) | static_cast<uint64_t>(j)));
      batch.set_image(i, render_sample(rng, cls, classes, h, w));
      batch.labels[i] = cls;
    }
  }
  return batch;
}

}  // namespace

Dataset make_dataset(uint64_t seed, int n_train, int n_test, int classes) {
  require(n_train >= 1 && n_test >= 1, "make_dataset: splits must be non-empty");
  require(classes == 10, "make_dataset: the toy dataset defines 10 classes");
  Dataset d;
  d.train = make_split(Rng::mix(seed, 0x7261), n_train, classes, 32, 32);
  d.test = make_split(Rng::mix(seed, 0x7465), n_test, classes, 32, 32);
  return d;
}

Tensor corrupt(const Tensor& image, CorruptionKind kind, int severity, uint64_t seed) {
  require(severity >= 0 && severity <= 5, "corrupt: severity must be in 0..5");
  if (severity == 0) return image;  // identity convention
  const int s = severity - 1;
  Rng rng(Rng::mix(seed, 0xC0 + static_cast<uint64_t>(kind)));

  switch (kind) {
    case CorruptionKind::GaussianNoise: {
      Tensor out = image;
      for (int64_t i = 0; i < out.data.size(); ++i)
        out.data[i] += rng.normal(0.0f, kGaussSigma[s]);
      return img::clamp01(std::move(out));
    }
    case CorruptionKind::ShotNoise: {
      Tensor out = image;
      const float lam = kShotLambda[s];
      for (int64_t i = 0; i < out.data.size(); ++i)
        out.data[i] = rng.poisson(std::max(0.0f, out.data[i]) * lam) / lam;
      return img::clamp01(std::move(out));
    }
    case CorruptionKind::ImpulseNoise: {
      Tensor out = image;
      const float p = kImpulseProb[s];
      const int64_t hw = static_cast<int64_t>(image.shape[1]) * image.shape[2];
      for (int64_t i = 0; i < hw; ++i) {
        if (rng.uniform() < p) {
          const float v = rng.uniform() < 0.5f ? 0.0f : 1.0f;
          for (int ch = 0; ch < image.shape[0]; ++ch) out.data[ch * hw + i] = v;
        }
      }
      return out;
    }
    case CorruptionKind::DefocusBlur:
      return img::clamp01(disk_blur(image, kDefocusRadius[s]));
    case CorruptionKind::MotionBlur:
      return img::clamp01(motion_blur(image, kMotionLen[s], rng));
    case CorruptionKind::ZoomBlur:
      return img::clamp01(zoom_blur(image, kZoomBlurMax[s]));
    case CorruptionKind::Fog: {
      Array field = low_freq_field(rng, image.shape[1], image.shape[2]);
      const float t = kFogT[s];
      Tensor out = image;
      const int64_t hw = field.size();
      for (int ch = 0; ch < image.shape[0]; ++ch)
        for (int64_t i = 0; i < hw; ++i) {
          const float haze = 0.60f + 0.35f * field[i];
          out.data[ch * hw + i] = (1 - t) * out.data[ch * hw + i] + t * haze;
        }
      return img::clamp01(std::move(out));
    }
    case CorruptionKind::BrightnessShift:
      return img::brightness(image, kBrightShift[s]);
    case CorruptionKind::ContrastShift:
      return img::contrast(image, kContrastFactor[s]);
    case CorruptionKind::Elastic:
      return img::clamp01(elastic(image, kElasticAmp[s], rng));
    case CorruptionKind::Pixelate:
      return img::clamp01(pixelate(image, kPixelateFactor[s]));
    case CorruptionKind::JpegLike:
      return jpeg_like(image, kJpegQuant[s]);
    case CorruptionKind::SpeckleNoise: {
      Tensor out = image;
      for (int64_t i = 0; i < out.data.size(); ++i)
        out.data[i] += out.data[i] * rng.normal(0.0f, kSpeckleSigma[s]);
      return img::clamp01(std::move(out));
    }
    case CorruptionKind::GaussianBlur:
      return img::clamp01(img::gaussian_blur(image, kGaussBlurSigma[s]));
    case CorruptionKind::Spatter:
      return img::clamp01(spatter(image, kSpatterCount[s], kSpatterAlpha[s], rng));
    case CorruptionKind::SaturateShift:
      return img::saturate(image, kSaturateFactor[s]);
  }
  throw ContractError("corrupt: unknown corruption kind");
}

std::string scenario_name(Scenario s) { return s == Scenario::NonBlind ? "nonblind" : "blind"; }

std::optional<Scenario> scenario_from_name(const std::string& name) {
  if (name == "nonblind" || name == "non-blind") return Scenario::NonBlind;
  if (name == "blind") return Scenario::Blind;
  return std::nullopt;
}

BatchStream::BatchStream(int dataset_size, int batch_size, uint64_t seed)
    : n_(dataset_size), batch_size_(batch_size), seed_(seed) {
  require(dataset_size >= 1 && batch_size >= 1, "BatchStream: sizes must be positive");
}

int BatchStream::batches_per_epoch() const { return (n_ + batch_size_ - 1) / batch_size_; }

std::vector<int> BatchStream::batch_indices(int epoch, int batch) const {
  std::vector<int> order(n_);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::mix(seed_, 0xE90C + static_cast<uint64_t>(epoch)));
  for (int i = n_ - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
  const int lo = batch * batch_size_;
  const int hi = std::min(n_, lo + batch_size_);
  require(lo < n_, "BatchStream: batch index out of range");
  return std::vector<int>(order.begin() + lo, order.begin() + hi);
}

ImageBatch scenario_batch(const ImageBatch& base, std::span<const int> indices,
                          Scenario scenario, const std::vector<std::string>& mix_ops,
                          uint64_t seed, int epoch, int batch_index) {
  ImageBatch out = base.subset(indices);
  Rng rng(Rng::mix(seed, (static_cast<uint64_t>(epoch) << 24) ^
                             static_cast<uint64_t>(batch_index) ^ 0x5C37A110ULL));
  if (scenario == Scenario::NonBlind) {
    const auto& seen = seen_kinds();
    const int options = static_cast<int>(seen.size()) * 5 + 1;
    const int pick = rng.uniform_int(options);
    if (pick > 0) {
      const CorruptionKind kind = seen[(pick - 1) / 5];
      const int severity = (pick - 1) % 5 + 1;
      for (int i = 0; i < out.n; ++i)
        out.set_image(i, corrupt(out.image(i), kind, severity, rng.next_u64()));
    }
  } else {
    const auto& ops = mix_ops.empty() ? mix_ops_normal() : mix_ops;
    for (int i = 0; i < out.n; ++i)
      out.set_image(i, mix_augment(out.image(i), rng.next_u64(), ops));
  }
  return out;
}

}  // namespace dyntta::corrupt
