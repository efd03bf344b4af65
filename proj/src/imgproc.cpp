#include "dyntta/imgproc.hpp"

#include <algorithm>
#include <cmath>

namespace dyntta::img {

namespace {
constexpr float kPi = 3.14159265358979323846f;

// FCC NTSC RGB->YIQ and its inverse, computed from the forward matrix.
constexpr double kToYiq[9] = {0.299,     0.587,     0.114,      //
                              0.595716,  -0.274453, -0.321263,  //
                              0.211456,  -0.522591, 0.311135};
constexpr double kFromYiq[9] = {1.0, 0.9562957197589422,  0.6210244164652609,   //
                                1.0, -0.2721220993185104, -0.6473805968256950,  //
                                1.0, -1.1069890167364901, 1.7046149983646584};
}  // namespace

Affine Affine::rotate_deg(float degrees) {
  float th = degrees * kPi / 180.0f;
  float c = std::cos(th), s = std::sin(th);
  return {c, s, -s, c, 0, 0};
}

Affine Affine::zoom(float factor) {
  float inv = 1.0f / factor;
  return {inv, 0, 0, inv, 0, 0};
}

Affine Affine::shear_x(float s) { return {1, s, 0, 1, 0, 0}; }
Affine Affine::shear_y(float s) { return {1, 0, s, 1, 0, 0}; }
Affine Affine::translate(float dx, float dy) { return {1, 0, 0, 1, -dx, -dy}; }

float sample_zero(const float* plane, int h, int w, float sy, float sx) {
  int y0 = static_cast<int>(std::floor(sy));
  int x0 = static_cast<int>(std::floor(sx));
  float dy = sy - y0, dx = sx - x0;
  float acc = 0.0f;
  for (int j = 0; j < 2; ++j) {
    int y = y0 + j;
    if (y < 0 || y >= h) continue;
    float wy = j ? dy : 1.0f - dy;
    for (int i = 0; i < 2; ++i) {
      int x = x0 + i;
      if (x < 0 || x >= w) continue;
      float wx = i ? dx : 1.0f - dx;
      acc += wy * wx * plane[y * w + x];
    }
  }
  return acc;
}

Tensor warp(const Tensor& x, const Affine& a) {
  require(x.shape.size() == 3, "warp expects a {C,H,W} tensor");
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  const float cy = 0.5f * (h - 1), cx = 0.5f * (w - 1);
  Tensor out(x.shape);
  for (int ch = 0; ch < c; ++ch) {
    const float* src = x.data.data() + static_cast<int64_t>(ch) * h * w;
    float* dst = out.data.data() + static_cast<int64_t>(ch) * h * w;
    for (int y = 0; y < h; ++y) {
      float py = y - cy;
      for (int xx = 0; xx < w; ++xx) {
        float px = xx - cx;
        float sx = a.m00 * px + a.m01 * py + cx + a.tx;
        float sy = a.m10 * px + a.m11 * py + cy + a.ty;
        dst[y * w + xx] = sample_zero(src, h, w, sy, sx);
      }
    }
  }
  return out;
}

Tensor rotate_bilinear(const Tensor& x, float degrees) {
  if (degrees == 0.0f) return x;  // exact identity fast path
  return warp(x, Affine::rotate_deg(degrees));
}

Tensor zoom_bilinear(const Tensor& x, float factor) {
  require(factor > 0.0f, "zoom factor must be positive");
  return warp(x, Affine::zoom(factor));
}

Array luma(const Tensor& x) {
  require(x.shape.size() == 3 && x.shape[0] == 3, "luma expects a {3,H,W} tensor");
  const int64_t hw = static_cast<int64_t>(x.shape[1]) * x.shape[2];
  return 0.299f * x.data.segment(0, hw) + 0.587f * x.data.segment(hw, hw) +
         0.114f * x.data.segment(2 * hw, hw);
}

Tensor gaussian3(const Tensor& x) {
  require(x.shape.size() == 3, "gaussian3 expects a {C,H,W} tensor");
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  static const float k[3] = {0.25f, 0.5f, 0.25f};
  Tensor out(x.shape);
  Array tmp(static_cast<int64_t>(h) * w);
  for (int ch = 0; ch < c; ++ch) {
    const float* src = x.data.data() + static_cast<int64_t>(ch) * h * w;
    float* dst = out.data.data() + static_cast<int64_t>(ch) * h * w;
    // horizontal then vertical, zero padding
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        float acc = 0;
        for (int i = -1; i <= 1; ++i) {
          int xs = xx + i;
          if (xs >= 0 && xs < w) acc += k[i + 1] * src[y * w + xs];
        }
        tmp[y * w + xx] = acc;
      }
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        float acc = 0;
        for (int i = -1; i <= 1; ++i) {
          int ys = y + i;
          if (ys >= 0 && ys < h) acc += k[i + 1] * tmp[ys * w + xx];
        }
        dst[y * w + xx] = acc;
      }
  }
  return out;
}

Tensor gaussian_blur(const Tensor& x, float sigma) {
  require(x.shape.size() == 3, "gaussian_blur expects a {C,H,W} tensor");
  if (sigma <= 0.0f) return x;
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0f * sigma)));
  std::vector<float> k(2 * radius + 1);
  float sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5f * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (float& v : k) v /= sum;

  auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  Tensor out(x.shape);
  Array tmp(static_cast<int64_t>(h) * w);
  for (int ch = 0; ch < c; ++ch) {
    const float* src = x.data.data() + static_cast<int64_t>(ch) * h * w;
    float* dst = out.data.data() + static_cast<int64_t>(ch) * h * w;
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        float acc = 0;
        for (int i = -radius; i <= radius; ++i)
          acc += k[i + radius] * src[y * w + clampi(xx + i, 0, w - 1)];
        tmp[y * w + xx] = acc;
      }
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        float acc = 0;
        for (int i = -radius; i <= radius; ++i)
          acc += k[i + radius] * tmp[clampi(y + i, 0, h - 1) * w + xx];
        dst[y * w + xx] = acc;
      }
  }
  return out;
}

Tensor autocontrast(const Tensor& x, std::vector<AutoContrastChannel>* ctx) {
  require(x.shape.size() == 3, "autocontrast expects a {C,H,W} tensor");
  const int c = x.shape[0];
  const int64_t hw = static_cast<int64_t>(x.shape[1]) * x.shape[2];
  Tensor out(x.shape);
  if (ctx) ctx->assign(c, {});
  for (int ch = 0; ch < c; ++ch) {
    const float* src = x.data.data() + ch * hw;
    float* dst = out.data.data() + ch * hw;
    int64_t imin = 0, imax = 0;
    for (int64_t i = 1; i < hw; ++i) {
      if (src[i] < src[imin]) imin = i;
      if (src[i] > src[imax]) imax = i;
    }
    const float lo = src[imin], hi = src[imax];
    AutoContrastChannel cc;
    if (hi - lo < 1e-12f) {
      cc.degenerate = true;
      std::copy(src, src + hw, dst);
    } else {
      cc.argmin = imin;
      cc.argmax = imax;
      cc.lo = lo;
      cc.scale = 1.0f / (hi - lo);
      for (int64_t i = 0; i < hw; ++i) dst[i] = (src[i] - lo) * cc.scale;
    }
    if (ctx) (*ctx)[ch] = cc;
  }
  return out;
}

Tensor equalize(const Tensor& x) {
  require(x.shape.size() == 3, "equalize expects a {C,H,W} tensor");
  const int c = x.shape[0];
  const int64_t hw = static_cast<int64_t>(x.shape[1]) * x.shape[2];
  Tensor out(x.shape);
  for (int ch = 0; ch < c; ++ch) {
    const float* src = x.data.data() + ch * hw;
    float* dst = out.data.data() + ch * hw;
    int hist[256] = {0};
    for (int64_t i = 0; i < hw; ++i) {
      int v = static_cast<int>(std::lround(std::clamp(src[i], 0.0f, 1.0f) * 255.0f));
      ++hist[v];
    }
    int64_t cdf[256];
    int64_t acc = 0;
    for (int v = 0; v < 256; ++v) {
      acc += hist[v];
      cdf[v] = acc;
    }
    int64_t cdf_min = 0;
    for (int v = 0; v < 256; ++v)
      if (cdf[v] > 0) {
        cdf_min = cdf[v];
        break;
      }
    float lut[256];
    if (cdf_min == hw) {
      for (int v = 0; v < 256; ++v) lut[v] = v / 255.0f;  // single-bin channel
    } else {
      const double denom = static_cast<double>(hw - cdf_min);
      for (int v = 0; v < 256; ++v) {
        double e = (cdf[v] - cdf_min) / denom;
        lut[v] = static_cast<float>(std::clamp(e, 0.0, 1.0));
      }
    }
    for (int64_t i = 0; i < hw; ++i) {
      int v = static_cast<int>(std::lround(std::clamp(src[i], 0.0f, 1.0f) * 255.0f));
      dst[i] = lut[v];
    }
  }
  return out;
}

Tensor posterize(const Tensor& x, int bits) {
  require(bits >= 1 && bits <= 8, "posterize bits must be in 1..8");
  const float levels = static_cast<float>((1 << bits) - 1);
  Tensor out(x.shape);
  out.data = (x.data.max(0.0f).min(1.0f) * levels + 0.5f).floor() / levels;
  return out;
}

Tensor solarize(const Tensor& x, float threshold) {
  Tensor out(x.shape);
  out.data = (x.data >= threshold).select(1.0f - x.data, x.data);
  return out;
}

Tensor invert(const Tensor& x) {
  Tensor out(x.shape);
  out.data = 1.0f - x.data;
  return out;
}

Tensor saturate(const Tensor& x, float factor) {
  Array g = luma(x);
  const int64_t hw = g.size();
  Tensor out(x.shape);
  for (int ch = 0; ch < 3; ++ch)
    out.data.segment(ch * hw, hw) = g + factor * (x.data.segment(ch * hw, hw) - g);
  return clamp01(std::move(out));
}

Tensor contrast(const Tensor& x, float factor) {
  Array g = luma(x);
  const float mean = g.mean();
  Tensor out(x.shape);
  out.data = mean + factor * (x.data - mean);
  return clamp01(std::move(out));
}

Tensor brightness(const Tensor& x, float shift) {
  Tensor out(x.shape);
  out.data = x.data + shift;
  return clamp01(std::move(out));
}

Tensor gamma(const Tensor& x, float exponent) {
  Tensor out(x.shape);
  out.data = x.data.max(1e-6f).pow(exponent);
  return clamp01(std::move(out));
}

void hue_matrix(double radians, float out[9]) {
  const double c = std::cos(radians), s = std::sin(radians);
  // R = diag-block rotation of the (I,Q) plane
  const double rot[9] = {1, 0, 0, 0, c, -s, 0, s, c};
  double tmp[9];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0;
      for (int k = 0; k < 3; ++k) acc += rot[i * 3 + k] * kToYiq[k * 3 + j];
      tmp[i * 3 + j] = acc;
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0;
      for (int k = 0; k < 3; ++k) acc += kFromYiq[i * 3 + k] * tmp[k * 3 + j];
      out[i * 3 + j] = static_cast<float>(acc);
    }
}

void hue_matrix_derivative(double radians, float out[9]) {
  const double c = std::cos(radians), s = std::sin(radians);
  const double rot[9] = {0, 0, 0, 0, -s, -c, 0, c, -s};
  double tmp[9];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0;
      for (int k = 0; k < 3; ++k) acc += rot[i * 3 + k] * kToYiq[k * 3 + j];
      tmp[i * 3 + j] = acc;
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0;
      for (int k = 0; k < 3; ++k) acc += kFromYiq[i * 3 + k] * tmp[k * 3 + j];
      out[i * 3 + j] = static_cast<float>(acc);
    }
}

Tensor hue_shift(const Tensor& x, float radians) {
  require(x.shape.size() == 3 && x.shape[0] == 3, "hue_shift expects a {3,H,W} tensor");
  float m[9];
  hue_matrix(radians, m);
  const int64_t hw = static_cast<int64_t>(x.shape[1]) * x.shape[2];
  Tensor out(x.shape);
  for (int64_t i = 0; i < hw; ++i) {
    float r = x.data[i], g = x.data[hw + i], b = x.data[2 * hw + i];
    out.data[i] = m[0] * r + m[1] * g + m[2] * b;
    out.data[hw + i] = m[3] * r + m[4] * g + m[5] * b;
    out.data[2 * hw + i] = m[6] * r + m[7] * g + m[8] * b;
  }
  return clamp01(std::move(out));
}

Tensor clamp01(Tensor x) {
  x.data = x.data.max(0.0f).min(1.0f);
  return x;
}

}  // namespace dyntta::img
