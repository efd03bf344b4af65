#include "dyntta/ops.hpp"

#include "dyntta/fft.hpp"
#include "dyntta/imgproc.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

namespace dyntta::ops {

namespace {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;
using VecMap = Eigen::Map<Eigen::VectorXf>;
using CVecMap = Eigen::Map<const Eigen::VectorXf>;

void require_same_shape(Tape& t, Var a, Var b, const char* op) {
  require(t.shape(a) == t.shape(b), std::string(op) + ": shape mismatch " +
                                        shape_str(t.shape(a)) + " vs " + shape_str(t.shape(b)));
}

double dsum(const Array& a) { return a.cast<double>().sum(); }

}  // namespace

Var add(Tape& t, Var a, Var b) {
  require_same_shape(t, a, b, "add");
  Tensor out(t.shape(a), t.value(a).data + t.value(b).data);
  return t.emit("add", {a, b}, std::move(out), [a, b](Tape& t, Var o) {
    const Array& g = t.grad(o);
    if (t.needs_grad(a)) t.grad(a) += g;
    if (t.needs_grad(b)) t.grad(b) += g;
  });
}

Var sub(Tape& t, Var a, Var b) {
  require_same_shape(t, a, b, "sub");
  Tensor out(t.shape(a), t.value(a).data - t.value(b).data);
  return t.emit("sub", {a, b}, std::move(out), [a, b](Tape& t, Var o) {
    const Array& g = t.grad(o);
    if (t.needs_grad(a)) t.grad(a) += g;
    if (t.needs_grad(b)) t.grad(b) -= g;
  });
}

Var mul(Tape& t, Var a, Var b) {
  require_same_shape(t, a, b, "mul");
  Tensor out(t.shape(a), t.value(a).data * t.value(b).data);
  return t.emit("mul", {a, b}, std::move(out), [a, b](Tape& t, Var o) {
    const Array& g = t.grad(o);
    if (t.needs_grad(a)) t.grad(a) += g * t.value(b).data;
    if (t.needs_grad(b)) t.grad(b) += g * t.value(a).data;
  });
}

Var affine(Tape& t, Var x, float scale, float offset) {
  Tensor out(t.shape(x), scale * t.value(x).data + offset);
  return t.emit("affine", {x}, std::move(out), [x, scale](Tape& t, Var o) {
    if (t.needs_grad(x)) t.grad(x) += scale * t.grad(o);
  });
}

Var add_scalar(Tape& t, Var x, Var s) {
  require(t.size(s) == 1, "add_scalar: s must be a scalar");
  Tensor out(t.shape(x), t.value(x).data + t.value(s).data[0]);
  return t.emit("add_scalar", {x, s}, std::move(out), [x, s](Tape& t, Var o) {
    const Array& g = t.grad(o);
    if (t.needs_grad(x)) t.grad(x) += g;
    if (t.needs_grad(s)) t.grad(s)[0] += static_cast<float>(dsum(g));
  });
}

Var mul_scalar(Tape& t, Var x, Var s) {
  require(t.size(s) == 1, "mul_scalar: s must be a scalar");
  Tensor out(t.shape(x), t.value(x).data * t.value(s).data[0]);
  return t.emit("mul_scalar", {x, s}, std::move(out), [x, s](Tape& t, Var o) {
    const Array& g = t.grad(o);
    if (t.needs_grad(x)) t.grad(x) += t.value(s).data[0] * g;
    if (t.needs_grad(s))
      t.grad(s)[0] += static_cast<float>((g.cast<double>() * t.value(x).data.cast<double>()).sum());
  });
}

Var relu(Tape& t, Var x) {
  Tensor out(t.shape(x), t.value(x).data.max(0.0f));
  return t.emit("relu", {x}, std::move(out), [x](Tape& t, Var o) {
    if (t.needs_grad(x))
      t.grad(x) += (t.value(x).data > 0.0f).select(t.grad(o), Array::Zero(t.size(x)));
  });
}

Var tanh_map(Tape& t, Var x) {
  Tensor out(t.shape(x), t.value(x).data.tanh());
  return t.emit("tanh", {x}, std::move(out), [x](Tape& t, Var o) {
    if (t.needs_grad(x)) t.grad(x) += t.grad(o) * (1.0f - t.value(o).data.square());
  });
}

Var sigmoid_map(Tape& t, Var x) {
  Tensor out(t.shape(x), 0.5f * ((0.5f * t.value(x).data).tanh() + 1.0f));
  return t.emit("sigmoid", {x}, std::move(out), [x](Tape& t, Var o) {
    const Array& y = t.value(o).data;
    if (t.needs_grad(x)) t.grad(x) += t.grad(o) * y * (1.0f - y);
  });
}

Var clamp01(Tape& t, Var x) {
  Tensor out(t.shape(x), t.value(x).data.max(0.0f).min(1.0f));
  return t.emit("clamp01", {x}, std::move(out), [x](Tape& t, Var o) {
    if (!t.needs_grad(x)) return;
    const Array& v = t.value(x).data;
    Array mask = ((v >= 0.0f) && (v <= 1.0f)).cast<float>();
    t.grad(x) += mask * t.grad(o);
  });
}

Var softmax(Tape& t, Var x) {
  const int64_t k = t.size(x);
  require(k >= 1, "softmax: input must have at least one entry");
  const Array& v = t.value(x).data;
  check_finite(v, "softmax input");
  const float mx = v.maxCoeff();
  Array e = (v - mx).exp();
  const double sum = dsum(e);
  // Floor at the smallest normal float: keeps outputs strictly positive even
  // when exp underflows, with a negligible (<1e-36) effect on the sum.
  Tensor out(t.shape(x), (e / static_cast<float>(sum)).max(std::numeric_limits<float>::min()));
  return t.emit("softmax", {x}, std::move(out), [x](Tape& t, Var o) {
    if (!t.needs_grad(x)) return;
    const Array& y = t.value(o).data;
    const Array& g = t.grad(o);
    const float dot = static_cast<float>((g.cast<double>() * y.cast<double>()).sum());
    t.grad(x) += y * (g - dot);
  });
}

Var cross_entropy(Tape& t, Var logits, int label) {
  const int64_t c = t.size(logits);
  require(label >= 0 && label < c, "cross_entropy: label out of range");
  const Array& v = t.value(logits).data;
  const float mx = v.maxCoeff();
  const double lse = std::log((v - mx).cast<double>().exp().sum());
  const float loss = static_cast<float>(lse - (v[label] - mx));
  return t.emit("cross_entropy", {logits}, Tensor::scalar(loss),
                [logits, label](Tape& t, Var o) {
                  if (!t.needs_grad(logits)) return;
                  const Array& v = t.value(logits).data;
                  const float mx = v.maxCoeff();
                  Array e = (v - mx).exp();
                  Array p = e / static_cast<float>(dsum(e));
                  p[label] -= 1.0f;
                  t.grad(logits) += t.grad(o)[0] * p;
                });
}

Var linear(Tape& t, Var x, Var w, Var b) {
  require(t.shape(w).size() == 2, "linear: weight must be 2-D");
  const int out_dim = t.shape(w)[0], in_dim = t.shape(w)[1];
  require(t.size(x) == in_dim, "linear: input size mismatch");
  require(t.size(b) == out_dim, "linear: bias size mismatch");

  CMapRM wm(t.value(w).data.data(), out_dim, in_dim);
  CVecMap xv(t.value(x).data.data(), in_dim);
  Tensor out({out_dim});
  VecMap ov(out.data.data(), out_dim);
  ov.noalias() = wm * xv;
  out.data += t.value(b).data;

  return t.emit("linear", {x, w, b}, std::move(out), [x, w, b](Tape& t, Var o) {
    const int out_dim = t.shape(w)[0], in_dim = t.shape(w)[1];
    CVecMap g(t.grad(o).data(), out_dim);
    if (t.needs_grad(x)) {
      CMapRM wm(t.value(w).data.data(), out_dim, in_dim);
      VecMap gx(t.grad(x).data(), in_dim);
      gx.noalias() += wm.transpose() * g;
    }
    if (t.needs_grad(w)) {
      CVecMap xv(t.value(x).data.data(), in_dim);
      MapRM gw(t.grad(w).data(), out_dim, in_dim);
      gw.noalias() += g * xv.transpose();
    }
    if (t.needs_grad(b)) t.grad(b) += t.grad(o);
  });
}

namespace {

void im2col(const float* x, int c, int h, int w, int k, float* cols) {
  const int pad = k / 2;
  const int64_t hw = static_cast<int64_t>(h) * w;
  int64_t r = 0;
  for (int ch = 0; ch < c; ++ch)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx, ++r) {
        float* dst = cols + r * hw;
        const float* src = x + static_cast<int64_t>(ch) * hw;
        for (int y = 0; y < h; ++y) {
          int sy = y + ky - pad;
          for (int xx = 0; xx < w; ++xx) {
            int sx = xx + kx - pad;
            dst[y * w + xx] =
                (sy >= 0 && sy < h && sx >= 0 && sx < w) ? src[sy * w + sx] : 0.0f;
          }
        }
      }
}

void col2im_add(const float* cols, int c, int h, int w, int k, float* gx) {
  const int pad = k / 2;
  const int64_t hw = static_cast<int64_t>(h) * w;
  int64_t r = 0;
  for (int ch = 0; ch < c; ++ch)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx, ++r) {
        const float* src = cols + r * hw;
        float* dst = gx + static_cast<int64_t>(ch) * hw;
        for (int y = 0; y < h; ++y) {
          int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          for (int xx = 0; xx < w; ++xx) {
            int sx = xx + kx - pad;
            if (sx >= 0 && sx < w) dst[sy * w + sx] += src[y * w + xx];
          }
        }
      }
}

}  // namespace

Var conv2d(Tape& t, Var x, Var w, Var b) {
  require(t.shape(x).size() == 3, "conv2d: input must be {C,H,W}");
  require(t.shape(w).size() == 4, "conv2d: weight must be {OC,C,K,K}");
  const int c = t.shape(x)[0], h = t.shape(x)[1], wd = t.shape(x)[2];
  const int oc = t.shape(w)[0], k = t.shape(w)[2];
  require(t.shape(w)[1] == c, "conv2d: channel mismatch");
  require(t.shape(w)[3] == k && (k % 2) == 1, "conv2d: kernel must be square with odd size");
  require(t.size(b) == oc, "conv2d: bias size mismatch");

  const int64_t hw = static_cast<int64_t>(h) * wd;
  const int ckk = c * k * k;
  auto cols = std::make_shared<Array>(static_cast<int64_t>(ckk) * hw);
  im2col(t.value(x).data.data(), c, h, wd, k, cols->data());

  Tensor out({oc, h, wd});
  {
    CMapRM wm(t.value(w).data.data(), oc, ckk);
    CMapRM cm(cols->data(), ckk, hw);
    MapRM om(out.data.data(), oc, hw);
    om.noalias() = wm * cm;
    for (int o = 0; o < oc; ++o) om.row(o).array() += t.value(b).data[o];
  }

  return t.emit("conv2d", {x, w, b}, std::move(out), [x, w, b, cols](Tape& t, Var o) {
    const int c = t.shape(x)[0], h = t.shape(x)[1], wd = t.shape(x)[2];
    const int oc = t.shape(w)[0], k = t.shape(w)[2];
    const int64_t hw = static_cast<int64_t>(h) * wd;
    const int ckk = c * k * k;
    CMapRM g(t.grad(o).data(), oc, hw);
    if (t.needs_grad(w)) {
      CMapRM cm(cols->data(), ckk, hw);
      MapRM gw(t.grad(w).data(), oc, ckk);
      gw.noalias() += g * cm.transpose();
    }
    if (t.needs_grad(b)) {
      Array& gb = t.grad(b);
      for (int och = 0; och < oc; ++och) gb[och] += g.row(och).sum();
    }
    if (t.needs_grad(x)) {
      CMapRM wm(t.value(w).data.data(), oc, ckk);
      MatRM gcols(ckk, hw);
      gcols.noalias() = wm.transpose() * g;
      col2im_add(gcols.data(), c, h, wd, k, t.grad(x).data());
    }
  });
}

Var maxpool2(Tape& t, Var x) {
  require(t.shape(x).size() == 3, "maxpool2: input must be {C,H,W}");
  const int c = t.shape(x)[0], h = t.shape(x)[1], w = t.shape(x)[2];
  require(h % 2 == 0 && w % 2 == 0, "maxpool2: H and W must be even");
  const int oh = h / 2, ow = w / 2;
  Tensor out({c, oh, ow});
  auto argmax = std::make_shared<std::vector<int32_t>>(static_cast<size_t>(c) * oh * ow);
  const float* src = t.value(x).data.data();
  float* dst = out.data.data();
  int64_t oi = 0;
  for (int ch = 0; ch < c; ++ch) {
    const int64_t base = static_cast<int64_t>(ch) * h * w;
    for (int y = 0; y < oh; ++y)
      for (int xx = 0; xx < ow; ++xx, ++oi) {
        int32_t best = static_cast<int32_t>(base + (2 * y) * w + 2 * xx);
        float bv = src[best];
        const int32_t cand[3] = {static_cast<int32_t>(base + (2 * y) * w + 2 * xx + 1),
                                 static_cast<int32_t>(base + (2 * y + 1) * w + 2 * xx),
                                 static_cast<int32_t>(base + (2 * y + 1) * w + 2 * xx + 1)};
        for (int32_t ci : cand)
          if (src[ci] > bv) {
            bv = src[ci];
            best = ci;
          }
        dst[oi] = bv;
        (*argmax)[oi] = best;
      }
  }
  return t.emit("maxpool2", {x}, std::move(out), [x, argmax](Tape& t, Var o) {
    if (!t.needs_grad(x)) return;
    Array& gx = t.grad(x);
    const Array& g = t.grad(o);
    for (int64_t i = 0; i < g.size(); ++i) gx[(*argmax)[i]] += g[i];
  });
}

Var global_avg_pool(Tape& t, Var x) {
  require(t.shape(x).size() == 3, "global_avg_pool: input must be {C,H,W}");
  const int c = t.shape(x)[0];
  const int64_t hw = static_cast<int64_t>(t.shape(x)[1]) * t.shape(x)[2];
  Tensor out({c});
  for (int ch = 0; ch < c; ++ch)
    out.data[ch] = static_cast<float>(t.value(x).data.segment(ch * hw, hw).cast<double>().mean());
  return t.emit("global_avg_pool", {x}, std::move(out), [x](Tape& t, Var o) {
    if (!t.needs_grad(x)) return;
    const int c = t.shape(x)[0];
    const int64_t hw = t.size(x) / c;
    const float inv = 1.0f / static_cast<float>(hw);
    Array& gx = t.grad(x);
    for (int ch = 0; ch < c; ++ch) gx.segment(ch * hw, hw) += t.grad(o)[ch] * inv;
  });
}

Var slice(Tape& t, Var x, int offset, int len) {
  require(offset >= 0 && len >= 1 && offset + len <= t.size(x), "slice: range out of bounds");
  Tensor out({len}, t.value(x).data.segment(offset, len));
  return t.emit("slice", {x}, std::move(out), [x, offset, len](Tape& t, Var o) {
    if (t.needs_grad(x)) t.grad(x).segment(offset, len) += t.grad(o);
  });
}

Var project(Tape& t, Var x, Array r) {
  require(r.size() == t.size(x), "project: projection length mismatch");
  const double v = (t.value(x).data.cast<double>() * r.cast<double>()).sum();
  Tensor out = Tensor::scalar(static_cast<float>(v));
  auto rp = std::make_shared<Array>(std::move(r));
  return t.emit("project", {x}, std::move(out), [x, rp](Tape& t, Var o) {
    if (t.needs_grad(x)) t.grad(x) += t.grad(o)[0] * (*rp);
  });
}

Var mean_all(Tape& t, Var x) {
  Tensor out = Tensor::scalar(static_cast<float>(t.value(x).data.cast<double>().mean()));
  return t.emit("mean_all", {x}, std::move(out), [x](Tape& t, Var o) {
    if (t.needs_grad(x)) t.grad(x) += t.grad(o)[0] / static_cast<float>(t.size(x));
  });
}

Var grayscale(Tape& t, Var x) {
  require(t.shape(x).size() == 3 && t.shape(x)[0] == 3, "grayscale: input must be {3,H,W}");
  const int h = t.shape(x)[1], w = t.shape(x)[2];
  Tensor out({1, h, w}, img::luma(t.value(x)));
  return t.emit("grayscale", {x}, std::move(out), [x](Tape& t, Var o) {
    if (!t.needs_grad(x)) return;
    const Array& g = t.grad(o);
    const int64_t hw = g.size();
    Array& gx = t.grad(x);
    gx.segment(0, hw) += 0.299f * g;
    gx.segment(hw, hw) += 0.587f * g;
    gx.segment(2 * hw, hw) += 0.114f * g;
  });
}

Var replicate_channels(Tape& t, Var x, int channels) {
  require(t.shape(x).size() == 3 && t.shape(x)[0] == 1, "replicate_channels: input must be {1,H,W}");
  const int h = t.shape(x)[1], w = t.shape(x)[2];
  const int64_t hw = static_cast<int64_t>(h) * w;
  Tensor out({channels, h, w});
  for (int ch = 0; ch < channels; ++ch) out.data.segment(ch * hw, hw) = t.value(x).data;
  return t.emit("replicate_channels", {x}, std::move(out), [x, channels](Tape& t, Var o) {
    if (!t.needs_grad(x)) return;
    const int64_t hw = t.size(x);
    Array& gx = t.grad(x);
    for (int ch = 0; ch < channels; ++ch) gx += t.grad(o).segment(ch * hw, hw);
  });
}

Var broadcast_to(Tape& t, Var s, Shape shape) {
  require(t.size(s) == 1, "broadcast_to: source must be scalar");
  Tensor out = Tensor::full(shape, t.value(s).data[0]);
  return t.emit("broadcast_to", {s}, std::move(out), [s](Tape& t, Var o) {
    if (t.needs_grad(s)) t.grad(s)[0] += static_cast<float>(dsum(t.grad(o)));
  });
}

Var gaussian3(Tape& t, Var x) {
  Tensor out = img::gaussian3(t.value(x));
  return t.emit("gaussian3", {x}, std::move(out), [x](Tape& t, Var o) {
    if (!t.needs_grad(x)) return;
    Tensor g(t.shape(x), t.grad(o));
    t.grad(x) += img::gaussian3(g).data;  // self-adjoint
  });
}

Var fft_filter(Tape& t, Var x, float cutoff, bool low_pass) {
  Tensor out = fft::ideal_filter(t.value(x), cutoff, low_pass);
  return t.emit(low_pass ? "low_pass" : "high_pass", {x}, std::move(out),
                [x, cutoff, low_pass](Tape& t, Var o) {
                  if (!t.needs_grad(x)) return;
                  Tensor g(t.shape(x), t.grad(o));
                  t.grad(x) += fft::ideal_filter(g, cutoff, low_pass).data;  // self-adjoint
                });
}

namespace {

// Shared backward for center-affine bilinear warps. `dcoord` supplies
// (dsx/dparam, dsy/dparam) for each output pixel.
template <typename DCoord>
void warp_backward(Tape& t, Var o, Var x, Var param, const img::Affine& a, DCoord dcoord) {
  const int c = t.shape(x)[0], h = t.shape(x)[1], w = t.shape(x)[2];
  const float cy = 0.5f * (h - 1), cx = 0.5f * (w - 1);
  const bool need_x = t.needs_grad(x);
  const bool need_p = t.needs_grad(param);
  if (!need_x && !need_p) return;
  const Array& g = t.grad(o);
  const float* src = t.value(x).data.data();
  double gp = 0.0;
  for (int ch = 0; ch < c; ++ch) {
    const int64_t base = static_cast<int64_t>(ch) * h * w;
    for (int y = 0; y < h; ++y) {
      const float py = y - cy;
      for (int xx = 0; xx < w; ++xx) {
        const float gv = g[base + y * w + xx];
        if (gv == 0.0f) continue;
        const float px = xx - cx;
        const float sx = a.m00 * px + a.m01 * py + cx + a.tx;
        const float sy = a.m10 * px + a.m11 * py + cy + a.ty;
        const int x0 = static_cast<int>(std::floor(sx));
        const int y0 = static_cast<int>(std::floor(sy));
        const float dx = sx - x0, dy = sy - y0;
        float v00 = 0, v01 = 0, v10 = 0, v11 = 0;
        const bool y0in = (y0 >= 0 && y0 < h), y1in = (y0 + 1 >= 0 && y0 + 1 < h);
        const bool x0in = (x0 >= 0 && x0 < w), x1in = (x0 + 1 >= 0 && x0 + 1 < w);
        if (y0in && x0in) v00 = src[base + y0 * w + x0];
        if (y0in && x1in) v01 = src[base + y0 * w + x0 + 1];
        if (y1in && x0in) v10 = src[base + (y0 + 1) * w + x0];
        if (y1in && x1in) v11 = src[base + (y0 + 1) * w + x0 + 1];
        if (need_x) {
          Array& gx = t.grad(x);
          if (y0in && x0in) gx[base + y0 * w + x0] += gv * (1 - dy) * (1 - dx);
          if (y0in && x1in) gx[base + y0 * w + x0 + 1] += gv * (1 - dy) * dx;
          if (y1in && x0in) gx[base + (y0 + 1) * w + x0] += gv * dy * (1 - dx);
          if (y1in && x1in) gx[base + (y0 + 1) * w + x0 + 1] += gv * dy * dx;
        }
        if (need_p) {
          const float di_dsx = (1 - dy) * (v01 - v00) + dy * (v11 - v10);
          const float di_dsy = (1 - dx) * (v10 - v00) + dx * (v11 - v01);
          float dsx_dp, dsy_dp;
          dcoord(px, py, dsx_dp, dsy_dp);
          gp += static_cast<double>(gv) * (di_dsx * dsx_dp + di_dsy * dsy_dp);
        }
      }
    }
  }
  if (need_p) t.grad(param)[0] += static_cast<float>(gp);
}

}  // namespace

Var rotate(Tape& t, Var x, Var degrees) {
  require(t.shape(x).size() == 3, "rotate: input must be {C,H,W}");
  require(t.size(degrees) == 1, "rotate: degrees must be scalar");
  const float deg = t.value(degrees).data[0];
  Tensor out = img::rotate_bilinear(t.value(x), deg);
  return t.emit("rotate", {x, degrees}, std::move(out), [x, degrees](Tape& t, Var o) {
    constexpr float kDegToRad = 3.14159265358979323846f / 180.0f;
    const float th = t.value(degrees).data[0] * kDegToRad;
    const float cth = std::cos(th), sth = std::sin(th);
    img::Affine a{cth, sth, -sth, cth, 0, 0};
    warp_backward(t, o, x, degrees, a,
                  [cth, sth](float px, float py, float& dsx, float& dsy) {
                    dsx = (-sth * px + cth * py) * kDegToRad;
                    dsy = (-cth * px - sth * py) * kDegToRad;
                  });
  });
}

Var zoom(Tape& t, Var x, Var magnitude) {
  require(t.shape(x).size() == 3, "zoom: input must be {C,H,W}");
  require(t.size(magnitude) == 1, "zoom: magnitude must be scalar");
  const float f = 1.0f + t.value(magnitude).data[0];
  require(f > 0.05f, "zoom: scale factor must be positive");
  Tensor out = img::zoom_bilinear(t.value(x), f);
  return t.emit("zoom", {x, magnitude}, std::move(out), [x, magnitude](Tape& t, Var o) {
    const float f = 1.0f + t.value(magnitude).data[0];
    img::Affine a = img::Affine::zoom(f);
    const float inv2 = 1.0f / (f * f);
    warp_backward(t, o, x, magnitude, a, [inv2](float px, float py, float& dsx, float& dsy) {
      dsx = -px * inv2;
      dsy = -py * inv2;
    });
  });
}

Var hue_rotate(Tape& t, Var x, Var radians) {
  require(t.shape(x).size() == 3 && t.shape(x)[0] == 3, "hue_rotate: input must be {3,H,W}");
  require(t.size(radians) == 1, "hue_rotate: angle must be scalar");
  float m[9];
  img::hue_matrix(t.value(radians).data[0], m);
  const int64_t hw = static_cast<int64_t>(t.shape(x)[1]) * t.shape(x)[2];
  Tensor out(t.shape(x));
  const Array& v = t.value(x).data;
  for (int64_t i = 0; i < hw; ++i) {
    const float r = v[i], g = v[hw + i], b = v[2 * hw + i];
    out.data[i] = m[0] * r + m[1] * g + m[2] * b;
    out.data[hw + i] = m[3] * r + m[4] * g + m[5] * b;
    out.data[2 * hw + i] = m[6] * r + m[7] * g + m[8] * b;
  }
  return t.emit("hue_rotate", {x, radians}, std::move(out), [x, radians](Tape& t, Var o) {
    const int64_t hw = t.size(x) / 3;
    const Array& g = t.grad(o);
    float m[9];
    img::hue_matrix(t.value(radians).data[0], m);
    if (t.needs_grad(x)) {
      Array& gx = t.grad(x);
      for (int64_t i = 0; i < hw; ++i) {
        const float g0 = g[i], g1 = g[hw + i], g2 = g[2 * hw + i];
        gx[i] += m[0] * g0 + m[3] * g1 + m[6] * g2;
        gx[hw + i] += m[1] * g0 + m[4] * g1 + m[7] * g2;
        gx[2 * hw + i] += m[2] * g0 + m[5] * g1 + m[8] * g2;
      }
    }
    if (t.needs_grad(radians)) {
      float dm[9];
      img::hue_matrix_derivative(t.value(radians).data[0], dm);
      const Array& v = t.value(x).data;
      double acc = 0;
      for (int64_t i = 0; i < hw; ++i) {
        const float r = v[i], gg = v[hw + i], b = v[2 * hw + i];
        acc += static_cast<double>(g[i]) * (dm[0] * r + dm[1] * gg + dm[2] * b);
        acc += static_cast<double>(g[hw + i]) * (dm[3] * r + dm[4] * gg + dm[5] * b);
        acc += static_cast<double>(g[2 * hw + i]) * (dm[6] * r + dm[7] * gg + dm[8] * b);
      }
      t.grad(radians)[0] += static_cast<float>(acc);
    }
  });
}

namespace {
constexpr float kGammaFloor = 1e-6f;
}

Var pow_gamma(Tape& t, Var x, Var exponent) {
  require(t.size(exponent) == 1, "pow_gamma: exponent must be scalar");
  const float e = t.value(exponent).data[0];
  Tensor out(t.shape(x), t.value(x).data.max(kGammaFloor).pow(e));
  return t.emit("pow_gamma", {x, exponent}, std::move(out), [x, exponent](Tape& t, Var o) {
    const float e = t.value(exponent).data[0];
    const Array& v = t.value(x).data;
    Array xf = v.max(kGammaFloor);
    const Array& g = t.grad(o);
    if (t.needs_grad(x)) {
      Array dx = e * xf.pow(e - 1.0f);
      Array mask = (v >= kGammaFloor).cast<float>();
      t.grad(x) += g * dx * mask;
    }
    if (t.needs_grad(exponent)) {
      const Array& y = t.value(o).data;
      const double acc = (g.cast<double>() * y.cast<double>() * xf.log().cast<double>()).sum();
      t.grad(exponent)[0] += static_cast<float>(acc);
    }
  });
}

Var autocontrast(Tape& t, Var x) {
  auto ctx = std::make_shared<std::vector<img::AutoContrastChannel>>();
  Tensor out = img::autocontrast(t.value(x), ctx.get());
  return t.emit("autocontrast", {x}, std::move(out), [x, ctx](Tape& t, Var o) {
    if (!t.needs_grad(x)) return;
    const int c = t.shape(x)[0];
    const int64_t hw = t.size(x) / c;
    const Array& g = t.grad(o);
    const Array& y = t.value(o).data;
    Array& gx = t.grad(x);
    for (int ch = 0; ch < c; ++ch) {
      const auto& cc = (*ctx)[ch];
      const int64_t base = ch * hw;
      if (cc.degenerate) {
        gx.segment(base, hw) += g.segment(base, hw);
        continue;
      }
      const float s = cc.scale;
      gx.segment(base, hw) += s * g.segment(base, hw);
      double dmn = 0, dmx = 0;
      for (int64_t i = 0; i < hw; ++i) {
        const float gi = g[base + i];
        if (gi == 0.0f) continue;
        dmn += static_cast<double>(gi) * s * (y[base + i] - 1.0f);
        dmx -= static_cast<double>(gi) * s * y[base + i];
      }
      gx[base + cc.argmin] += static_cast<float>(dmn);
      gx[base + cc.argmax] += static_cast<float>(dmx);
    }
  });
}

Var equalize(Tape& t, Var x) {
  Tensor out = img::equalize(t.value(x));
  return t.emit("equalize", {x}, std::move(out), [x](Tape& t, Var o) {
    if (t.needs_grad(x)) t.grad(x) += t.grad(o);  // straight-through
  });
}

Var blend_images(Tape& t, std::span<const Var> images, Var weights) {
  require(!images.empty(), "blend_images: need at least one image");
  require(t.size(weights) == static_cast<int64_t>(images.size()),
          "blend_images: weight count must match image count");
  const Shape shape = t.shape(images[0]);
  for (Var im : images) require_same_shape(t, im, images[0], "blend_images");

  const Array& w = t.value(weights).data;
  Tensor out(shape);
  for (size_t k = 0; k < images.size(); ++k) out.data += w[k] * t.value(images[k]).data;

  std::vector<Var> inputs(images.begin(), images.end());
  std::vector<Var> imgs = inputs;
  inputs.push_back(weights);
  return t.emit("blend_images", std::move(inputs), std::move(out),
                [imgs, weights](Tape& t, Var o) {
                  const Array& g = t.grad(o);
                  const Array& w = t.value(weights).data;
                  const bool need_w = t.needs_grad(weights);
                  for (size_t k = 0; k < imgs.size(); ++k) {
                    if (t.needs_grad(imgs[k])) t.grad(imgs[k]) += w[k] * g;
                    if (need_w)
                      t.grad(weights)[k] += static_cast<float>(
                          (g.cast<double>() * t.value(imgs[k]).data.cast<double>()).sum());
                  }
                });
}

Var lerp(Tape& t, Var a, Var b, Var m) {
  return add(t, a, mul_scalar(t, sub(t, b, a), m));
}

}  // namespace dyntta::ops
