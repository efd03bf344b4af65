#include "dyntta/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>

namespace dyntta::fft {

namespace {

using CMat = Eigen::Matrix<std::complex<float>, Eigen::Dynamic, Eigen::Dynamic>;
using CVec = Eigen::Matrix<std::complex<float>, Eigen::Dynamic, 1>;

Eigen::FFT<float>& engine() {
  thread_local Eigen::FFT<float> fft;  // caches plans per length
  return fft;
}

void fft2d(CMat& m, bool inverse) {
  Eigen::FFT<float>& fft = engine();
  CVec in(m.cols()), out(m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    in = m.row(r).transpose();
    if (inverse)
      fft.inv(out, in);
    else
      fft.fwd(out, in);
    m.row(r) = out.transpose();
  }
  CVec cin(m.rows()), cout(m.rows());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    cin = m.col(c);
    if (inverse)
      fft.inv(cout, cin);
    else
      fft.fwd(cout, cin);
    m.col(c) = cout;
  }
}

}  // namespace

Array low_pass_mask(int h, int w, float cutoff) {
  Array mask(static_cast<int64_t>(h) * w);
  const double corner = std::sqrt(double(h / 2) * (h / 2) + double(w / 2) * (w / 2));
  for (int u = 0; u < h; ++u) {
    double fu = (u <= h / 2) ? u : u - h;
    for (int v = 0; v < w; ++v) {
      double fv = (v <= w / 2) ? v : v - w;
      double r = std::sqrt(fu * fu + fv * fv) / corner;
      mask[static_cast<int64_t>(u) * w + v] = (r <= cutoff) ? 1.0f : 0.0f;
    }
  }
  return mask;
}

Tensor ideal_filter(const Tensor& chw, float cutoff, bool low_pass) {
  require(chw.shape.size() == 3, "ideal_filter expects a {C,H,W} tensor");
  const int c = chw.shape[0], h = chw.shape[1], w = chw.shape[2];
  Array mask = low_pass_mask(h, w, cutoff);
  if (!low_pass) mask = 1.0f - mask;

  Tensor out(chw.shape);
  CMat buf(h, w);
  for (int ch = 0; ch < c; ++ch) {
    const float* src = chw.data.data() + static_cast<int64_t>(ch) * h * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) buf(y, x) = std::complex<float>(src[y * w + x], 0.0f);
    fft2d(buf, false);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) buf(y, x) *= mask[static_cast<int64_t>(y) * w + x];
    fft2d(buf, true);
    float* dst = out.data.data() + static_cast<int64_t>(ch) * h * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) dst[y * w + x] = buf(y, x).real();
  }
  return out;
}

}  // namespace dyntta::fft
