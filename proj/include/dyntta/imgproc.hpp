#pragma once

#include "dyntta/tensor.hpp"

namespace dyntta::img {

// Inverse map from output pixel to source coordinate, applied about the
// image center: src = M * (p - center) + center + t.
struct Affine {
  float m00 = 1, m01 = 0, m10 = 0, m11 = 0, tx = 0, ty = 0;
  static Affine rotate_deg(float degrees);
  static Affine zoom(float factor);
  static Affine shear_x(float s);
  static Affine shear_y(float s);
  static Affine translate(float dx, float dy);
};

// Bilinear sample with zero padding outside the image.
float sample_zero(const float* plane, int h, int w, float sy, float sx);

// Bilinear warp of a {C,H,W} tensor, zero padding outside.
Tensor warp(const Tensor& x, const Affine& a);

Tensor rotate_bilinear(const Tensor& x, float degrees);
Tensor zoom_bilinear(const Tensor& x, float factor);

// Rec601 luma plane {H*W} from a {3,H,W} tensor.
Array luma(const Tensor& x);

Tensor gaussian3(const Tensor& x);                  // fixed 3x3 binomial, zero pad
Tensor gaussian_blur(const Tensor& x, float sigma);  // separable, clamp-to-edge

// Per-channel autocontrast context, shared by the plain op and the VJP.
struct AutoContrastChannel {
  bool degenerate = false;
  int64_t argmin = 0, argmax = 0;
  float lo = 0, scale = 1;  // out = (x - lo) * scale
};
Tensor autocontrast(const Tensor& x, std::vector<AutoContrastChannel>* ctx = nullptr);

Tensor equalize(const Tensor& x);
Tensor posterize(const Tensor& x, int bits);
Tensor solarize(const Tensor& x, float threshold);
Tensor invert(const Tensor& x);
Tensor saturate(const Tensor& x, float factor);
Tensor contrast(const Tensor& x, float factor);
Tensor brightness(const Tensor& x, float shift);
Tensor gamma(const Tensor& x, float exponent);
Tensor hue_shift(const Tensor& x, float radians);

Tensor clamp01(Tensor x);

// YIQ color transform pair used by hue rotation (column-major 3x3 pairs).
void hue_matrix(double radians, float out[9]);
void hue_matrix_derivative(double radians, float out[9]);

}  // namespace dyntta::img
