#pragma once

#include "dyntta/tape.hpp"

#include <span>

namespace dyntta::ops {

// Elementwise, same shape.
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);

// out = scale * x + offset with compile-time constants.
Var affine(Tape& t, Var x, float scale, float offset);

// Broadcast a 1-element variable over x.
Var add_scalar(Tape& t, Var x, Var s);
Var mul_scalar(Tape& t, Var x, Var s);

Var relu(Tape& t, Var x);
Var tanh_map(Tape& t, Var x);
Var sigmoid_map(Tape& t, Var x);

// min(max(x,0),1) with the standard clamp subgradient (zero outside).
Var clamp01(Tape& t, Var x);

// Numerically stable softmax over a vector of K >= 1 entries.
Var softmax(Tape& t, Var x);

// -log softmax(logits)[label]; throws ContractError for a bad label.
Var cross_entropy(Tape& t, Var logits, int label);

// y = W x + b; w is {out,in}, x any shape with numel == in, b is {out}.
Var linear(Tape& t, Var x, Var w, Var b);

// Same-size 3x3-family convolution: x {C,H,W}, w {OC,C,K,K} with odd K,
// zero padding K/2, stride 1, bias {OC}.
Var conv2d(Tape& t, Var x, Var w, Var b);

// 2x2 max pooling, H and W even.
Var maxpool2(Tape& t, Var x);

// {C,H,W} -> {C}
Var global_avg_pool(Tape& t, Var x);

// 1-D slice of a flat vector.
Var slice(Tape& t, Var x, int offset, int len);

// Scalar projection dot(x, r) against a fixed vector.
Var project(Tape& t, Var x, Array r);

// Mean over all elements -> {1}.
Var mean_all(Tape& t, Var x);

// Rec601 luma: {3,H,W} -> {1,H,W}.
Var grayscale(Tape& t, Var x);

// {1,H,W} -> {channels,H,W}
Var replicate_channels(Tape& t, Var x, int channels);

// {1} -> arbitrary shape
Var broadcast_to(Tape& t, Var s, Shape shape);

// Fixed 3x3 binomial smoothing per channel, zero padding (self-adjoint).
Var gaussian3(Tape& t, Var x);

// Ideal-mask frequency filter; see fft.hpp for mask semantics. Linear and
// self-adjoint, so the VJP is the same filter.
Var fft_filter(Tape& t, Var x, float cutoff, bool low_pass);

// Bilinear resampling warps about the image center, zero padding outside.
// Differentiable w.r.t. the image and the scalar parameter.
Var rotate(Tape& t, Var x, Var degrees);
Var zoom(Tape& t, Var x, Var magnitude);  // scale factor 1 + magnitude

// Chroma-plane rotation in YIQ space by a scalar angle (radians).
Var hue_rotate(Tape& t, Var x, Var radians);

// max(x,1e-6)^e for a scalar exponent variable.
Var pow_gamma(Tape& t, Var x, Var exponent);

// Per-channel affine rescale of [min,max] to [0,1]; subgradient routes
// through the first argmin/argmax. Degenerate channels pass through.
Var autocontrast(Tape& t, Var x);

// Per-channel 256-bin histogram equalization; straight-through gradient.
Var equalize(Tape& t, Var x);

// out = sum_k weights[k] * images[k]; weights is a {K} variable.
Var blend_images(Tape& t, std::span<const Var> images, Var weights);

// lerp(a, b, m) = a + m*(b-a) with a scalar variable m. Helper composition.
Var lerp(Tape& t, Var a, Var b, Var m);

}  // namespace dyntta::ops
