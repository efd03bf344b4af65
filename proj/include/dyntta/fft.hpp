#pragma once

#include "dyntta/tensor.hpp"

namespace dyntta::fft {

// Ideal low-pass membership mask over the H x W frequency grid, flattened
// row-major. Entry is 1 when the normalized radius <= cutoff, else 0; radius
// is normalized so 1.0 equals the Nyquist corner-to-center distance. The
// high-pass mask is exactly 1 - low-pass so the pair is complementary.
Array low_pass_mask(int h, int w, float cutoff);

// Applies the ideal filter per channel: FFT -> mask -> inverse FFT, keeping
// the real part. Linear, and self-adjoint because the mask is real and
// radially symmetric. Output is NOT clamped.
Tensor ideal_filter(const Tensor& chw, float cutoff, bool low_pass);

}  // namespace dyntta::fft
