#pragma once

#include "dyntta/grad_check.hpp"

#include <string>
#include <vector>

namespace dyntta {

struct GradSuiteEntry {
  std::string name;
  float max_rel_err = 0;
  float tolerance = 0;
  bool pass = false;
};

struct GradSuiteReport {
  std::vector<GradSuiteEntry> entries;
  bool all_pass() const;
  float worst() const;
};

// Finite-difference verification of every differentiable primitive, every
// parameterized augmentation (w.r.t. its magnitude), and the end-to-end
// enhancement pipeline. Each entry runs `seeds` random seeds and keeps the
// worst error. Tolerances: 1e-3, or 5e-3 for resampling ops and the
// end-to-end check.
GradSuiteReport run_gradient_suite(int seeds = 5, uint64_t base_seed = 0);

// Shared well-conditioned fixtures.
// Smooth band-limited random image in [0.03, 0.97].
Tensor smooth_test_image(int channels, int h, int w, uint64_t seed);
// Low-chroma variant: channels stay close to their mean so large color
// magnitudes do not push values into the clamp.
Tensor low_chroma_test_image(int h, int w, uint64_t seed);
// Positive projection (entries in [0.75, 1.25]) keeping projected gradients
// away from zero.
Array positive_projection(int64_t n, uint64_t seed);

}  // namespace dyntta
