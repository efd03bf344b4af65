#pragma once

#include "dyntta/ops.hpp"
#include "dyntta/tape.hpp"

#include <functional>
#include <string>

namespace dyntta {

// Builds the graph under test from leaves created for each provided input.
using GradCheckBuild = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckReport {
  struct PerInput {
    float max_rel_err = 0;
    int64_t worst_coord = -1;
    float analytic = 0, numeric = 0;
    int64_t checked_coords = 0;
  };
  std::string op;
  std::vector<PerInput> inputs;
  float max_rel_err() const;
};

// Central finite differences against tape gradients. Vector-valued outputs
// are reduced to a scalar through a fixed random projection derived from
// `seed` (or a caller-supplied one). Relative error uses denominator
// max(|a|,|b|,1e-6). Inputs with requires_grad=false are skipped. When
// max_coords_per_input > 0 and an input is larger, a seeded random subset of
// coordinates is probed.
// `resolvable_tol`, when positive, restricts probing to coordinates whose
// finite difference is resolvable at that relative tolerance: the float32
// probe value quantizes at ulp(|s|), so a coordinate needs
// |analytic| >= 4*|s|*eps_mach / (2*eps*tol) for the comparison to be
// meaningful. Inputs with no resolvable coordinate are skipped (their
// gradients sit below float32 finite-difference resolution). Deep composite
// checks rely on this; primitives are probed exhaustively.
GradCheckReport grad_check(const std::string& op_name, const GradCheckBuild& build,
                           std::vector<Tensor> inputs, float eps = 1e-2f, uint64_t seed = 0,
                           int64_t max_coords_per_input = -1,
                           const Array* projection_override = nullptr,
                           float resolvable_tol = 0.0f);

}  // namespace dyntta
