#include "dyntta/grad_check.hpp"

#include "dyntta/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dyntta {

float GradCheckReport::max_rel_err() const {
  float m = 0;
  for (const auto& in : inputs) m = std::max(m, in.max_rel_err);
  return m;
}

namespace {

struct Evaluation {
  double scalar = 0;
  double scale = 0;  // cancellation-robust magnitude proxy for rounding noise
  std::vector<Array> grads;  // aligned with inputs; empty for frozen inputs
};

Evaluation evaluate(const std::string& op_name, const GradCheckBuild& build,
                    const std::vector<Tensor>& inputs, const Array& projection,
                    bool want_grads) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& in : inputs) leaves.push_back(tape.leaf(in));
  Var out = build(tape, leaves);

  Evaluation ev;
  if (tape.size(out) == 1) {
    ev.scalar = tape.value(out).data[0];
    ev.scale = std::abs(ev.scalar);
  } else {
    require(projection.size() == tape.size(out),
            "grad_check: projection length mismatch for " + op_name);
    // double-precision dot outside the tape to keep the probe exact
    Eigen::ArrayXd terms = tape.value(out).data.cast<double>() * projection.cast<double>();
    ev.scalar = terms.sum();
    ev.scale = terms.abs().sum();
  }
  if (!std::isfinite(ev.scalar))
    throw NumericError("grad_check: non-finite output of " + op_name);

  if (want_grads) {
    if (tape.size(out) == 1)
      tape.backward(out);
    else
      tape.backward(out, projection);
    tape.validate_finite();
    ev.grads.resize(inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i)
      if (inputs[i].requires_grad) ev.grads[i] = tape.grad(leaves[i]);
  }
  return ev;
}

}  // namespace

GradCheckReport grad_check(const std::string& op_name, const GradCheckBuild& build,
                           std::vector<Tensor> inputs, float eps, uint64_t seed,
                           int64_t max_coords_per_input, const Array* projection_override,
                           float resolvable_tol) {
  require(eps >= 1e-4f && eps <= 1e-2f, "grad_check: eps must be in [1e-4, 1e-2]");

  // Probe the output size once to build the fixed projection.
  int64_t out_size;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& in : inputs) {
      Tensor frozen = in;
      frozen.requires_grad = false;
      leaves.push_back(tape.leaf(frozen));
    }
    out_size = tape.size(build(tape, leaves));
  }
  Array projection;
  if (out_size != 1) {
    if (projection_override) {
      require(projection_override->size() == out_size,
              "grad_check: projection override length mismatch");
      projection = *projection_override;
    } else {
      Rng rng(Rng::mix(seed, 0x70726F6A));
      projection = Array(out_size);
      for (int64_t i = 0; i < out_size; ++i) projection[i] = rng.uniform(-1.0f, 1.0f);
    }
  }

  Evaluation base = evaluate(op_name, build, inputs, projection, true);

  GradCheckReport report;
  report.op = op_name;
  report.inputs.resize(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (!inputs[i].requires_grad) continue;
    const int64_t n = inputs[i].size();
    std::vector<int64_t> coords;
    if (resolvable_tol > 0.0f) {
      // float32 probe quantization: ulp(|s|) across the central difference,
      // with headroom for rounding accumulated along the op chain
      const double min_abs =
          16.0 * base.scale * 1.1920929e-07 / (2.0 * eps * resolvable_tol);
      for (int64_t c = 0; c < n; ++c)
        if (std::abs(base.grads[i][c]) >= min_abs) coords.push_back(c);
      if (coords.empty()) continue;  // below finite-difference resolution
    } else {
      coords.resize(n);
      std::iota(coords.begin(), coords.end(), 0);
    }
    if (max_coords_per_input > 0 && static_cast<int64_t>(coords.size()) > max_coords_per_input) {
      Rng rng(Rng::mix(seed, 0xC0 + i));
      for (int64_t j = 0; j < max_coords_per_input; ++j) {
        int64_t k = j + rng.uniform_int(static_cast<int>(coords.size() - j));
        std::swap(coords[j], coords[k]);
      }
      coords.resize(max_coords_per_input);
    }

    auto& rep = report.inputs[i];
    rep.checked_coords = static_cast<int64_t>(coords.size());
    auto central = [&](int64_t c, float step) {
      const float orig = inputs[i].data[c];
      inputs[i].data[c] = orig + step;
      const double xp = inputs[i].data[c];
      const double fp = evaluate(op_name, build, inputs, projection, false).scalar;
      inputs[i].data[c] = orig - step;
      const double xm = inputs[i].data[c];
      const double fm = evaluate(op_name, build, inputs, projection, false).scalar;
      inputs[i].data[c] = orig;
      // divide by the realized float step, not the nominal 2*step
      return (fp - fm) / (xp - xm);
    };

    for (int64_t c : coords) {
      const double analytic = base.grads[i][c];
      auto rel_of = [analytic](double numeric) {
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        return std::abs(analytic - numeric) / denom;
      };
      const double fd1 = central(c, eps);
      double best = rel_of(fd1);
      double best_numeric = fd1;
      if (best > 1e-4) {
        // refine: half step plus Richardson extrapolation; a genuine VJP
        // mismatch persists at every step size, kink and truncation
        // artifacts do not
        const double fd2 = central(c, 0.5f * eps);
        const double richardson = (4.0 * fd2 - fd1) / 3.0;
        for (double cand : {fd2, richardson}) {
          const double r = rel_of(cand);
          if (r < best) {
            best = r;
            best_numeric = cand;
          }
        }
      }
      if (best > rep.max_rel_err) {
        rep.max_rel_err = static_cast<float>(best);
        rep.worst_coord = c;
        rep.analytic = static_cast<float>(analytic);
        rep.numeric = static_cast<float>(best_numeric);
      }
    }
  }
  return report;
}

}  // namespace dyntta
