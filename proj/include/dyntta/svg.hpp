#pragma once

#include "dyntta/estimate.hpp"
#include "dyntta/train.hpp"

#include <string>

namespace dyntta::io {

// Per-severity accuracy curves, one polyline per corruption kind.
std::string severity_curves_svg(const train::EvalReport& report);

// One box (marked <g class="box">) per kind/group of blend weights.
std::string weight_boxplot_svg(const est::WeightStats& stats);

}  // namespace dyntta::io
