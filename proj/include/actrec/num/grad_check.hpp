#pragma once

#include <functional>
#include <span>
#include <string>

#include "actrec/num/graph.hpp"

namespace actrec::num {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  std::size_t checked = 0;
};

/// Builds a scalar from the parameter leaves (bound in the order of `params`).
using ScalarBuilder = std::function<Var(Graph<double>&, std::span<const Var> params)>;

/// |a - n| / max(1e-8, |a| + |n|)
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients against central finite differences for
/// every element of every parameter, in 64-bit arithmetic.
///
/// With refinements > 0, an element whose error exceeds `tolerance` is measured
/// again at eps/10, eps/100, ... and keeps its smallest error. This only helps
/// where the +-eps interval straddles a relu kink; a wrong gradient fails at
/// every step size.
GradCheckResult grad_check(const ScalarBuilder& build, NamedTensors<double>& params, double eps = 1e-6,
                           int refinements = 0, double tolerance = 1e-4);

}  // namespace actrec::num
