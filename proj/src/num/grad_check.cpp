#include "actrec/num/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace actrec::num {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

namespace {

double evaluate(const ScalarBuilder& build, const NamedTensors<double>& params, bool with_grad,
                std::vector<Tensor<double>>* grads) {
  Graph<double> g(with_grad);
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) leaves.push_back(g.parameter(params.at(i), params.name(i)));
  Var out = build(g, leaves);
  const double value = g.value(out)[0];
  if (with_grad) {
    g.backward(out);
    grads->clear();
    for (Var v : leaves) {
      const Tensor<double>& gr = g.grad(v);
      grads->push_back(gr.empty() ? Tensor<double>(g.value(v).shape()) : gr);
    }
  }
  return value;
}

}  // namespace

GradCheckResult grad_check(const ScalarBuilder& build, NamedTensors<double>& params, double eps, int refinements,
                           double tolerance) {
  std::vector<Tensor<double>> analytic;
  evaluate(build, params, true, &analytic);

  GradCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<double>& p = params.at(i);
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double saved = p[j];
      auto central = [&](double h) {
        p[j] = saved + h;
        const double plus = evaluate(build, params, false, nullptr);
        p[j] = saved - h;
        const double minus = evaluate(build, params, false, nullptr);
        p[j] = saved;
        return (plus - minus) / (2.0 * h);
      };
      double numeric = central(eps);
      double err = relative_error(analytic[i][j], numeric);
      double h = eps;
      for (int r = 0; r < refinements && err > tolerance; ++r) {
        h /= 10.0;
        const double n = central(h);
        const double e = relative_error(analytic[i][j], n);
        if (e < err) {
          err = e;
          numeric = n;
        }
      }
      ++result.checked;
      if (err > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = err;
        result.worst_parameter = params.name(i);
        result.worst_index = j;
        result.analytic_at_worst = analytic[i][j];
        result.numeric_at_worst = numeric;
      }
    }
  }
  return result;
}

}  // namespace actrec::num
