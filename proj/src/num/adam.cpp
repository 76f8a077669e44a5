#include "actrec/num/adam.hpp"

#include <cmath>

#include "actrec/error.hpp"

namespace actrec::num {

template <class S>
AdamState<S>::AdamState(const NamedTensors<S>& params, AdamOptions opts) : options(opts) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    first_moment.emplace_back(params.at(i).shape());
    second_moment.emplace_back(params.at(i).shape());
  }
}

template <class S>
void adam_step(NamedTensors<S>& params, const std::vector<Tensor<S>>& grads, AdamState<S>& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw TrainingError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                        std::to_string(grads.size()) + " gradients, " + std::to_string(state.first_moment.size()) +
                        " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor<S>& gr = grads[i];
    if (gr.empty()) continue;
    if (gr.shape() != params.at(i).shape() || state.first_moment[i].shape() != params.at(i).shape()) {
      throw TrainingError("adam_step: shape mismatch for parameter '" + params.name(i) + "'");
    }
    if (!gr.all_finite()) throw TrainingError("non-finite gradient for parameter '" + params.name(i) + "'");
  }

  state.step += 1;
  const AdamOptions& o = state.options;
  const double t = static_cast<double>(state.step);
  const S lr = static_cast<S>(o.learning_rate);
  const S b1 = static_cast<S>(o.beta1), b2 = static_cast<S>(o.beta2);
  const S c1 = static_cast<S>(1.0 - std::pow(o.beta1, t));
  const S c2 = static_cast<S>(1.0 - std::pow(o.beta2, t));
  const S eps = static_cast<S>(o.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<S>& p = params.at(i);
    Tensor<S>& m = state.first_moment[i];
    Tensor<S>& v = state.second_moment[i];
    const Tensor<S>& gr = grads[i];
    const bool zero = gr.empty();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const S gj = zero ? S{0} : gr[j];
      m[j] = b1 * m[j] + (S{1} - b1) * gj;
      v[j] = b2 * v[j] + (S{1} - b2) * gj * gj;
      const S m_hat = m[j] / c1;
      const S v_hat = v[j] / c2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(NamedTensors<float>&, const std::vector<Tensor<float>>&, AdamState<float>&);
template void adam_step<double>(NamedTensors<double>&, const std::vector<Tensor<double>>&, AdamState<double>&);

}  // namespace actrec::num
