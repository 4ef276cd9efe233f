#include "basisgen/optim.hpp"

#include <cmath>

namespace basisgen {

void adam_step(Tensor& params, const std::vector<double>& grads, AdamState& state) {
  if (static_cast<std::int64_t>(grads.size()) != params.size()) {
    throw TensorError("adam_step: gradient length " + std::to_string(grads.size()) +
                      " != parameter length " + std::to_string(params.size()));
  }
  if (state.m.size() != grads.size() || state.v.size() != grads.size()) {
    throw TensorError("adam_step: moment buffers sized for a different tensor");
  }
  for (double g : grads) {
    if (std::isnan(g)) throw TensorError("adam_step: NaN gradient (training diverged)");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[static_cast<std::int64_t>(i)] -= state.alpha * mhat / (std::sqrt(vhat) + state.eps);
  }
}

void sgd_step(Tensor& params, const std::vector<double>& grads, double alpha) {
  if (static_cast<std::int64_t>(grads.size()) != params.size()) {
    throw TensorError("sgd_step: gradient length mismatch");
  }
  for (double g : grads) {
    if (std::isnan(g)) throw TensorError("sgd_step: NaN gradient (training diverged)");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    params[static_cast<std::int64_t>(i)] -= alpha * grads[i];
  }
}

}  // namespace basisgen
