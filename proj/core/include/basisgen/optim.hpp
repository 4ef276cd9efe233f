#pragma once

#include <cstdint>
#include <vector>

#include "basisgen/tensor.hpp"

namespace basisgen {

/// Adam moment buffers for one parameter tensor. Defaults are the usual
/// cGAN recipe.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  double alpha = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_tensor(const Tensor& p, double alpha = 2e-4) {
    AdamState s;
    s.m.assign(static_cast<std::size_t>(p.size()), 0.0);
    s.v.assign(static_cast<std::size_t>(p.size()), 0.0);
    s.alpha = alpha;
    return s;
  }
};

/// One bias-corrected Adam update. Throws TensorError on NaN gradients
/// (training divergence signal).
void adam_step(Tensor& params, const std::vector<double>& grads, AdamState& state);

/// Plain gradient step p <- p - alpha * g (config-selectable alternative).
void sgd_step(Tensor& params, const std::vector<double>& grads, double alpha);

}  // namespace basisgen
