#pragma once

#include <functional>
#include <string>
#include <vector>

#include "basisgen/tensor.hpp"

namespace basisgen {

/// Central differences (f(x + h e_i) - f(x - h e_i)) / (2h) per coordinate.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double h = 1e-5);

/// ||a - b||_2 / max(||a||_2, ||b||_2, tiny).
double gradient_relative_error(const std::vector<double>& a, const std::vector<double>& b);

struct GradCheckRow {
  std::string op;
  int instances = 0;
  double max_rel_error = 0.0;
  bool pass = false;
};

/// Runs the full analytic-vs-finite-difference suite over every
/// differentiable operation, `instances` random cases each at tolerance
/// `tol`. Covers conv2d, basis generation, filter reconstruction, the
/// stochastic conv layer (latent held fixed), both GAN objectives, and the
/// diversity regularizer.
std::vector<GradCheckRow> run_gradcheck(std::uint64_t seed, int instances = 20,
                                        double tol = 1e-4);

}  // namespace basisgen
