#pragma once

#include <vector>

#include "basisgen/tensor.hpp"

namespace basisgen {

/// Singular values of a rank-2 tensor, descending. Computed by a cyclic
/// Jacobi eigensolve of the Gram matrix on the smaller side; matrices here
/// are small so robustness beats speed.
std::vector<double> singular_values(const Tensor& m);

/// Count of singular values sigma_i > tau * sigma_max; 0 for the zero
/// matrix. tau must lie in (0,1).
int effective_rank(const Tensor& m, double tau);

/// Symmetric eigendecomposition A = V diag(w) V^T for a dense symmetric
/// matrix given row-major (n x n). Returns eigenvalues descending with
/// matching columns in V (also row-major n x n).
void symmetric_eigen(std::vector<double>& a, int n, std::vector<double>& eigenvalues,
                     std::vector<double>& eigenvectors);

/// Least-squares solves min ||A x - b|| for A (rows x cols, rows >= cols)
/// against many right-hand sides. Normal equations via Cholesky when well
/// conditioned; falls back to the eigendecomposition pseudo-inverse when
/// singular, so rank-deficient systems yield the minimum-norm solution.
class LeastSquaresSolver {
 public:
  LeastSquaresSolver(const Tensor& a, double rel_tol = 1e-12);

  std::vector<double> solve(const std::vector<double>& b) const;
  bool used_pseudo_inverse() const { return used_pinv_; }

 private:
  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  std::vector<double> at_;     // cols x rows (A transposed)
  std::vector<double> chol_;   // lower Cholesky factor of A^T A when SPD
  std::vector<double> pinv_;   // cols x rows pseudo-inverse when degenerate
  bool used_pinv_ = false;
};

}  // namespace basisgen
