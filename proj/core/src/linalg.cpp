#include "basisgen/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace basisgen {

void symmetric_eigen(std::vector<double>& a, int n, std::vector<double>& eigenvalues,
                     std::vector<double>& eigenvectors) {
  // Cyclic Jacobi rotations until off-diagonal mass is negligible.
  eigenvectors.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) eigenvectors[static_cast<std::size_t>(i * n + i)] = 1.0;

  auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r * n + c)]; };
  auto vt = [&](int r, int c) -> double& {
    return eigenvectors[static_cast<std::size_t>(r * n + c)];
  };

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
    }
    if (off < 1e-28 * static_cast<double>(n * n)) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double app = at(p, p);
        const double aqq = at(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int i = 0; i < n; ++i) {
          const double aip = at(i, p);
          const double aiq = at(i, q);
          at(i, p) = c * aip - s * aiq;
          at(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = at(p, i);
          const double aqi = at(q, i);
          at(p, i) = c * api - s * aqi;
          at(q, i) = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = vt(i, p);
          const double viq = vt(i, q);
          vt(i, p) = c * vip - s * viq;
          vt(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  eigenvalues.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eigenvalues[static_cast<std::size_t>(i)] = at(i, i);

  // Sort descending, permuting eigenvector columns alongside.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return eigenvalues[static_cast<std::size_t>(x)] > eigenvalues[static_cast<std::size_t>(y)];
  });
  std::vector<double> sorted_w(static_cast<std::size_t>(n));
  std::vector<double> sorted_v(eigenvectors.size());
  for (int c = 0; c < n; ++c) {
    sorted_w[static_cast<std::size_t>(c)] = eigenvalues[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])];
    for (int r = 0; r < n; ++r) {
      sorted_v[static_cast<std::size_t>(r * n + c)] =
          eigenvectors[static_cast<std::size_t>(r * n + order[static_cast<std::size_t>(c)])];
    }
  }
  eigenvalues = std::move(sorted_w);
  eigenvectors = std::move(sorted_v);
}

std::vector<double> singular_values(const Tensor& m) {
  if (m.rank() != 2) throw TensorError("singular_values: expected rank-2, got " + shape_str(m.shape()));
  const std::int64_t rows = m.dim(0), cols = m.dim(1);
  const bool tall = rows >= cols;
  const std::int64_t n = tall ? cols : rows;

  // Gram matrix on the smaller side.
  std::vector<double> gram(static_cast<std::size_t>(n * n), 0.0);
  if (tall) {
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = i; j < n; ++j) {
        double acc = 0.0;
        for (std::int64_t r = 0; r < rows; ++r) acc += m[r * cols + i] * m[r * cols + j];
        gram[static_cast<std::size_t>(i * n + j)] = acc;
        gram[static_cast<std::size_t>(j * n + i)] = acc;
      }
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = i; j < n; ++j) {
        double acc = 0.0;
        for (std::int64_t c = 0; c < cols; ++c) acc += m[i * cols + c] * m[j * cols + c];
        gram[static_cast<std::size_t>(i * n + j)] = acc;
        gram[static_cast<std::size_t>(j * n + i)] = acc;
      }
    }
  }

  std::vector<double> w, v;
  symmetric_eigen(gram, static_cast<int>(n), w, v);
  std::vector<double> sv(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) sv[i] = std::sqrt(std::max(w[i], 0.0));
  return sv;
}

int effective_rank(const Tensor& m, double tau) {
  if (tau <= 0.0 || tau >= 1.0) throw TensorError("effective_rank: tau must be in (0,1)");
  const std::vector<double> sv = singular_values(m);
  if (sv.empty() || sv[0] <= 0.0) return 0;
  const double threshold = tau * sv[0];
  int count = 0;
  for (double s : sv) {
    if (s > threshold) ++count;
  }
  return count;
}

LeastSquaresSolver::LeastSquaresSolver(const Tensor& a, double rel_tol) {
  if (a.rank() != 2) throw TensorError("least squares: matrix must be rank-2");
  rows_ = a.dim(0);
  cols_ = a.dim(1);
  if (rows_ < cols_) throw TensorError("least squares: needs rows >= cols");

  at_.assign(static_cast<std::size_t>(cols_ * rows_), 0.0);
  for (std::int64_t r = 0; r < rows_; ++r) {
    for (std::int64_t c = 0; c < cols_; ++c) at_[static_cast<std::size_t>(c * rows_ + r)] = a[r * cols_ + c];
  }

  // Normal equations G = A^T A.
  std::vector<double> gram(static_cast<std::size_t>(cols_ * cols_), 0.0);
  double gmax = 0.0;
  for (std::int64_t i = 0; i < cols_; ++i) {
    for (std::int64_t j = i; j < cols_; ++j) {
      double acc = 0.0;
      for (std::int64_t r = 0; r < rows_; ++r) {
        acc += at_[static_cast<std::size_t>(i * rows_ + r)] * at_[static_cast<std::size_t>(j * rows_ + r)];
      }
      gram[static_cast<std::size_t>(i * cols_ + j)] = acc;
      gram[static_cast<std::size_t>(j * cols_ + i)] = acc;
      gmax = std::max(gmax, std::fabs(acc));
    }
  }

  // Cholesky attempt; a failed pivot signals rank deficiency.
  chol_.assign(gram.begin(), gram.end());
  bool ok = gmax > 0.0;
  const double pivot_floor = std::max(gmax, 1.0) * rel_tol;
  for (std::int64_t j = 0; j < cols_ && ok; ++j) {
    double d = chol_[static_cast<std::size_t>(j * cols_ + j)];
    for (std::int64_t k = 0; k < j; ++k) {
      const double l = chol_[static_cast<std::size_t>(j * cols_ + k)];
      d -= l * l;
    }
    if (d <= pivot_floor) {
      ok = false;
      break;
    }
    const double dj = std::sqrt(d);
    chol_[static_cast<std::size_t>(j * cols_ + j)] = dj;
    for (std::int64_t i = j + 1; i < cols_; ++i) {
      double acc = chol_[static_cast<std::size_t>(i * cols_ + j)];
      for (std::int64_t k = 0; k < j; ++k) {
        acc -= chol_[static_cast<std::size_t>(i * cols_ + k)] * chol_[static_cast<std::size_t>(j * cols_ + k)];
      }
      chol_[static_cast<std::size_t>(i * cols_ + j)] = acc / dj;
    }
  }

  if (ok) {
    used_pinv_ = false;
    return;
  }

  // Pseudo-inverse route: G = V diag(w) V^T, A+ = V diag(w+) V^T A^T.
  used_pinv_ = true;
  std::vector<double> w, v;
  std::vector<double> gcopy = gram;
  symmetric_eigen(gcopy, static_cast<int>(cols_), w, v);
  const double wmax = w.empty() ? 0.0 : std::max(w[0], 0.0);
  const double cutoff = wmax * rel_tol;
  // M = V diag(w+) V^T (cols x cols)
  std::vector<double> mid(static_cast<std::size_t>(cols_ * cols_), 0.0);
  for (std::int64_t i = 0; i < cols_; ++i) {
    for (std::int64_t j = 0; j < cols_; ++j) {
      double acc = 0.0;
      for (std::int64_t k = 0; k < cols_; ++k) {
        const double wk = w[static_cast<std::size_t>(k)];
        if (wk > cutoff) {
          acc += v[static_cast<std::size_t>(i * cols_ + k)] * v[static_cast<std::size_t>(j * cols_ + k)] / wk;
        }
      }
      mid[static_cast<std::size_t>(i * cols_ + j)] = acc;
    }
  }
  pinv_.assign(static_cast<std::size_t>(cols_ * rows_), 0.0);
  for (std::int64_t i = 0; i < cols_; ++i) {
    for (std::int64_t r = 0; r < rows_; ++r) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < cols_; ++j) {
        acc += mid[static_cast<std::size_t>(i * cols_ + j)] * at_[static_cast<std::size_t>(j * rows_ + r)];
      }
      pinv_[static_cast<std::size_t>(i * rows_ + r)] = acc;
    }
  }
}

std::vector<double> LeastSquaresSolver::solve(const std::vector<double>& b) const {
  if (static_cast<std::int64_t>(b.size()) != rows_) {
    throw TensorError("least squares: rhs length mismatch");
  }
  std::vector<double> x(static_cast<std::size_t>(cols_), 0.0);
  if (used_pinv_) {
    for (std::int64_t i = 0; i < cols_; ++i) {
      double acc = 0.0;
      for (std::int64_t r = 0; r < rows_; ++r) acc += pinv_[static_cast<std::size_t>(i * rows_ + r)] * b[static_cast<std::size_t>(r)];
      x[static_cast<std::size_t>(i)] = acc;
    }
    return x;
  }
  // rhs = A^T b, then two triangular solves.
  std::vector<double> rhs(static_cast<std::size_t>(cols_), 0.0);
  for (std::int64_t i = 0; i < cols_; ++i) {
    double acc = 0.0;
    for (std::int64_t r = 0; r < rows_; ++r) acc += at_[static_cast<std::size_t>(i * rows_ + r)] * b[static_cast<std::size_t>(r)];
    rhs[static_cast<std::size_t>(i)] = acc;
  }
  for (std::int64_t i = 0; i < cols_; ++i) {
    double acc = rhs[static_cast<std::size_t>(i)];
    for (std::int64_t k = 0; k < i; ++k) acc -= chol_[static_cast<std::size_t>(i * cols_ + k)] * x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(i)] = acc / chol_[static_cast<std::size_t>(i * cols_ + i)];
  }
  for (std::int64_t i = cols_ - 1; i >= 0; --i) {
    double acc = x[static_cast<std::size_t>(i)];
    for (std::int64_t k = i + 1; k < cols_; ++k) acc -= chol_[static_cast<std::size_t>(k * cols_ + i)] * x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(i)] = acc / chol_[static_cast<std::size_t>(i * cols_ + i)];
  }
  return x;
}

}  // namespace basisgen
