#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "basisgen/linalg.hpp"
#include "basisgen/rng.hpp"
#include "basisgen/tensor.hpp"

namespace basisgen {

/// Stack N filter banks [Cout,Cin,L,L] into the analysis matrix
/// [N*L*L, Cin*Cout]: row block i holds sample i's spatial rows, columns
/// index (cin, cout). Entry (u, (ci,co)) of a single bank equals
/// w[co,ci,u].
Tensor stack_filters(const std::vector<Tensor>& samples);

/// Planted instance for the span-recovery harness: K channel transforms
/// a_k (each Cin x Cout) and per-sample spatial coefficients b, combined
/// into F(s,u,(ci,co)) = sum_k b[s,u,k] a_k[ci,co].
struct TheoremInstance {
  std::vector<Tensor> a;  // K matrices [Cin,Cout]
  Tensor b;               // [S, L*L, K]
  bool independent = true;
  std::int64_t k = 0, cin = 0, cout = 0, l = 0, samples = 0;
};

struct PlantedData {
  TheoremInstance instance;
  Tensor f;  // [S, L*L, Cin*Cout]
};

/// independent=true draws the a_k i.i.d. Gaussian (full column rank almost
/// surely; requires K <= Cin*Cout). independent=false forces a_K = a_1 + a_2
/// so the span has dimension K-1.
PlantedData plant_instance(std::int64_t k, std::int64_t cin, std::int64_t cout, std::int64_t l,
                           std::int64_t samples, bool independent, Rng& rng);

struct RecoveryResult {
  Tensor b_hat;           // [S, L*L, K]
  double residual = 0.0;  // inf-norm of sum_k b_hat_k a_k - F
  bool used_pseudo_inverse = false;
};

/// Per (sample, u) least squares of F(u) against {a_k}. Independent case
/// recovers the планted b exactly; the dependent case takes the
/// pseudo-inverse route and reproduces F even though b_hat differs from b.
RecoveryResult recover_basis_coefficients(const TheoremInstance& instance, const Tensor& f);

struct KsReport {
  std::vector<double> statistics;  // per (u,k) coordinate
  double critical_value = 0.0;
  bool all_pass = false;
};

/// Two-sample Kolmogorov-Smirnov per coordinate between planted draws and
/// recovered draws, against the asymptotic critical value at significance
/// 0.01. Requires >= 500 draws per side.
KsReport distribution_match(const Tensor& planted_b, const Tensor& recovered_b);

/// Two-sample KS statistic for plain samples.
double ks_statistic(std::vector<double> xs, std::vector<double> ys);

/// Asymptotic two-sample critical value c(alpha) * sqrt((n+m)/(n m)).
double ks_critical(double alpha, std::size_t n, std::size_t m);

struct SweepRecord {
  std::string variant;  // "basis" or "filtergen"
  std::int64_t l = 0, cin = 0, cout = 0, k = 0, d_z = 0, d_h = 0;
  std::int64_t params = 0;
  double quality = 0.0;  // mode coverage on the task
  double jsd_est = 0.0;
  std::string wall_notes;
};

/// CSV header: variant,L,Cin,Cout,K,d_z,d_h,params,quality
std::string sweep_csv(const std::vector<SweepRecord>& records);

}  // namespace basisgen
