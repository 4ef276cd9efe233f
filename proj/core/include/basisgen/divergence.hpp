#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace basisgen {

/// p, q over a shared finite support. Entries >= 0, each sums to 1 +- 1e-12.
struct DiscreteDistributionPair {
  std::vector<double> p;
  std::vector<double> q;

  DiscreteDistributionPair(std::vector<double> p_in, std::vector<double> q_in);
  std::size_t support_size() const { return p.size(); }
};

/// D(A,B) restricted to one condition: entries in [0,1].
using DiscriminatorVector = std::vector<double>;

/// sum p_i log(p_i/q_i), natural log, 0 log 0 := 0. Returns +infinity when
/// q_i = 0 with p_i > 0.
double kl(const std::vector<double>& p, const std::vector<double>& q);

/// (KL(p||m) + KL(q||m)) / 2 with m = (p+q)/2; range [0, log 2].
double jsd(const std::vector<double>& p, const std::vector<double>& q);

/// d_i = p_i / (p_i + q_i), with 0.5 where both masses vanish.
DiscriminatorVector optimal_discriminator(const DiscreteDistributionPair& pair);

/// V' = sum p_i log d_i + sum q_i log(1 - d_i). Log of zero with positive
/// mass yields -infinity (returned, not thrown).
double gan_value(const DiscreteDistributionPair& pair, const DiscriminatorVector& d);

struct Eq3Report {
  double max_identity_deviation = 0.0;   // |V(D*) - (-log4 + 2 JSD)| over pairs
  double argmin_distance = 0.0;          // 2-state grid search: |q* - p|
  std::size_t pairs_checked = 0;
};

/// Checks the optimal-discriminator identity on every pair and brute-forces
/// the 2-state generator minimum at grid resolution 1e-3.
Eq3Report verify_eq3(const std::vector<DiscreteDistributionPair>& pairs);

struct HistogramSpec {
  double lo = -5.0;
  double hi = 5.0;
  int bins_per_dim = 50;
};

/// Histogram JSD between two sample sets of equal dimension. Dimensions 1
/// and 2 use a joint grid; higher dimensions are pooled coordinate-wise.
/// Bins get add-half smoothing; out-of-range values clamp to edge bins.
/// Requires >= 100 samples per side; throws if the raw histograms share no
/// occupied bin.
double jsd_from_samples(const std::vector<std::vector<double>>& xs,
                        const std::vector<std::vector<double>>& ys, const HistogramSpec& bins);

/// Mean over unordered pairs of mean absolute difference. Requires >= 2
/// samples.
double diversity_score(const std::vector<std::vector<double>>& samples);

/// Fraction of mode centers with at least one sample within `radius`
/// (Euclidean).
double mode_coverage(const std::vector<std::vector<double>>& samples,
                     const std::vector<std::vector<double>>& mode_centers, double radius);

inline constexpr double kLog2 = 0.6931471805599453094;

}  // namespace basisgen
