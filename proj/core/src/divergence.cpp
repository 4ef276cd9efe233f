#include "basisgen/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace basisgen {

namespace {

void check_distribution(const std::vector<double>& p, const char* name) {
  double total = 0.0;
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument(std::string(name) + ": negative probability");
    total += v;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw std::invalid_argument(std::string(name) + ": sums to " + std::to_string(total) +
                                ", expected 1");
  }
}

}  // namespace

DiscreteDistributionPair::DiscreteDistributionPair(std::vector<double> p_in,
                                                   std::vector<double> q_in)
    : p(std::move(p_in)), q(std::move(q_in)) {
  if (p.size() != q.size() || p.empty()) {
    throw std::invalid_argument("distribution pair: supports differ or empty");
  }
  check_distribution(p, "p");
  check_distribution(q, "q");
}

double kl(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl: support mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;  // 0 log 0 := 0
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return acc;
}

double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("jsd: support mismatch");
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return 0.5 * kl(p, m) + 0.5 * kl(q, m);
}

DiscriminatorVector optimal_discriminator(const DiscreteDistributionPair& pair) {
  DiscriminatorVector d(pair.support_size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double denom = pair.p[i] + pair.q[i];
    d[i] = denom > 0.0 ? pair.p[i] / denom : 0.5;
  }
  return d;
}

double gan_value(const DiscreteDistributionPair& pair, const DiscriminatorVector& d) {
  if (d.size() != pair.support_size()) throw std::invalid_argument("gan_value: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] < 0.0 || d[i] > 1.0) throw std::invalid_argument("gan_value: d outside [0,1]");
    if (pair.p[i] > 0.0) {
      if (d[i] == 0.0) return -std::numeric_limits<double>::infinity();
      acc += pair.p[i] * std::log(d[i]);
    }
    if (pair.q[i] > 0.0) {
      if (d[i] == 1.0) return -std::numeric_limits<double>::infinity();
      acc += pair.q[i] * std::log(1.0 - d[i]);
    }
  }
  return acc;
}

Eq3Report verify_eq3(const std::vector<DiscreteDistributionPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("verify_eq3: needs at least one pair");
  Eq3Report report;
  report.pairs_checked = pairs.size();
  const double log4 = 2.0 * kLog2;
  for (const auto& pair : pairs) {
    const double v = gan_value(pair, optimal_discriminator(pair));
    const double rhs = -log4 + 2.0 * jsd(pair.p, pair.q);
    report.max_identity_deviation =
        std::max(report.max_identity_deviation, std::fabs(v - rhs));
  }

  // 2-state brute force: C(q) = -log4 + 2 JSD(p||q) must bottom out at q = p.
  const std::vector<double> p2 = {0.3, 0.7};
  double best_c = std::numeric_limits<double>::infinity();
  double best_t = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double t = static_cast<double>(i) / 1000.0;
    const std::vector<double> q2 = {t, 1.0 - t};
    const double c = -log4 + 2.0 * jsd(p2, q2);
    if (c < best_c) {
      best_c = c;
      best_t = t;
    }
  }
  report.argmin_distance = std::fabs(best_t - p2[0]);
  return report;
}

namespace {

// Returns -1 for values outside [lo, hi); such samples are dropped.
int bin_of(double v, double lo, double hi, int bins) {
  if (hi <= lo) throw std::invalid_argument("histogram: hi must exceed lo");
  const int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
  return (b < 0 || b >= bins) ? -1 : b;
}

std::vector<double> histogram(const std::vector<std::vector<double>>& samples, std::size_t dim,
                              const HistogramSpec& spec, std::size_t n_bins) {
  std::vector<double> counts(n_bins, 0.0);
  for (const auto& s : samples) {
    std::size_t idx = 0;
    bool in_range = true;
    for (std::size_t d = 0; d < dim; ++d) {
      const int b = bin_of(s[d], spec.lo, spec.hi, spec.bins_per_dim);
      if (b < 0) {
        in_range = false;
        break;
      }
      idx = idx * static_cast<std::size_t>(spec.bins_per_dim) + static_cast<std::size_t>(b);
    }
    if (in_range) counts[idx] += 1.0;
  }
  return counts;
}

std::vector<std::vector<double>> pool_1d(const std::vector<std::vector<double>>& samples) {
  std::vector<std::vector<double>> pooled;
  pooled.reserve(samples.size() * (samples.empty() ? 0 : samples[0].size()));
  for (const auto& s : samples) {
    for (double v : s) pooled.push_back({v});
  }
  return pooled;
}

}  // namespace

double jsd_from_samples(const std::vector<std::vector<double>>& xs,
                        const std::vector<std::vector<double>>& ys, const HistogramSpec& bins) {
  if (xs.empty() || ys.empty() || xs[0].empty() || xs[0].size() != ys[0].size()) {
    throw std::invalid_argument("jsd_from_samples: dimension mismatch");
  }
  std::size_t dim = xs[0].size();
  if (dim > 2) {
    // Pool coordinates first; the sample-count gate applies to pooled values.
    return jsd_from_samples(pool_1d(xs), pool_1d(ys), bins);
  }
  if (xs.size() < 100 || ys.size() < 100) {
    throw std::invalid_argument("jsd_from_samples: need >= 100 samples per side");
  }
  std::size_t n_bins = 1;
  for (std::size_t d = 0; d < dim; ++d) n_bins *= static_cast<std::size_t>(bins.bins_per_dim);

  std::vector<double> hx = histogram(xs, dim, bins, n_bins);
  std::vector<double> hy = histogram(ys, dim, bins, n_bins);

  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n_bins; ++i) {
    cx += hx[i];
    cy += hy[i];
  }
  if (cx == 0.0 || cy == 0.0) {
    throw std::runtime_error(
        "jsd_from_samples: bins do not overlap a sample range (empty histogram)");
  }

  // Add-half smoothing, then normalize.
  double tx = 0.0, ty = 0.0;
  for (std::size_t i = 0; i < n_bins; ++i) {
    hx[i] += 0.5;
    hy[i] += 0.5;
    tx += hx[i];
    ty += hy[i];
  }
  for (std::size_t i = 0; i < n_bins; ++i) {
    hx[i] /= tx;
    hy[i] /= ty;
  }
  return jsd(hx, hy);
}

double diversity_score(const std::vector<std::vector<double>>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("diversity_score: need >= 2 samples");
  const std::size_t n = samples.size();
  const std::size_t dim = samples[0].size();
  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (samples[i].size() != dim) {
      throw std::invalid_argument("diversity_score: inconsistent sample dimensions");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < dim; ++k) d += std::fabs(samples[i][k] - samples[j][k]);
      acc += d / static_cast<double>(dim);
      ++pairs;
    }
  }
  return acc / static_cast<double>(pairs);
}

double mode_coverage(const std::vector<std::vector<double>>& samples,
                     const std::vector<std::vector<double>>& mode_centers, double radius) {
  if (mode_centers.empty()) throw std::invalid_argument("mode_coverage: no mode centers");
  if (radius <= 0.0) throw std::invalid_argument("mode_coverage: radius must be positive");
  std::size_t covered = 0;
  for (const auto& c : mode_centers) {
    for (const auto& s : samples) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        const double dk = s[k] - c[k];
        d2 += dk * dk;
      }
      if (d2 <= radius * radius) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(mode_centers.size());
}

}  // namespace basisgen
