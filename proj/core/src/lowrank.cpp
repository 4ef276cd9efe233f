#include "basisgen/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace basisgen {

Tensor stack_filters(const std::vector<Tensor>& samples) {
  if (samples.empty()) throw TensorError("stack_filters: no samples");
  const Shape& s0 = samples[0].shape();
  if (s0.size() != 4) throw TensorError("stack_filters: banks must be [Cout,Cin,L,L]");
  const std::int64_t cout = s0[0], cin = s0[1], l = s0[2];
  const std::int64_t n = static_cast<std::int64_t>(samples.size());
  const std::int64_t l2 = l * l;
  Tensor f({n * l2, cin * cout});
  for (std::int64_t i = 0; i < n; ++i) {
    const Tensor& w = samples[static_cast<std::size_t>(i)];
    if (w.shape() != s0) {
      throw TensorError("stack_filters: inconsistent bank shapes " + shape_str(w.shape()) +
                        " vs " + shape_str(s0));
    }
    for (std::int64_t u = 0; u < l2; ++u) {
      for (std::int64_t ci = 0; ci < cin; ++ci) {
        for (std::int64_t co = 0; co < cout; ++co) {
          f[(i * l2 + u) * (cin * cout) + ci * cout + co] = w[(co * cin + ci) * l2 + u];
        }
      }
    }
  }
  return f;
}

PlantedData plant_instance(std::int64_t k, std::int64_t cin, std::int64_t cout, std::int64_t l,
                           std::int64_t samples, bool independent, Rng& rng) {
  if (k < 1 || cin < 1 || cout < 1 || l < 1 || samples < 1) {
    throw TensorError("plant_instance: dimensions must be positive");
  }
  if (independent && k > cin * cout) {
    throw TensorError("plant_instance: independent case requires K <= Cin*Cout, got K=" +
                      std::to_string(k) + " vs " + std::to_string(cin * cout));
  }
  if (!independent && k < 3) {
    throw TensorError("plant_instance: dependent case needs K >= 3 (a_K = a_1 + a_2)");
  }

  PlantedData data;
  data.instance.k = k;
  data.instance.cin = cin;
  data.instance.cout = cout;
  data.instance.l = l;
  data.instance.samples = samples;
  data.instance.independent = independent;

  for (std::int64_t i = 0; i < k; ++i) {
    data.instance.a.push_back(Tensor::randn({cin, cout}, rng));
  }
  if (!independent) {
    Tensor dep({cin, cout});
    for (std::int64_t j = 0; j < cin * cout; ++j) {
      dep[j] = data.instance.a[0][j] + data.instance.a[1][j];
    }
    data.instance.a.back() = dep;
  }

  const std::int64_t l2 = l * l;
  data.instance.b = Tensor::randn({samples, l2, k}, rng);
  data.f = Tensor({samples, l2, cin * cout});
  for (std::int64_t s = 0; s < samples; ++s) {
    for (std::int64_t u = 0; u < l2; ++u) {
      for (std::int64_t j = 0; j < cin * cout; ++j) {
        double acc = 0.0;
        for (std::int64_t kk = 0; kk < k; ++kk) {
          acc += data.instance.b[(s * l2 + u) * k + kk] * data.instance.a[static_cast<std::size_t>(kk)][j];
        }
        data.f[(s * l2 + u) * (cin * cout) + j] = acc;
      }
    }
  }
  return data;
}

RecoveryResult recover_basis_coefficients(const TheoremInstance& instance, const Tensor& f) {
  const std::int64_t k = instance.k, l2 = instance.l * instance.l;
  const std::int64_t cc = instance.cin * instance.cout;
  const std::int64_t s = instance.samples;
  if (f.shape() != Shape{s, l2, cc}) {
    throw TensorError("recover_basis_coefficients: F shape " + shape_str(f.shape()) +
                      " inconsistent with instance");
  }

  // Design matrix: columns are the flattened a_k.
  Tensor design({cc, k});
  for (std::int64_t j = 0; j < cc; ++j) {
    for (std::int64_t kk = 0; kk < k; ++kk) {
      design[j * k + kk] = instance.a[static_cast<std::size_t>(kk)][j];
    }
  }
  LeastSquaresSolver solver(design);

  RecoveryResult result;
  result.b_hat = Tensor({s, l2, k});
  result.used_pseudo_inverse = solver.used_pseudo_inverse();

  std::vector<double> rhs(static_cast<std::size_t>(cc));
  double residual = 0.0;
  for (std::int64_t si = 0; si < s; ++si) {
    for (std::int64_t u = 0; u < l2; ++u) {
      for (std::int64_t j = 0; j < cc; ++j) {
        rhs[static_cast<std::size_t>(j)] = f[(si * l2 + u) * cc + j];
      }
      const std::vector<double> x = solver.solve(rhs);
      for (std::int64_t kk = 0; kk < k; ++kk) {
        result.b_hat[(si * l2 + u) * k + kk] = x[static_cast<std::size_t>(kk)];
      }
      for (std::int64_t j = 0; j < cc; ++j) {
        double recon = 0.0;
        for (std::int64_t kk = 0; kk < k; ++kk) {
          recon += x[static_cast<std::size_t>(kk)] * instance.a[static_cast<std::size_t>(kk)][j];
        }
        residual = std::max(residual, std::fabs(recon - rhs[static_cast<std::size_t>(j)]));
      }
    }
  }
  result.residual = residual;
  return result;
}

double ks_statistic(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) throw TensorError("ks_statistic: empty sample");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xs.size() && j < ys.size()) {
    // Advance both sides through ties before comparing the empirical CDFs.
    const double v = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] == v) ++i;
    while (j < ys.size() && ys[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double ks_critical(double alpha, std::size_t n, std::size_t m) {
  const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
  return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

KsReport distribution_match(const Tensor& planted_b, const Tensor& recovered_b) {
  if (planted_b.rank() != 3 || recovered_b.rank() != 3) {
    throw TensorError("distribution_match: expects [S,L2,K] tensors");
  }
  if (planted_b.dim(1) != recovered_b.dim(1) || planted_b.dim(2) != recovered_b.dim(2)) {
    throw TensorError("distribution_match: coordinate shapes differ");
  }
  const std::int64_t sn = planted_b.dim(0);
  const std::int64_t sm = recovered_b.dim(0);
  if (sn < 500 || sm < 500) {
    throw TensorError("distribution_match: need >= 500 draws per side, got " +
                      std::to_string(sn) + " and " + std::to_string(sm));
  }
  const std::int64_t l2 = planted_b.dim(1), k = planted_b.dim(2);

  KsReport report;
  report.critical_value = ks_critical(0.01, static_cast<std::size_t>(sn), static_cast<std::size_t>(sm));
  report.all_pass = true;
  for (std::int64_t u = 0; u < l2; ++u) {
    for (std::int64_t kk = 0; kk < k; ++kk) {
      std::vector<double> xs(static_cast<std::size_t>(sn)), ys(static_cast<std::size_t>(sm));
      for (std::int64_t s = 0; s < sn; ++s) xs[static_cast<std::size_t>(s)] = planted_b[(s * l2 + u) * k + kk];
      for (std::int64_t s = 0; s < sm; ++s) ys[static_cast<std::size_t>(s)] = recovered_b[(s * l2 + u) * k + kk];
      const double d = ks_statistic(std::move(xs), std::move(ys));
      report.statistics.push_back(d);
      if (d >= report.critical_value) report.all_pass = false;
    }
  }
  return report;
}

std::string sweep_csv(const std::vector<SweepRecord>& records) {
  std::string out = "variant,L,Cin,Cout,K,d_z,d_h,params,quality\n";
  char line[256];
  for (const auto& r : records) {
    std::snprintf(line, sizeof(line), "%s,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%.17g\n",
                  r.variant.c_str(), static_cast<long long>(r.l), static_cast<long long>(r.cin),
                  static_cast<long long>(r.cout), static_cast<long long>(r.k),
                  static_cast<long long>(r.d_z), static_cast<long long>(r.d_h),
                  static_cast<long long>(r.params), r.quality);
    out += line;
  }
  return out;
}

}  // namespace basisgen
