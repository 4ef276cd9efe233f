#include "basisgen/gradcheck.hpp"

#include <cmath>

#include "basisgen/gan.hpp"
#include "basisgen/graph.hpp"
#include "basisgen/layers.hpp"

namespace basisgen {

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double h) {
  if (h <= 0.0) throw TensorError("finite_diff_grad: h must be positive");
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double plus = f(probe);
    probe[i] = saved - h;
    const double minus = f(probe);
    probe[i] = saved;
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double gradient_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw TensorError("gradient_relative_error: length mismatch");
  double diff2 = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    diff2 += d * d;
    na2 += a[i] * a[i];
    nb2 += b[i] * b[i];
  }
  const double denom = std::max({std::sqrt(na2), std::sqrt(nb2), 1e-12});
  return std::sqrt(diff2) / denom;
}

namespace {

// Compares the tape gradient w.r.t. x0 against central differences for a
// scalar-valued body. The body must create any auxiliary leaves itself so
// each evaluation runs on a fresh graph.
double one_check(const Tensor& x0, const std::function<Var(Graph&, Var)>& body, double h = 1e-5) {
  Tensor x = x0;
  Graph g;
  Var xv = g.param(x);
  Var loss = body(g, xv);
  x.grad();
  x.zero_grad();
  g.backward(loss);
  const std::vector<double> analytic = x.grad();

  const auto f = [&body](const Tensor& xt) {
    Graph g2;
    Var xv2 = g2.leaf(xt);
    return body(g2, xv2).item();
  };
  const Tensor fd = finite_diff_grad(f, x0, h);
  return gradient_relative_error(analytic, fd.values());
}

// Random projection turns a tensor output into an informative scalar.
Var project(Graph& g, Var y, const Tensor& r) { return sum(mul(y, g.leaf(r))); }

GradCheckRow run_rows(const std::string& name, int instances,
                      const std::function<double(Rng&)>& instance, Rng& rng, double tol) {
  GradCheckRow row;
  row.op = name;
  row.instances = instances;
  for (int i = 0; i < instances; ++i) {
    row.max_rel_error = std::max(row.max_rel_error, instance(rng));
  }
  row.pass = row.max_rel_error < tol;
  return row;
}

}  // namespace

std::vector<GradCheckRow> run_gradcheck(std::uint64_t seed, int instances, double tol) {
  Rng rng(seed);
  std::vector<GradCheckRow> rows;

  rows.push_back(run_rows(
      "conv2d/x", instances,
      [](Rng& r) {
        const std::int64_t cin = 1 + static_cast<std::int64_t>(r.below(3));
        const std::int64_t cout = 1 + static_cast<std::int64_t>(r.below(3));
        const std::int64_t hw = 3 + static_cast<std::int64_t>(r.below(3));
        const std::int64_t l = r.below(2) == 0 ? 1 : 3;
        const int pad = static_cast<int>(r.below(2));
        const std::int64_t ho = hw + 2 * pad - l + 1;
        if (ho < 1) return 0.0;
        Tensor x = Tensor::randn({cin, hw, hw}, r);
        Tensor w = Tensor::randn({cout, cin, l, l}, r);
        Tensor proj = Tensor::randn({cout, ho, ho}, r);
        return one_check(x, [w, pad, proj](Graph& g, Var xv) {
          return project(g, conv2d(xv, g.leaf(w), pad), proj);
        });
      },
      rng, tol));

  rows.push_back(run_rows(
      "conv2d/w", instances,
      [](Rng& r) {
        const std::int64_t cin = 1 + static_cast<std::int64_t>(r.below(3));
        const std::int64_t cout = 1 + static_cast<std::int64_t>(r.below(3));
        const std::int64_t hw = 3 + static_cast<std::int64_t>(r.below(3));
        const std::int64_t l = r.below(2) == 0 ? 1 : 3;
        const int pad = static_cast<int>(r.below(2));
        const std::int64_t ho = hw + 2 * pad - l + 1;
        if (ho < 1) return 0.0;
        Tensor x = Tensor::randn({cin, hw, hw}, r);
        Tensor w = Tensor::randn({cout, cin, l, l}, r);
        Tensor proj = Tensor::randn({cout, ho, ho}, r);
        return one_check(w, [x, pad, proj](Graph& g, Var wv) {
          return project(g, conv2d(g.leaf(x), wv, pad), proj);
        });
      },
      rng, tol));

  rows.push_back(run_rows(
      "generate_basis/theta", instances,
      [](Rng& r) {
        const std::int64_t d_z = 3, d_h = 4, l = 3, k = 2;
        BasisGeneratorParams gen = BasisGeneratorParams::init(d_z, d_h, l, k, r);
        gen.b1 = Tensor::randn({d_h}, r, 0.1);
        gen.b2 = Tensor::randn({l * l * k}, r, 0.1);
        const Tensor z = sample_latent(r, d_z);
        Tensor proj = Tensor::randn({l, l, k}, r);
        double worst = 0.0;
        // Each parameter tensor of the generator in turn.
        worst = std::max(worst, one_check(gen.w1, [gen, z, proj](Graph& g, Var p) {
          BasisGeneratorVars vars{p, g.leaf(gen.b1), g.leaf(gen.w2), g.leaf(gen.b2)};
          return project(g, basis_forward(g, vars, gen, z), proj);
        }));
        worst = std::max(worst, one_check(gen.b1, [gen, z, proj](Graph& g, Var p) {
          BasisGeneratorVars vars{g.leaf(gen.w1), p, g.leaf(gen.w2), g.leaf(gen.b2)};
          return project(g, basis_forward(g, vars, gen, z), proj);
        }));
        worst = std::max(worst, one_check(gen.w2, [gen, z, proj](Graph& g, Var p) {
          BasisGeneratorVars vars{g.leaf(gen.w1), g.leaf(gen.b1), p, g.leaf(gen.b2)};
          return project(g, basis_forward(g, vars, gen, z), proj);
        }));
        worst = std::max(worst, one_check(gen.b2, [gen, z, proj](Graph& g, Var p) {
          BasisGeneratorVars vars{g.leaf(gen.w1), g.leaf(gen.b1), g.leaf(gen.w2), p};
          return project(g, basis_forward(g, vars, gen, z), proj);
        }));
        return worst;
      },
      rng, tol));

  rows.push_back(run_rows(
      "reconstruct_filters/psi+a", instances,
      [](Rng& r) {
        const std::int64_t l = 3, k = 2, cin = 2, cout = 3;
        Tensor psi = Tensor::randn({l, l, k}, r);
        Tensor a = Tensor::randn({k, cin, cout}, r);
        Tensor proj = Tensor::randn({cout, cin, l, l}, r);
        const double e1 = one_check(psi, [a, proj](Graph& g, Var p) {
          return project(g, basis_combine(p, g.leaf(a)), proj);
        });
        const double e2 = one_check(a, [psi, proj](Graph& g, Var av) {
          return project(g, basis_combine(g.leaf(psi), av), proj);
        });
        return std::max(e1, e2);
      },
      rng, tol));

  rows.push_back(run_rows(
      "stochastic_conv/theta+a+x", instances,
      [](Rng& r) {
        const std::int64_t d_z = 3, d_h = 4, l = 3, k = 2, cin = 2, cout = 2, hw = 5;
        StochasticConvLayer layer = StochasticConvLayer::init(cin, cout, l, k, d_z, d_h, 1, r);
        const Tensor z = sample_latent(r, d_z);
        Tensor x = Tensor::randn({cin, hw, hw}, r);
        Tensor proj = Tensor::randn({cout, hw, hw}, r);
        auto forward = [layer, z](Graph& g, Var w1, Var b1, Var w2, Var b2, Var a, Var xv) {
          StochasticConvVars vars{{w1, b1, w2, b2}, a};
          return stochastic_conv_forward(g, vars, layer, xv, z);
        };
        double worst = 0.0;
        worst = std::max(worst, one_check(layer.generator.w1, [&](Graph& g, Var p) {
          return project(g,
                         forward(g, p, g.leaf(layer.generator.b1), g.leaf(layer.generator.w2),
                                 g.leaf(layer.generator.b2), g.leaf(layer.coefficients), g.leaf(x)),
                         proj);
        }));
        worst = std::max(worst, one_check(layer.coefficients, [&](Graph& g, Var p) {
          return project(g,
                         forward(g, g.leaf(layer.generator.w1), g.leaf(layer.generator.b1),
                                 g.leaf(layer.generator.w2), g.leaf(layer.generator.b2), p,
                                 g.leaf(x)),
                         proj);
        }));
        worst = std::max(worst, one_check(x, [&](Graph& g, Var p) {
          return project(g,
                         forward(g, g.leaf(layer.generator.w1), g.leaf(layer.generator.b1),
                                 g.leaf(layer.generator.w2), g.leaf(layer.generator.b2),
                                 g.leaf(layer.coefficients), p),
                         proj);
        }));
        return worst;
      },
      rng, tol));

  rows.push_back(run_rows(
      "d_loss/d_real+d_fake", instances,
      [](Rng& r) {
        Tensor d_real = Tensor::scalar(r.uniform(0.05, 0.95));
        Tensor d_fake = Tensor::scalar(r.uniform(0.05, 0.95));
        const double e1 = one_check(d_real, [d_fake](Graph& g, Var v) {
          return d_loss(v, g.leaf(d_fake));
        });
        const double e2 = one_check(d_fake, [d_real](Graph& g, Var v) {
          return d_loss(g.leaf(d_real), v);
        });
        return std::max(e1, e2);
      },
      rng, tol));

  rows.push_back(run_rows(
      "g_loss/both_objectives", instances,
      [](Rng& r) {
        Tensor d_fake = Tensor::scalar(r.uniform(0.05, 0.95));
        const double e1 = one_check(d_fake, [](Graph&, Var v) {
          return g_loss(v, Objective::saturating);
        });
        const double e2 = one_check(d_fake, [](Graph&, Var v) {
          return g_loss(v, Objective::non_saturating);
        });
        return std::max(e1, e2);
      },
      rng, tol));

  rows.push_back(run_rows(
      "diversity_regularizer/b", instances,
      [](Rng& r) {
        const std::int64_t n = 6;
        Tensor z1 = Tensor::randn({4}, r);
        Tensor z2 = Tensor::randn({4}, r);
        Tensor b1 = Tensor::randn({n}, r);
        Tensor b2 = Tensor::randn({n}, r);
        return one_check(b1, [z1, z2, b2](Graph& g, Var v) {
          return diversity_regularizer(z1, z2, v, g.leaf(b2));
        });
      },
      rng, tol));

  return rows;
}

}  // namespace basisgen
