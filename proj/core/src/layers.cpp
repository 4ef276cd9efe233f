#include "basisgen/layers.hpp"

#include <cmath>

namespace basisgen {

Tensor sample_latent(Rng& rng, std::int64_t d_z) {
  if (d_z < 1) throw TensorError("sample_latent: d_z must be >= 1");
  Tensor z({d_z});
  for (std::int64_t i = 0; i < d_z; ++i) z[i] = rng.normal();
  return z;
}

BasisGeneratorParams BasisGeneratorParams::init(std::int64_t d_z, std::int64_t d_h, std::int64_t l,
                                                std::int64_t k, Rng& rng) {
  BasisGeneratorParams p;
  p.d_z = d_z;
  p.d_h = d_h;
  p.l = l;
  p.k = k;
  const std::int64_t out = l * l * k;
  p.w1 = Tensor::randn({d_h, d_z}, rng, 1.0 / std::sqrt(static_cast<double>(d_z)));
  p.b1 = Tensor::zeros({d_h});
  p.w2 = Tensor::randn({out, d_h}, rng, 1.0 / std::sqrt(static_cast<double>(d_h)));
  p.b2 = Tensor::zeros({out});
  return p;
}

std::int64_t BasisGeneratorParams::param_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size();
}

FilterGeneratorParams FilterGeneratorParams::init(std::int64_t d_z, std::int64_t d_h,
                                                  std::int64_t l, std::int64_t cin,
                                                  std::int64_t cout, Rng& rng) {
  FilterGeneratorParams p;
  p.d_z = d_z;
  p.d_h = d_h;
  p.l = l;
  p.cin = cin;
  p.cout = cout;
  const std::int64_t out = l * l * cin * cout;
  p.w1 = Tensor::randn({d_h, d_z}, rng, 1.0 / std::sqrt(static_cast<double>(d_z)));
  p.b1 = Tensor::zeros({d_h});
  p.w2 = Tensor::randn({out, d_h}, rng, 1.0 / std::sqrt(static_cast<double>(d_h)));
  p.b2 = Tensor::zeros({out});
  return p;
}

std::int64_t FilterGeneratorParams::param_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size();
}

namespace {

// Shared two-layer forward: W2 rect(W1 z + b1) + b2.
Var two_layer_forward(Graph& g, Var w1, Var b1, Var w2, Var b2, const Tensor& z) {
  Var zv = g.leaf(z);
  Var hidden = leaky_relu(add(matvec(w1, zv), b1));
  return add(matvec(w2, hidden), b2);
}

}  // namespace

BasisGeneratorVars insert_generator(Graph& g, BasisGeneratorParams& gen, bool trainable) {
  if (trainable) {
    return {g.param(gen.w1), g.param(gen.b1), g.param(gen.w2), g.param(gen.b2)};
  }
  return {g.leaf(gen.w1), g.leaf(gen.b1), g.leaf(gen.w2), g.leaf(gen.b2)};
}

Var basis_forward(Graph& g, const BasisGeneratorVars& vars, const BasisGeneratorParams& gen,
                  const Tensor& z) {
  if (z.size() != gen.d_z) {
    throw TensorError("generate_basis: latent length " + std::to_string(z.size()) +
                      " != d_z " + std::to_string(gen.d_z));
  }
  Var flat = two_layer_forward(g, vars.w1, vars.b1, vars.w2, vars.b2, z);
  return reshape(flat, {gen.l, gen.l, gen.k});
}

Tensor generate_basis(const BasisGeneratorParams& gen, const Tensor& z) {
  Graph g;
  BasisGeneratorParams copy = gen;
  auto vars = insert_generator(g, copy, false);
  return basis_forward(g, vars, gen, z).value();
}

FilterGeneratorVars insert_generator(Graph& g, FilterGeneratorParams& gen, bool trainable) {
  if (trainable) {
    return {g.param(gen.w1), g.param(gen.b1), g.param(gen.w2), g.param(gen.b2)};
  }
  return {g.leaf(gen.w1), g.leaf(gen.b1), g.leaf(gen.w2), g.leaf(gen.b2)};
}

Var filters_direct_forward(Graph& g, const FilterGeneratorVars& vars,
                           const FilterGeneratorParams& gen, const Tensor& z) {
  if (z.size() != gen.d_z) {
    throw TensorError("generate_filters_direct: latent length " + std::to_string(z.size()) +
                      " != d_z " + std::to_string(gen.d_z));
  }
  Var flat = two_layer_forward(g, vars.w1, vars.b1, vars.w2, vars.b2, z);
  return reshape(flat, {gen.cout, gen.cin, gen.l, gen.l});
}

Tensor generate_filters_direct(const FilterGeneratorParams& gen, const Tensor& z) {
  Graph g;
  FilterGeneratorParams copy = gen;
  auto vars = insert_generator(g, copy, false);
  return filters_direct_forward(g, vars, gen, z).value();
}

Tensor reconstruct_filters(const Tensor& psi, const Tensor& a) {
  Graph g;
  return basis_combine(g.leaf(psi), g.leaf(a)).value();
}

StochasticConvLayer StochasticConvLayer::init(std::int64_t cin, std::int64_t cout, std::int64_t l,
                                              std::int64_t k, std::int64_t d_z, std::int64_t d_h,
                                              int padding, Rng& rng) {
  StochasticConvLayer layer;
  layer.generator = BasisGeneratorParams::init(d_z, d_h, l, k, rng);
  layer.coefficients =
      Tensor::randn({k, cin, cout}, rng, 1.0 / std::sqrt(static_cast<double>(k * cin)));
  layer.padding = padding;
  return layer;
}

StochasticConvVars insert_layer(Graph& g, StochasticConvLayer& layer, bool trainable) {
  StochasticConvVars vars;
  vars.gen = insert_generator(g, layer.generator, trainable);
  vars.coefficients = trainable ? g.param(layer.coefficients) : g.leaf(layer.coefficients);
  return vars;
}

Var stochastic_conv_forward(Graph& g, const StochasticConvVars& vars,
                            const StochasticConvLayer& layer, Var x, const Tensor& z) {
  Var psi = basis_forward(g, vars.gen, layer.generator, z);
  Var w = basis_combine(psi, vars.coefficients);
  return conv2d(x, w, layer.padding);
}

Tensor stochastic_conv(const Tensor& x, const StochasticConvLayer& layer, Rng& rng) {
  Graph g;
  StochasticConvLayer copy = layer;
  auto vars = insert_layer(g, copy, false);
  const Tensor z = sample_latent(rng, layer.generator.d_z);
  return stochastic_conv_forward(g, vars, copy, g.leaf(x), z).value();
}

ParamCounts count_params(std::int64_t l, std::int64_t cin, std::int64_t cout, std::int64_t k,
                         std::int64_t d_z, std::int64_t d_h) {
  if (l < 1 || cin < 1 || cout < 1 || k < 1 || d_z < 1 || d_h < 1) {
    throw TensorError("count_params: all dimensions must be positive");
  }
  ParamCounts c;
  const std::int64_t l2 = l * l;
  c.baseline = l2 * cin * cout;
  c.basis = k * cin * cout + (d_h * d_z + d_h) + (l2 * k * d_h + l2 * k);
  c.filtergen = (d_h * d_z + d_h) + (l2 * cin * cout * d_h + l2 * cin * cout);
  return c;
}

}  // namespace basisgen
