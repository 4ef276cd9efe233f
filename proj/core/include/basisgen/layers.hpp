#pragma once

#include <cstdint>

#include "basisgen/graph.hpp"
#include "basisgen/rng.hpp"
#include "basisgen/tensor.hpp"

namespace basisgen {

// Layout conventions used throughout:
//   latent z           [d_z]
//   basis tensor psi   [L,L,K]
//   coefficients a     [K,Cin,Cout]   (deterministic, trained directly)
//   filter bank w      [Cout,Cin,L,L]

/// Draw z with i.i.d. standard normal entries.
Tensor sample_latent(Rng& rng, std::int64_t d_z);

/// Single-hidden-layer network mapping z to the flattened basis tensor.
/// Hidden activation is the leaky rectifier; the output layer is linear so
/// basis elements can take negative values.
struct BasisGeneratorParams {
  Tensor w1;  // [d_h, d_z]
  Tensor b1;  // [d_h]
  Tensor w2;  // [L*L*K, d_h]
  Tensor b2;  // [L*L*K]
  std::int64_t d_z = 64;
  std::int64_t d_h = 64;
  std::int64_t l = 3;
  std::int64_t k = 7;

  /// w1, w2 ~ N(0, 1/fan_in); biases zero.
  static BasisGeneratorParams init(std::int64_t d_z, std::int64_t d_h, std::int64_t l,
                                   std::int64_t k, Rng& rng);
  std::int64_t param_count() const;
};

/// Direct filter generator: same two-layer shape but the output is the full
/// [Cout,Cin,L,L] bank, so the head scales with Cin*Cout.
struct FilterGeneratorParams {
  Tensor w1;  // [d_h, d_z]
  Tensor b1;  // [d_h]
  Tensor w2;  // [L*L*Cin*Cout, d_h]
  Tensor b2;  // [L*L*Cin*Cout]
  std::int64_t d_z = 64;
  std::int64_t d_h = 64;
  std::int64_t l = 3;
  std::int64_t cin = 0;
  std::int64_t cout = 0;

  static FilterGeneratorParams init(std::int64_t d_z, std::int64_t d_h, std::int64_t l,
                                    std::int64_t cin, std::int64_t cout, Rng& rng);
  std::int64_t param_count() const;
};

/// psi = reshape(W2 rect(W1 z + b1) + b2, [L,L,K]); pure in (theta, z).
Tensor generate_basis(const BasisGeneratorParams& gen, const Tensor& z);

/// w[co,ci,u,v] = sum_k psi[u,v,k] a[k,ci,co].
Tensor reconstruct_filters(const Tensor& psi, const Tensor& a);

/// Direct path: w = reshape(W2 rect(W1 z + b1) + b2, [Cout,Cin,L,L]).
Tensor generate_filters_direct(const FilterGeneratorParams& gen, const Tensor& z);

/// Conv layer whose weights are rebuilt as w = psi a from a fresh latent on
/// every forward pass. Coefficients stay deterministic; only optimizer steps
/// change them.
struct StochasticConvLayer {
  Tensor coefficients;  // [K,Cin,Cout]
  BasisGeneratorParams generator;
  int padding = 0;

  /// a ~ N(0, 1/(K*Cin)) so reconstructed filters match standard conv init
  /// variance.
  static StochasticConvLayer init(std::int64_t cin, std::int64_t cout, std::int64_t l,
                                  std::int64_t k, std::int64_t d_z, std::int64_t d_h, int padding,
                                  Rng& rng);
};

/// Draws z, builds psi, reconstructs w, applies conv2d. Value-level path
/// (no gradients); the graph-level building blocks below are what training
/// uses.
Tensor stochastic_conv(const Tensor& x, const StochasticConvLayer& layer, Rng& rng);

// --- graph-level building blocks ------------------------------------------

struct BasisGeneratorVars {
  Var w1, b1, w2, b2;
};

/// Insert generator parameters into a graph; `trainable` selects param vs
/// constant leaves.
BasisGeneratorVars insert_generator(Graph& g, BasisGeneratorParams& gen, bool trainable);

/// psi as a graph node, differentiable w.r.t. the generator parameters.
Var basis_forward(Graph& g, const BasisGeneratorVars& vars, const BasisGeneratorParams& gen,
                  const Tensor& z);

struct FilterGeneratorVars {
  Var w1, b1, w2, b2;
};

FilterGeneratorVars insert_generator(Graph& g, FilterGeneratorParams& gen, bool trainable);

Var filters_direct_forward(Graph& g, const FilterGeneratorVars& vars,
                           const FilterGeneratorParams& gen, const Tensor& z);

struct StochasticConvVars {
  BasisGeneratorVars gen;
  Var coefficients;
};

StochasticConvVars insert_layer(Graph& g, StochasticConvLayer& layer, bool trainable);

/// Forward through the layer with an explicit latent (drawn by the caller).
Var stochastic_conv_forward(Graph& g, const StochasticConvVars& vars,
                            const StochasticConvLayer& layer, Var x, const Tensor& z);

// --- parameter accounting ---------------------------------------------------

struct ParamCounts {
  std::int64_t baseline = 0;   // L^2 Cin Cout
  std::int64_t basis = 0;      // K Cin Cout + generator (biases included)
  std::int64_t filtergen = 0;  // direct generator (biases included)
};

ParamCounts count_params(std::int64_t l, std::int64_t cin, std::int64_t cout, std::int64_t k,
                         std::int64_t d_z, std::int64_t d_h);

}  // namespace basisgen
