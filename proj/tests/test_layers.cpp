#include <gtest/gtest.h>

#include <cmath>

#include "basisgen/gan.hpp"
#include "basisgen/gradcheck.hpp"
#include "basisgen/layers.hpp"
#include "basisgen/linalg.hpp"
#include "basisgen/lowrank.hpp"

using namespace basisgen;

TEST(SampleLatent, SeededDeterminism) {
  Rng a(42), b(42);
  const Tensor za = sample_latent(a, 16);
  const Tensor zb = sample_latent(b, 16);
  for (std::int64_t i = 0; i < za.size(); ++i) EXPECT_EQ(za[i], zb[i]);
}

TEST(SampleLatent, DifferentSeedsDiffer) {
  Rng a(1), b(2);
  const Tensor za = sample_latent(a, 8);
  const Tensor zb = sample_latent(b, 8);
  bool any = false;
  for (std::int64_t i = 0; i < za.size(); ++i) any = any || za[i] != zb[i];
  EXPECT_TRUE(any);
}

TEST(SampleLatent, MomentsMatchStandardNormal) {
  const std::int64_t d = 64;
  const int n = 100000;
  Rng rng(7);
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  std::vector<Tensor> draws;
  draws.reserve(n);
  for (int i = 0; i < n; ++i) draws.push_back(sample_latent(rng, d));
  for (const Tensor& z : draws) {
    for (std::int64_t j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] += z[j];
  }
  for (std::int64_t j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] /= n;
  for (const Tensor& z : draws) {
    for (std::int64_t j = 0; j < d; ++j) {
      const double c = z[j] - mean[static_cast<std::size_t>(j)];
      var[static_cast<std::size_t>(j)] += c * c;
    }
  }
  for (std::int64_t j = 0; j < d; ++j) {
    EXPECT_GT(mean[static_cast<std::size_t>(j)], -0.02);
    EXPECT_LT(mean[static_cast<std::size_t>(j)], 0.02);
    EXPECT_GT(var[static_cast<std::size_t>(j)] / n, 0.95);
    EXPECT_LT(var[static_cast<std::size_t>(j)] / n, 1.05);
  }
}

TEST(SampleLatent, RejectsBadDimension) {
  Rng rng(1);
  EXPECT_THROW(sample_latent(rng, 0), TensorError);
}

TEST(GenerateBasis, ConstantNetIgnoresLatent) {
  Rng rng(3);
  BasisGeneratorParams gen = BasisGeneratorParams::init(4, 8, 3, 2, rng);
  // Zero the head: output becomes exactly b2 for any z.
  for (std::int64_t i = 0; i < gen.w2.size(); ++i) gen.w2[i] = 0.0;
  Tensor psi0 = Tensor::randn({3 * 3 * 2}, rng);
  gen.b2 = psi0;
  for (int trial = 0; trial < 3; ++trial) {
    const Tensor z = sample_latent(rng, 4);
    const Tensor psi = generate_basis(gen, z);
    EXPECT_EQ(psi.shape(), (Shape{3, 3, 2}));
    for (std::int64_t i = 0; i < psi.size(); ++i) EXPECT_DOUBLE_EQ(psi[i], psi0[i]);
  }
}

TEST(GenerateBasis, DefaultDimsProduceSixtyThreeOutputs) {
  Rng rng(4);
  BasisGeneratorParams gen = BasisGeneratorParams::init(64, 64, 3, 7, rng);
  const Tensor z = sample_latent(rng, 64);
  const Tensor psi = generate_basis(gen, z);
  EXPECT_EQ(psi.shape(), (Shape{3, 3, 7}));
  EXPECT_EQ(psi.size(), 63);
}

TEST(GenerateBasis, VariesAcrossLatents) {
  Rng rng(5);
  BasisGeneratorParams gen = BasisGeneratorParams::init(8, 16, 3, 4, rng);
  const Tensor z1 = sample_latent(rng, 8);
  const Tensor z2 = sample_latent(rng, 8);
  const Tensor p1 = generate_basis(gen, z1);
  const Tensor p2 = generate_basis(gen, z2);
  bool differ = false;
  for (std::int64_t i = 0; i < p1.size(); ++i) differ = differ || p1[i] != p2[i];
  EXPECT_TRUE(differ);

  // Sample variance over many draws is strictly positive.
  double mean = 0.0, sq = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const Tensor z = sample_latent(rng, 8);
    const double v = generate_basis(gen, z)[0];
    mean += v;
    sq += v * v;
  }
  mean /= n;
  EXPECT_GT(sq / n - mean * mean, 0.0);
}

TEST(GenerateBasis, DimensionMismatchRejected) {
  Rng rng(6);
  BasisGeneratorParams gen = BasisGeneratorParams::init(8, 16, 3, 4, rng);
  const Tensor z = sample_latent(rng, 9);
  EXPECT_THROW(generate_basis(gen, z), TensorError);
}

TEST(ReconstructFilters, SingleBasisAllOnesCoefficients) {
  Rng rng(7);
  Tensor psi = Tensor::randn({3, 3, 1}, rng);
  Tensor a = Tensor::full({1, 2, 2}, 1.0);
  const Tensor w = reconstruct_filters(psi, a);
  EXPECT_EQ(w.shape(), (Shape{2, 2, 3, 3}));
  for (std::int64_t co = 0; co < 2; ++co) {
    for (std::int64_t ci = 0; ci < 2; ++ci) {
      for (std::int64_t u = 0; u < 9; ++u) {
        EXPECT_DOUBLE_EQ(w[(co * 2 + ci) * 9 + u], psi[u]);
      }
    }
  }
}

TEST(ReconstructFilters, Bilinearity) {
  Rng rng(8);
  Tensor psi = Tensor::randn({3, 3, 2}, rng);
  Tensor a = Tensor::randn({2, 2, 3}, rng);
  Tensor psi2 = psi;
  for (std::int64_t i = 0; i < psi2.size(); ++i) psi2[i] *= 2.0;
  Tensor a2 = a;
  for (std::int64_t i = 0; i < a2.size(); ++i) a2[i] *= 2.0;

  const Tensor w = reconstruct_filters(psi, a);
  const Tensor w_psi2 = reconstruct_filters(psi2, a);
  const Tensor w_a2 = reconstruct_filters(psi, a2);
  for (std::int64_t i = 0; i < w.size(); ++i) {
    EXPECT_DOUBLE_EQ(w_psi2[i], 2.0 * w[i]);
    EXPECT_DOUBLE_EQ(w_a2[i], 2.0 * w[i]);
  }
}

TEST(ReconstructFilters, MatchesTripleLoopOracle) {
  Rng rng(9);
  const std::int64_t l = 3, k = 2, cin = 2, cout = 2;
  Tensor psi = Tensor::randn({l, l, k}, rng);
  Tensor a = Tensor::randn({k, cin, cout}, rng);
  const Tensor w = reconstruct_filters(psi, a);
  for (std::int64_t co = 0; co < cout; ++co) {
    for (std::int64_t ci = 0; ci < cin; ++ci) {
      for (std::int64_t u = 0; u < l * l; ++u) {
        double acc = 0.0;
        for (std::int64_t kk = 0; kk < k; ++kk) {
          acc += psi[u * k + kk] * a[(kk * cin + ci) * cout + co];
        }
        EXPECT_NEAR(w[(co * cin + ci) * l * l + u], acc, 1e-14);
      }
    }
  }
}

TEST(ReconstructFilters, KMismatchRejected) {
  Rng rng(10);
  Tensor psi = Tensor::randn({3, 3, 2}, rng);
  Tensor a = Tensor::randn({3, 2, 2}, rng);
  EXPECT_THROW(reconstruct_filters(psi, a), TensorError);
}

TEST(StochasticConv, DeltaKernelIsIdentity) {
  // Constant generator emitting a centered delta kernel, K=1, a == 1.
  Rng rng(11);
  StochasticConvLayer layer = StochasticConvLayer::init(1, 1, 3, 1, 4, 4, 1, rng);
  for (std::int64_t i = 0; i < layer.generator.w2.size(); ++i) layer.generator.w2[i] = 0.0;
  for (std::int64_t i = 0; i < layer.generator.b2.size(); ++i) layer.generator.b2[i] = 0.0;
  layer.generator.b2[4] = 1.0;  // center of the 3x3 kernel
  layer.coefficients = Tensor::full({1, 1, 1}, 1.0);

  Tensor x = Tensor::randn({1, 5, 5}, rng);
  Rng draw(1);
  const Tensor y = stochastic_conv(x, layer, draw);
  ASSERT_EQ(y.shape(), x.shape());
  for (std::int64_t i = 0; i < y.size(); ++i) EXPECT_DOUBLE_EQ(y[i], x[i]);
}

TEST(StochasticConv, SameSeedSameOutput) {
  Rng rng(12);
  StochasticConvLayer layer = StochasticConvLayer::init(2, 3, 3, 4, 8, 8, 1, rng);
  Tensor x = Tensor::randn({2, 6, 6}, rng);
  Rng d1(99), d2(99);
  const Tensor y1 = stochastic_conv(x, layer, d1);
  const Tensor y2 = stochastic_conv(x, layer, d2);
  for (std::int64_t i = 0; i < y1.size(); ++i) EXPECT_EQ(y1[i], y2[i]);
}

TEST(StochasticConv, DifferentSeedsProduceDifferentOutputs) {
  Rng rng(13);
  StochasticConvLayer layer = StochasticConvLayer::init(2, 3, 3, 4, 8, 8, 1, rng);
  Tensor x = Tensor::randn({2, 6, 6}, rng);
  Rng d1(1), d2(2);
  const Tensor y1 = stochastic_conv(x, layer, d1);
  const Tensor y2 = stochastic_conv(x, layer, d2);
  double mad = 0.0;
  for (std::int64_t i = 0; i < y1.size(); ++i) mad += std::fabs(y1[i] - y2[i]);
  EXPECT_GT(mad / static_cast<double>(y1.size()), 0.0);
}

TEST(FilterGeneratorDirect, ConstantHeadEmitsFixedBank) {
  Rng rng(14);
  FilterGeneratorParams gen = FilterGeneratorParams::init(4, 8, 3, 2, 2, rng);
  for (std::int64_t i = 0; i < gen.w2.size(); ++i) gen.w2[i] = 0.0;
  Tensor w0 = Tensor::randn({3 * 3 * 2 * 2}, rng);
  gen.b2 = w0;
  const Tensor w = generate_filters_direct(gen, sample_latent(rng, 4));
  EXPECT_EQ(w.shape(), (Shape{2, 2, 3, 3}));
  for (std::int64_t i = 0; i < w.size(); ++i) EXPECT_DOUBLE_EQ(w[i], w0[i]);
}

TEST(FilterGeneratorDirect, HeadSizeScalesWithChannels) {
  Rng rng(15);
  FilterGeneratorParams gen = FilterGeneratorParams::init(64, 64, 3, 8, 8, rng);
  EXPECT_EQ(gen.w2.size(), 64 * 576);
  EXPECT_EQ(gen.w2.size(), 36864);
  // Already 64x the 3x3x8x8 baseline conv's weight count.
  EXPECT_EQ(gen.w2.size() / (3 * 3 * 8 * 8), 64);
}

TEST(FilterGeneratorDirect, SampledBanksHaveHighRank) {
  Rng rng(16);
  const std::int64_t cin = 4, cout = 4, l = 3;
  FilterGeneratorParams gen = FilterGeneratorParams::init(8, 64, l, cin, cout, rng);
  std::vector<Tensor> banks;
  for (int i = 0; i < 50; ++i) {
    banks.push_back(generate_filters_direct(gen, sample_latent(rng, 8)));
  }
  const Tensor f = stack_filters(banks);
  const int rank = effective_rank(f, 1e-6);
  EXPECT_LE(rank, 16);  // bounded by Cin*Cout here
  EXPECT_GT(rank, 7);
}

TEST(CountParams, WideLayerSavesParameters) {
  const ParamCounts c = count_params(3, 256, 256, 7, 64, 64);
  EXPECT_EQ(c.baseline, 589824);
  EXPECT_EQ(c.basis, 458752 + 8255);
  EXPECT_EQ(c.basis, 467007);
  const double saving = 1.0 - static_cast<double>(c.basis) / static_cast<double>(c.baseline);
  EXPECT_NEAR(saving, 0.208, 0.001);
}

TEST(CountParams, NarrowLayerIsNotSmaller) {
  const ParamCounts c = count_params(3, 64, 64, 7, 64, 64);
  EXPECT_EQ(c.baseline, 36864);
  EXPECT_EQ(c.basis, 36927);
  EXPECT_GT(c.basis, c.baseline);
}

TEST(CountParams, FilterGenerationCostExplodes) {
  const ParamCounts c = count_params(3, 256, 256, 7, 64, 64);
  EXPECT_EQ(c.filtergen, 64 * 589824 + 589824 + 4160);
  EXPECT_EQ(c.filtergen, 38342720);
  EXPECT_NEAR(static_cast<double>(c.filtergen) / static_cast<double>(c.baseline), 65.0, 0.1);
  EXPECT_GT(static_cast<double>(c.filtergen) / static_cast<double>(c.basis), 50.0);
}

TEST(CountParams, RejectsNonPositiveDims) {
  EXPECT_THROW(count_params(0, 1, 1, 1, 1, 1), TensorError);
}

TEST(SpanInvariant, ReconstructedSlicesProjectOntoBasis) {
  // Every spatial slice w[c,c',:,:] must sit in span{psi_k} with residual
  // below 1e-10, checked by least squares.
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t l = 3, k = 3, cin = 3, cout = 2;
    BasisGeneratorParams gen = BasisGeneratorParams::init(6, 12, l, k, rng);
    const Tensor psi = generate_basis(gen, sample_latent(rng, 6));
    Tensor a = Tensor::randn({k, cin, cout}, rng);
    const Tensor w = reconstruct_filters(psi, a);

    Tensor design({l * l, k});
    for (std::int64_t u = 0; u < l * l; ++u) {
      for (std::int64_t kk = 0; kk < k; ++kk) design[u * k + kk] = psi[u * k + kk];
    }
    LeastSquaresSolver solver(design);
    for (std::int64_t co = 0; co < cout; ++co) {
      for (std::int64_t ci = 0; ci < cin; ++ci) {
        std::vector<double> slice(static_cast<std::size_t>(l * l));
        for (std::int64_t u = 0; u < l * l; ++u) {
          slice[static_cast<std::size_t>(u)] = w[(co * cin + ci) * l * l + u];
        }
        const std::vector<double> coef = solver.solve(slice);
        double residual = 0.0;
        for (std::int64_t u = 0; u < l * l; ++u) {
          double recon = 0.0;
          for (std::int64_t kk = 0; kk < k; ++kk) {
            recon += design[u * k + kk] * coef[static_cast<std::size_t>(kk)];
          }
          residual = std::max(residual, std::fabs(recon - slice[static_cast<std::size_t>(u)]));
        }
        EXPECT_LT(residual, 1e-10);
      }
    }
  }
}

TEST(RankInvariant, BasisBanksStackToRankAtMostK) {
  Rng rng(18);
  const std::int64_t k = 7;
  StochasticConvLayer layer = StochasticConvLayer::init(8, 8, 3, k, 16, 16, 1, rng);
  std::vector<Tensor> banks;
  Rng draw(77);
  for (int i = 0; i < 200; ++i) {
    const Tensor z = sample_latent(draw, 16);
    banks.push_back(reconstruct_filters(generate_basis(layer.generator, z), layer.coefficients));
  }
  const Tensor f = stack_filters(banks);
  EXPECT_LE(effective_rank(f, 1e-6), static_cast<int>(k));
}

TEST(GradientFlow, ThetaThroughStochasticConvMatchesFiniteDifferences) {
  // Fixed z; d loss / d W1 through psi -> w -> conv.
  Rng rng(19);
  StochasticConvLayer layer = StochasticConvLayer::init(2, 2, 3, 2, 4, 4, 1, rng);
  const Tensor z = sample_latent(rng, 4);
  Tensor x = Tensor::randn({2, 5, 5}, rng);
  Tensor proj = Tensor::randn({2, 5, 5}, rng);

  auto body = [&](Graph& g, Var w1) {
    StochasticConvVars vars{{w1, g.leaf(layer.generator.b1), g.leaf(layer.generator.w2),
                             g.leaf(layer.generator.b2)},
                            g.leaf(layer.coefficients)};
    Var y = stochastic_conv_forward(g, vars, layer, g.leaf(x), z);
    return sum(mul(y, g.leaf(proj)));
  };

  Tensor w1 = layer.generator.w1;
  Graph g;
  Var w1v = g.param(w1);
  g.backward(body(g, w1v));

  const Tensor fd = finite_diff_grad(
      [&](const Tensor& t) {
        Graph g2;
        return body(g2, g2.leaf(t)).item();
      },
      layer.generator.w1, 1e-5);
  EXPECT_LT(gradient_relative_error(w1.grad(), fd.values()), 1e-4);
}

TEST(Coefficients, UntouchedByLatentSampling) {
  Rng rng(20);
  StochasticConvLayer layer = StochasticConvLayer::init(2, 2, 3, 3, 4, 4, 1, rng);
  const Tensor before = layer.coefficients;
  Tensor x = Tensor::randn({2, 5, 5}, rng);
  Rng draw(5);
  for (int i = 0; i < 100; ++i) stochastic_conv(x, layer, draw);
  for (std::int64_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(layer.coefficients[i], before[i]);
  }
}

TEST(SharedLatentMode, AllLayersConsumeIdenticalLatent) {
  Rng rng(21);
  TaskSpec task = TaskSpec::make(TaskId::gmm);
  ModelConfig cfg;
  cfg.channels = 8;
  cfg.d_z = 6;
  cfg.d_h = 6;
  cfg.n_stochastic = 2;
  GeneratorNet net = build_generator(task, cfg, rng);
  net.latent_mode = LatentMode::shared;

  Rng draw(3);
  const auto latents = draw_latents(net, draw);
  ASSERT_EQ(latents.size(), 2u);
  for (std::int64_t i = 0; i < latents[0].size(); ++i) {
    EXPECT_EQ(latents[0][i], latents[1][i]);
  }

  Graph g;
  auto gv = insert_generator_net(g, net, false);
  Tensor a = Tensor::zeros({2, 1, 1});
  a[0] = 1.0;
  generator_forward(g, gv, net, g.leaf(a), latents);
  ASSERT_EQ(net.last_latents.size(), 2u);
  for (std::int64_t i = 0; i < net.last_latents[0].size(); ++i) {
    EXPECT_EQ(net.last_latents[0][i], net.last_latents[1][i]);
  }
}

TEST(PerLayerLatentMode, LayersDrawIndependently) {
  Rng rng(22);
  TaskSpec task = TaskSpec::make(TaskId::gmm);
  ModelConfig cfg;
  cfg.channels = 8;
  cfg.d_z = 6;
  cfg.d_h = 6;
  cfg.n_stochastic = 2;
  GeneratorNet net = build_generator(task, cfg, rng);
  net.latent_mode = LatentMode::per_layer;
  Rng draw(3);
  const auto latents = draw_latents(net, draw);
  ASSERT_EQ(latents.size(), 2u);
  bool differ = false;
  for (std::int64_t i = 0; i < latents[0].size(); ++i) {
    differ = differ || latents[0][i] != latents[1][i];
  }
  EXPECT_TRUE(differ);
}
