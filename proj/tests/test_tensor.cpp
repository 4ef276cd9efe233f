#include <gtest/gtest.h>

#include <cmath>

#include "basisgen/checkpoint.hpp"
#include "basisgen/gradcheck.hpp"
#include "basisgen/graph.hpp"
#include "basisgen/io.hpp"
#include "basisgen/optim.hpp"
#include "basisgen/rng.hpp"

using namespace basisgen;

namespace {

// Six nested loops, no shortcuts. Written before conv2d itself.
Tensor conv2d_naive(const Tensor& x, const Tensor& w, int padding) {
  const std::int64_t cin = x.dim(0), h = x.dim(1), ww = x.dim(2);
  const std::int64_t cout = w.dim(0), l = w.dim(2);
  const std::int64_t ho = h + 2 * padding - l + 1;
  const std::int64_t wo = ww + 2 * padding - l + 1;
  Tensor out({cout, ho, wo});
  for (std::int64_t co = 0; co < cout; ++co) {
    for (std::int64_t i = 0; i < ho; ++i) {
      for (std::int64_t j = 0; j < wo; ++j) {
        double acc = 0.0;
        for (std::int64_t ci = 0; ci < cin; ++ci) {
          for (std::int64_t u = 0; u < l; ++u) {
            for (std::int64_t v = 0; v < l; ++v) {
              const std::int64_t hi = i + u - padding;
              const std::int64_t wi = j + v - padding;
              if (hi < 0 || hi >= h || wi < 0 || wi >= ww) continue;
              acc += x[ci * h * ww + hi * ww + wi] * w[((co * cin + ci) * l + u) * l + v];
            }
          }
        }
        out[(co * ho + i) * wo + j] = acc;
      }
    }
  }
  return out;
}

Tensor conv_value(const Tensor& x, const Tensor& w, int padding) {
  Graph g;
  return conv2d(g.leaf(x), g.leaf(w), padding).value();
}

}  // namespace

TEST(Conv2d, ZeroInputGivesZeroOutput) {
  Rng rng(1);
  Tensor x = Tensor::zeros({2, 4, 4});
  Tensor w = Tensor::randn({3, 2, 3, 3}, rng);
  const Tensor y = conv_value(x, w, 1);
  for (std::int64_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], 0.0);
}

TEST(Conv2d, ScalarProduct) {
  Tensor x({1, 1, 1}, {3.0});
  Tensor w({1, 1, 1, 1}, {2.0});
  const Tensor y = conv_value(x, w, 0);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_DOUBLE_EQ(y[0], 6.0);
}

TEST(Conv2d, MatchesNaiveLoopOracle) {
  Rng rng(42);
  Tensor x = Tensor::randn({2, 5, 5}, rng);
  Tensor w = Tensor::randn({3, 2, 3, 3}, rng);
  const Tensor fast = conv_value(x, w, 1);
  const Tensor slow = conv2d_naive(x, w, 1);
  ASSERT_EQ(fast.shape(), slow.shape());
  for (std::int64_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-12);
}

TEST(Conv2d, BatchedMatchesPerSample) {
  Rng rng(5);
  Tensor xb = Tensor::randn({3, 2, 4, 4}, rng);
  Tensor w = Tensor::randn({2, 2, 3, 3}, rng);
  Graph g;
  const Tensor yb = conv2d(g.leaf(xb), g.leaf(w), 1).value();
  for (std::int64_t n = 0; n < 3; ++n) {
    Tensor xi({2, 4, 4});
    for (std::int64_t i = 0; i < xi.size(); ++i) xi[i] = xb[n * xi.size() + i];
    const Tensor yi = conv_value(xi, w, 1);
    for (std::int64_t i = 0; i < yi.size(); ++i) EXPECT_DOUBLE_EQ(yb[n * yi.size() + i], yi[i]);
  }
}

TEST(Conv2d, LinearityInBothArguments) {
  Rng rng(7);
  Tensor x1 = Tensor::randn({2, 5, 5}, rng);
  Tensor x2 = Tensor::randn({2, 5, 5}, rng);
  Tensor w1 = Tensor::randn({3, 2, 3, 3}, rng);
  Tensor w2 = Tensor::randn({3, 2, 3, 3}, rng);

  Tensor x_sum({2, 5, 5});
  for (std::int64_t i = 0; i < x_sum.size(); ++i) x_sum[i] = x1[i] + x2[i];
  Tensor w_sum({3, 2, 3, 3});
  for (std::int64_t i = 0; i < w_sum.size(); ++i) w_sum[i] = w1[i] + w2[i];

  const Tensor lhs_x = conv_value(x_sum, w1, 1);
  const Tensor a = conv_value(x1, w1, 1);
  const Tensor b = conv_value(x2, w1, 1);
  for (std::int64_t i = 0; i < lhs_x.size(); ++i) EXPECT_NEAR(lhs_x[i], a[i] + b[i], 1e-12);

  const Tensor lhs_w = conv_value(x1, w_sum, 1);
  const Tensor c = conv_value(x1, w2, 1);
  for (std::int64_t i = 0; i < lhs_w.size(); ++i) EXPECT_NEAR(lhs_w[i], a[i] + c[i], 1e-12);
}

TEST(Conv2d, ShapeErrorsNameOffendingDimensions) {
  Rng rng(3);
  Tensor x = Tensor::randn({2, 4, 4}, rng);
  Tensor w = Tensor::randn({3, 5, 3, 3}, rng);
  Graph g;
  try {
    conv2d(g.leaf(x), g.leaf(w), 0);
    FAIL() << "expected TensorError";
  } catch (const TensorError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("5"), std::string::npos);
  }
}

TEST(Conv2d, RejectsEvenKernelAndNegativePadding) {
  Rng rng(3);
  Tensor x = Tensor::randn({1, 4, 4}, rng);
  Tensor we = Tensor::randn({1, 1, 2, 2}, rng);
  Graph g;
  EXPECT_THROW(conv2d(g.leaf(x), g.leaf(we), 0), TensorError);
  Tensor w = Tensor::randn({1, 1, 3, 3}, rng);
  Graph g2;
  EXPECT_THROW(conv2d(g2.leaf(x), g2.leaf(w), -1), TensorError);
}

TEST(Backward, SumGivesOnes) {
  Rng rng(11);
  Tensor x = Tensor::randn({3, 4}, rng);
  Graph g;
  Var xv = g.param(x);
  Var loss = sum(xv);
  g.backward(loss);
  for (double v : x.grad()) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Backward, SumOfSquaresGivesTwoX) {
  Rng rng(12);
  Tensor x = Tensor::randn({6}, rng);
  Graph g;
  Var xv = g.param(x);
  Var loss = sum(mul(xv, xv));
  g.backward(loss);
  for (std::int64_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x.grad()[i], 2.0 * x[i], 1e-12);
}

TEST(Backward, NonScalarLossRejected) {
  Rng rng(13);
  Tensor x = Tensor::randn({3}, rng);
  Graph g;
  Var xv = g.param(x);
  EXPECT_THROW(g.backward(xv), TensorError);
}

TEST(Backward, CompositeNetMatchesFiniteDifferences) {
  // conv -> rectifier -> affine -> mean, differentiated w.r.t. the input.
  Rng rng(21);
  Tensor w = Tensor::randn({2, 2, 3, 3}, rng);
  Tensor proj = Tensor::randn({2}, rng);
  Tensor x0 = Tensor::randn({2, 5, 5}, rng);

  auto body = [&](Graph& g, Var xv) {
    Var y = leaky_relu(conv2d(xv, g.leaf(w), 1));
    Var feats = spatial_mean(y);
    return mean(mul(feats, g.leaf(proj)));
  };

  Tensor x = x0;
  Graph g;
  Var xv = g.param(x);
  g.backward(body(g, xv));

  const Tensor fd = finite_diff_grad(
      [&](const Tensor& xt) {
        Graph g2;
        return body(g2, g2.leaf(xt)).item();
      },
      x0, 1e-5);
  EXPECT_LT(gradient_relative_error(x.grad(), fd.values()), 1e-4);
}

TEST(Backward, FanOutAccumulatesBranchGradients) {
  Rng rng(22);
  Tensor x0 = Tensor::randn({4}, rng);
  Tensor r1 = Tensor::randn({4}, rng);
  Tensor r2 = Tensor::randn({4}, rng);

  auto body = [&](Graph& g, Var xv) {
    Var branch1 = sum(mul(xv, g.leaf(r1)));
    Var branch2 = sum(mul(mul(xv, xv), g.leaf(r2)));
    return add(branch1, branch2);
  };

  Tensor x = x0;
  Graph g;
  Var xv = g.param(x);
  g.backward(body(g, xv));

  const Tensor fd = finite_diff_grad(
      [&](const Tensor& xt) {
        Graph g2;
        return body(g2, g2.leaf(xt)).item();
      },
      x0, 1e-5);
  EXPECT_LT(gradient_relative_error(x.grad(), fd.values()), 1e-6);
}

TEST(Backward, DeterministicAcrossRuns) {
  auto run = [] {
    Rng rng(31);
    Tensor x = Tensor::randn({2, 4, 4}, rng);
    Tensor w = Tensor::randn({2, 2, 3, 3}, rng);
    Graph g;
    Var xv = g.param(x);
    Var loss = sum(leaky_relu(conv2d(xv, g.leaf(w), 1)));
    g.backward(loss);
    return std::make_pair(loss.item(), x.grad());
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(FiniteDiff, SumHasUnitGradient) {
  Rng rng(41);
  Tensor x = Tensor::randn({5}, rng);
  const Tensor fd = finite_diff_grad(
      [](const Tensor& t) {
        double s = 0.0;
        for (std::int64_t i = 0; i < t.size(); ++i) s += t[i];
        return s;
      },
      x, 1e-5);
  for (std::int64_t i = 0; i < fd.size(); ++i) EXPECT_NEAR(fd[i], 1.0, 1e-10);
}

TEST(FiniteDiff, SquareAtThree) {
  Tensor x({1}, {3.0});
  const Tensor fd = finite_diff_grad([](const Tensor& t) { return t[0] * t[0]; }, x, 1e-5);
  EXPECT_NEAR(fd[0], 6.0, 1e-8);
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  Tensor x({1}, {1.0});
  EXPECT_THROW(finite_diff_grad([](const Tensor& t) { return t[0]; }, x, 0.0), TensorError);
}

TEST(GradSuite, AllOpsPassAtTolerance) {
  const auto rows = run_gradcheck(907, 20, 1e-4);
  for (const auto& row : rows) {
    EXPECT_TRUE(row.pass) << row.op << " max_rel_error=" << row.max_rel_error;
    EXPECT_EQ(row.instances, 20);
  }
}

TEST(Adam, ZeroGradLeavesParamsUnchanged) {
  Tensor p({3}, {1.0, -2.0, 0.5});
  AdamState state = AdamState::for_tensor(p);
  const Tensor before = p;
  adam_step(p, {0.0, 0.0, 0.0}, state);
  for (std::int64_t i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(p[i], before[i]);
}

TEST(Adam, FirstStepMovesByAlphaTimesSign) {
  for (const double g : {0.3, -1.7, 42.0}) {
    Tensor p({1}, {0.0});
    AdamState state = AdamState::for_tensor(p);
    state.alpha = 2e-4;
    adam_step(p, {g}, state);
    const double expected = -state.alpha * (g > 0 ? 1.0 : -1.0);
    EXPECT_NEAR(p[0], expected, std::fabs(state.alpha) * 1e-6) << "g=" << g;
  }
}

TEST(Adam, TrajectoryMatchesScalarReference) {
  // Scalar reference implementation of Adam on f(p) = p^2.
  double ref_p = 1.0, m = 0.0, v = 0.0;
  const double alpha = 1e-2, beta1 = 0.5, beta2 = 0.999, eps = 1e-8;

  Tensor p({1}, {1.0});
  AdamState state = AdamState::for_tensor(p, alpha);

  for (int t = 1; t <= 100; ++t) {
    const double g_ref = 2.0 * ref_p;
    m = beta1 * m + (1 - beta1) * g_ref;
    v = beta2 * v + (1 - beta2) * g_ref * g_ref;
    const double mhat = m / (1 - std::pow(beta1, t));
    const double vhat = v / (1 - std::pow(beta2, t));
    ref_p -= alpha * mhat / (std::sqrt(vhat) + eps);

    adam_step(p, {2.0 * p[0]}, state);
    ASSERT_NEAR(p[0], ref_p, 1e-12) << "step " << t;
  }
}

TEST(Adam, NanGradientIsAnError) {
  Tensor p({1}, {0.0});
  AdamState state = AdamState::for_tensor(p);
  EXPECT_THROW(adam_step(p, {std::nan("")}, state), TensorError);
}

TEST(Rng, SeededStreamsAreReproducibleAndDistinct) {
  Rng a(42), b(42), c(43);
  bool any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.normal();
    EXPECT_EQ(va, b.normal());
    if (va != c.normal()) any_diff = true;
  }
  EXPECT_TRUE(any_diff);
}

TEST(Checkpoint, RoundTripsTensors) {
  Rng rng(50);
  Checkpoint cp;
  cp.put("layer0.W1", Tensor::randn({4, 3}, rng));
  cp.put("layer0.a", Tensor::randn({2, 3, 3}, rng));
  const std::string path = testing::TempDir() + "roundtrip.bgt1";
  cp.save(path);
  const Checkpoint loaded = Checkpoint::load(path);
  ASSERT_TRUE(loaded.contains("layer0.W1"));
  const Tensor& orig = cp.get("layer0.a");
  const Tensor& back = loaded.get("layer0.a");
  ASSERT_EQ(orig.shape(), back.shape());
  for (std::int64_t i = 0; i < orig.size(); ++i) EXPECT_EQ(orig[i], back[i]);
}

TEST(Checkpoint, RejectsUnknownMagic) {
  const std::string path = testing::TempDir() + "bad_magic.bgt1";
  write_text_file(path, "NOPE and then some bytes");
  EXPECT_THROW(Checkpoint::load(path), TensorError);
}

TEST(Checkpoint, WriteIsByteStable) {
  Rng rng(51);
  Checkpoint cp;
  cp.put("t", Tensor::randn({5, 5}, rng));
  const std::string p1 = testing::TempDir() + "stable1.bgt1";
  const std::string p2 = testing::TempDir() + "stable2.bgt1";
  cp.save(p1);
  cp.save(p2);
  EXPECT_EQ(read_text_file(p1), read_text_file(p2));
}
