// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "pvlab/common/errors.hpp"
#include "pvlab/diffcore/adam.hpp"
#include "pvlab/diffcore/gradcheck.hpp"
#include "pvlab/diffcore/mlp.hpp"
#include "pvlab/diffcore/tape.hpp"

using namespace pvlab;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.data) v = n(rng);
  return m;
}

// Straight-line forward pass read directly from the named tensors.
std::vector<double> reference_forward(const ParameterBlock& p, const MLPSpec& spec, std::vector<double> h) {
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const std::size_t in = spec.widths[l], out = spec.widths[l + 1];
    auto w = p.view("W" + std::to_string(l));
    auto b = p.view("b" + std::to_string(l));
    std::vector<double> next(out);
    for (std::size_t o = 0; o < out; ++o) {
      long double s = b[o];
      for (std::size_t i = 0; i < in; ++i) s += static_cast<long double>(w[o * in + i]) * h[i];
      double v = static_cast<double>(s);
      if (l + 1 < spec.layers()) {
        if (spec.hidden[l] == Activation::tanh) v = std::tanh(v);
        if (spec.hidden[l] == Activation::relu) v = v > 0 ? v : 0.0;
      }
      next[o] = v;
    }
    h = std::move(next);
  }
  return h;
}

}  // namespace

TEST(ParameterBlock, GlorotBoundsAndLayout) {
  const auto spec = MLPSpec::one_hidden(3, 5, 2);
  const ParameterBlock p = ParameterBlock::glorot(spec.shapes(), 7);
  EXPECT_EQ(p.size(), spec.parameter_count());
  EXPECT_EQ(p.size(), 3u * 5 + 5 + 5 * 2 + 2);
  const double a0 = std::sqrt(6.0 / (3 + 5));
  for (double w : p.view("W0")) EXPECT_LE(std::abs(w), a0);
  EXPECT_EQ(p, ParameterBlock::glorot(spec.shapes(), 7));
  EXPECT_NE(p, ParameterBlock::glorot(spec.shapes(), 8));
}

TEST(ParameterBlock, SaveLoadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "pvlab_test_pb";
  std::filesystem::create_directories(dir);
  const ParameterBlock p = ParameterBlock::glorot(MLPSpec::one_hidden(2, 3, 1).shapes(), 11);
  p.save(dir / "block");
  EXPECT_EQ(ParameterBlock::load(dir / "block"), p);
  std::filesystem::remove_all(dir);
}

TEST(ParameterBlock, RejectsSizeMismatch) {
  EXPECT_THROW(ParameterBlock::from_values({{"w", {2, 2}}}, {1.0, 2.0}, 0), DimensionError);
}

TEST(Mlp, ZeroWeightsReturnBias) {
  const auto spec = MLPSpec::one_hidden(3, 4, 2);
  ParameterBlock p = ParameterBlock::glorot(spec.shapes(), 1);
  p.fill(0.0);
  auto b = p.view("b1");
  b[0] = 0.25;
  b[1] = -1.5;
  const auto y = mlp_forward(p, spec, std::vector<double>{3.0, -2.0, 9.0});
  EXPECT_EQ(y, (std::vector<double>{0.25, -1.5}));
}

TEST(Mlp, IdentityLayer) {
  const auto spec = MLPSpec::dense(2, 2);
  const ParameterBlock p = ParameterBlock::from_values(spec.shapes(), {1, 0, 0, 1, 0, 0}, 0);
  EXPECT_EQ(mlp_forward(p, spec, std::vector<double>{1.0, 2.0}), (std::vector<double>{1.0, 2.0}));
}

TEST(Mlp, MatchesStraightLineEvaluation) {
  const auto spec = MLPSpec::one_hidden(2, 4, 1);
  const Mlp net = Mlp::create(spec, 42);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix x = random_matrix(1, 2, s);
    const std::vector<double> xv(x.data.begin(), x.data.end());
    const auto got = net(xv);
    const auto want = reference_forward(net.params, spec, xv);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_NEAR(got[0], want[0], 1e-14);
  }
}

TEST(Mlp, TapeAndPlainPathsAgreeExactly) {
  const auto spec = MLPSpec::one_hidden(7, 9, 3, Activation::relu);
  const Mlp net = Mlp::create(spec, 3);
  const Matrix x = random_matrix(5, 7, 4);
  Tape tape;
  const Node y = net.record(tape, tape.constant(x));
  EXPECT_EQ(tape.value(y), net(x));
}

TEST(Mlp, DimensionMismatchNamesSizes) {
  const Mlp net = Mlp::create(MLPSpec::dense(3, 1), 0);
  try {
    net(std::vector<double>{1.0, 2.0});
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('3'), std::string::npos);
    EXPECT_NE(msg.find('2'), std::string::npos);
  }
}

TEST(Mlp, SpecValidation) {
  MLPSpec bad;
  bad.widths = {3};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad.widths = {3, 0};
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_EQ(activation_from_string(to_string(Activation::relu)), Activation::relu);
}

TEST(Tape, SquareGradient) {
  Tape t;
  const Node x = t.variable(Matrix(1, 1, 3.0));
  const Node loss = t.sum(t.square(x));
  t.backward(loss);
  EXPECT_DOUBLE_EQ(t.grad(x)(0, 0), 6.0);
}

TEST(Tape, SymmetricSoftmaxJacobian) {
  Tape t;
  const Node x = t.variable(Matrix(1, 2, 0.0));
  const Node loss = t.column(t.softmax_rows(x), 0);
  t.backward(t.sum(loss));
  EXPECT_NEAR(t.grad(x)(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(t.grad(x)(0, 1), -0.25, 1e-15);
}

TEST(Tape, NonScalarLossRejected) {
  Tape t;
  const Node x = t.variable(Matrix(2, 1, 1.0));
  EXPECT_THROW(t.backward(x), DimensionError);
}

TEST(Tape, SoftmaxIsStableForLargeInputs) {
  Tape t;
  const Node s = t.softmax_rows(t.constant(Matrix::from_rows({{1000.0, 999.0, -1000.0}})));
  const Matrix& v = t.value(s);
  EXPECT_TRUE(all_finite(v.data));
  EXPECT_NEAR(v(0, 0) + v(0, 1) + v(0, 2), 1.0, 1e-15);
}

TEST(Tape, BackwardVisitsEachNodeOnce) {
  Tape t;
  const Node x = t.variable(Matrix(2, 2, 0.5));
  const Node a = t.tanh(x);
  const Node b = t.mul(a, a);
  const Node loss = t.sum(t.add(b, a));
  t.backward(loss);
  // four recorded ops; the leaf has nothing to propagate
  EXPECT_EQ(t.backward_visits(), 4u);
  EXPECT_EQ(t.size(), 5u);
}

TEST(Tape, ReplayGivesIdenticalGradients) {
  const Mlp net = Mlp::create(MLPSpec::one_hidden(4, 6, 2), 9);
  const Matrix x = random_matrix(8, 4, 1);
  auto run = [&] {
    Tape t;
    const Node y = net.record(t, t.constant(x));
    t.backward(t.mean(t.square(y)));
    return t.gradient(net.params);
  };
  EXPECT_EQ(run(), run());
}

TEST(Tape, ValueReferencesSurviveGrowth) {
  Tape t;
  const Node x = t.constant(Matrix(3, 3, 1.5));
  const Matrix& ref = t.value(x);
  for (int i = 0; i < 5000; ++i) t.constant(Matrix(1, 1, i));
  EXPECT_EQ(ref(2, 2), 1.5);
}

TEST(Tape, PrimitiveGradientsMatchFiniteDifferences) {
  const Matrix x0 = random_matrix(3, 4, 5, 0.7);
  Matrix mask(3, 4, 0.0);
  for (std::size_t r = 0; r < 3; ++r) {
    mask(r, r) = 1.0;
    mask(r, 3) = 1.0;
  }
  const Matrix c = random_matrix(2, 4, 6);
  const Matrix weights = random_matrix(3, 4, 8);
  auto build = [&](Tape& t, Node x) {
    Node acc = t.sum(t.log_sigmoid(x));
    acc = t.add(acc, t.sum(t.mul(t.sigmoid(x), t.exp(t.scale(x, 0.3)))));
    acc = t.add(acc, t.sum(t.log(t.add_scalar(t.square(x), 1.0))));
    acc = t.add(acc, t.sum(t.masked_log_softmax_rows(x, mask)));
    acc = t.add(acc, t.sum(t.mul(t.masked_softmax_rows(x, mask), t.constant(weights))));
    acc = t.add(acc, t.sum(t.sq_dist(x, t.constant(c))));
    acc = t.add(acc, t.mean(t.row_sum(t.concat_cols(x, t.tanh(x)))));
    acc = t.add(acc, t.sum(t.gather_rows(x, {2, 0, 2})));
    acc = t.add(acc, t.sum(t.scatter_rows(t.relu(x), {1, 0, 3}, 5)));
    acc = t.add(acc, t.mean(t.abs(t.sub(x, t.constant(Matrix(3, 4, 5.0))))));
    acc = t.add(acc, t.sum(t.clamp(t.scale(x, 2.0), -0.5, 0.5)));
    return acc;
  };
  const Objective f = [&](std::span<const double> p) {
    Tape t;
    const Node x = t.variable(Matrix(3, 4, std::vector<double>(p.begin(), p.end())));
    const Node loss = build(t, x);
    t.backward(loss);
    return ValueAndGradient{t.scalar(loss), t.grad(x).data};
  };
  EXPECT_LT(finite_diff_check(f, x0.data, 1e-5).max_relative_error, 1e-4);
}

TEST(Tape, MlpGradientMatchesFiniteDifferences) {
  const auto spec = MLPSpec::one_hidden(3, 5, 2);
  const Mlp net = Mlp::create(spec, 17);
  const Matrix x = random_matrix(6, 3, 2);
  const auto value = [&](const ParameterBlock& p) {
    Tape t;
    return t.scalar(t.mean(t.square(mlp_forward(t, p, spec, t.constant(x)))));
  };
  const auto grad = [&](const ParameterBlock& p) {
    Tape t;
    t.backward(t.mean(t.square(mlp_forward(t, p, spec, t.constant(x)))));
    return t.gradient(p);
  };
  EXPECT_LT(finite_diff_check(value, grad, net.params, 1e-5), 1e-4);
}

TEST(Tape, FrozenForwardCarriesNoParameterGradient) {
  const Mlp net = Mlp::create(MLPSpec::dense(2, 2), 1);
  Tape t;
  const Node x = t.variable(Matrix(1, 2, 1.0));
  t.backward(t.sum(mlp_forward_frozen(t, net.params, net.spec, x)));
  for (double g : t.gradient(net.params)) EXPECT_EQ(g, 0.0);
  EXPECT_NE(t.grad(x)(0, 0), 0.0);
}

TEST(Gradcheck, QuadraticIsExact) {
  const std::vector<double> p{0.3, -1.2, 2.5, 4.0};
  const Objective f = [](std::span<const double> x) {
    ValueAndGradient out;
    for (double v : x) {
      out.value += v * v;
      out.gradient.push_back(2.0 * v);
    }
    return out;
  };
  EXPECT_LT(finite_diff_check(f, p, 1e-5).max_relative_error, 1e-8);
}

TEST(Gradcheck, DetectsWrongGradient) {
  const std::vector<double> p{1.0, 2.0};
  const Objective f = [](std::span<const double> x) {
    return ValueAndGradient{x[0] * x[0] + x[1], {2.0 * x[0], 2.0}};
  };
  const auto r = finite_diff_check(f, p, 1e-5);
  EXPECT_GT(r.max_relative_error, 0.5);
  EXPECT_EQ(r.worst_index, 1u);
}

TEST(Gradcheck, RejectsBadInputs) {
  const std::vector<double> p{1.0};
  const Objective nan_f = [](std::span<const double>) { return ValueAndGradient{std::nan(""), {0.0}}; };
  EXPECT_THROW(finite_diff_check(nan_f, p, 1e-5), NumericalError);
  const Objective ok = [](std::span<const double> x) { return ValueAndGradient{x[0], {1.0}}; };
  EXPECT_THROW(finite_diff_check(ok, p, 0.0), ConfigError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0};
  AdamState s{{0, 0}, {0, 0}, 0};
  ASSERT_TRUE(adam_step(p, std::vector<double>{0.0, 0.0}, s, AdamConfig{0.1}));
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p{1.0, 1.0, 1.0};
  AdamState s{{0, 0, 0}, {0, 0, 0}, 0};
  adam_step(p, std::vector<double>{3.0, -0.01, 250.0}, s, AdamConfig{0.05});
  EXPECT_NEAR(p[0], 0.95, 1e-8);
  EXPECT_NEAR(p[1], 1.05, 1e-6);
  EXPECT_NEAR(p[2], 0.95, 1e-8);
}

TEST(Adam, ConvergesOnQuadratic) {
  std::vector<double> x{0.0};
  AdamState s{{0}, {0}, 0};
  const AdamConfig cfg{0.1};
  // Reference recurrence, written out independently.
  double rx = 0.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 100; ++t) {
    adam_step(x, std::vector<double>{2.0 * (x[0] - 2.0)}, s, cfg);
    const double g = 2.0 * (rx - 2.0);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t)), vh = v / (1.0 - std::pow(0.999, t));
    rx -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
  }
  EXPECT_NEAR(x[0], rx, 1e-12);
  EXPECT_LT(std::abs(x[0] - 2.0), 0.1);
}

TEST(Adam, NonFiniteGradientSkipsStep) {
  std::vector<double> p{1.0};
  AdamState s{{0}, {0}, 0};
  EXPECT_FALSE(adam_step(p, std::vector<double>{std::numeric_limits<double>::infinity()}, s, AdamConfig{}));
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(s.step, 0);
}
