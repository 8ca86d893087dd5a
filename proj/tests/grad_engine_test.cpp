#include "debias/grad_engine.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace {

using debias::DenseVector;
using debias::SeededRng;

TEST(ParamVector, LayoutAndAccess) {
  auto pv = debias::ParamVector::zeros({{"w", 3}, {"b", 1}});
  EXPECT_EQ(pv.size(), 4u);
  for (double x : pv.values) EXPECT_DOUBLE_EQ(x, 0.0);
  pv.set("w", DenseVector{1, 2, 3});
  pv.set_scalar("b", -0.5);
  EXPECT_EQ(pv.get("w"), (DenseVector{1, 2, 3}));
  EXPECT_DOUBLE_EQ(pv.get_scalar("b"), -0.5);
  EXPECT_DOUBLE_EQ(pv.values[3], -0.5);
  EXPECT_EQ(pv.segment("b").offset, 3u);
  EXPECT_EQ(pv.segment("w").length, 3u);
}

TEST(ParamVector, Validation) {
  EXPECT_THROW(debias::ParamVector::zeros({{"w", 2}, {"w", 1}}),
               std::invalid_argument);
  auto pv = debias::ParamVector::zeros({{"w", 2}});
  EXPECT_THROW(pv.get("nope"), std::invalid_argument);
  EXPECT_THROW(pv.set("w", DenseVector{1}), std::invalid_argument);
  EXPECT_THROW(pv.get_scalar("w"), std::invalid_argument);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With zero moments and gradient g, the bias-corrected first step is
  // lr * g / (|g| + eps) regardless of the gradient's magnitude.
  debias::AdamState st(1, 0.1);
  DenseVector p{0.0};
  debias::adam_step(st, p, DenseVector{1.0}, 1.0);
  EXPECT_DOUBLE_EQ(p[0], -0.1 / (1.0 + 1e-8));
  EXPECT_EQ(st.t, 1);

  debias::AdamState st2(1, 0.1);
  DenseVector p2{0.0};
  debias::adam_step(st2, p2, DenseVector{250.0}, 1.0);
  EXPECT_NEAR(p2[0], -0.1, 1e-9);
}

TEST(Adam, MatchesReferenceLoop) {
  SeededRng rng(5);
  const std::size_t n = 4;
  debias::AdamState st(n, 0.05);
  DenseVector p(n, 0.0), rm(n, 0.0), rv(n, 0.0), rp(n, 0.0);
  for (int t = 1; t <= 25; ++t) {
    DenseVector g(n);
    for (auto& e : g) e = debias::sample_normal(rng, 0.0, 1.0);
    debias::adam_step(st, p, g, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      rm[i] = 0.9 * rm[i] + 0.1 * g[i];
      rv[i] = 0.999 * rv[i] + 0.001 * g[i] * g[i];
      const double mhat = rm[i] / (1.0 - std::pow(0.9, t));
      const double vhat = rv[i] / (1.0 - std::pow(0.999, t));
      rp[i] -= 0.05 * mhat / (std::sqrt(vhat) + 1e-8);
    }
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(p[i], rp[i], 1e-12);
  }
}

TEST(Adam, ZeroLrScaleFreezesParamsButAdvancesMoments) {
  debias::AdamState st(1, 0.1);
  DenseVector p{2.0};
  debias::adam_step(st, p, DenseVector{1.0}, 0.0);
  EXPECT_DOUBLE_EQ(p[0], 2.0);
  EXPECT_EQ(st.t, 1);
  EXPECT_DOUBLE_EQ(st.m[0], 0.1);
  EXPECT_DOUBLE_EQ(st.v[0], 0.001);
  // The next full-rate step sees warmed moments: with the same gradient both
  // bias-corrected estimates are exactly those of a fresh first step.
  debias::adam_step(st, p, DenseVector{1.0}, 1.0);
  EXPECT_NEAR(p[0], 2.0 - 0.1 / (1.0 + 1e-8), 1e-12);
}

TEST(Adam, NonFiniteGradientThrows) {
  debias::AdamState st(2, 0.1);
  DenseVector p{0.0, 0.0};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(debias::adam_step(st, p, DenseVector{0.0, nan}, 1.0),
               debias::DivergenceError);
  EXPECT_THROW(debias::adam_step(st, p, DenseVector{inf, 0.0}, 1.0),
               debias::DivergenceError);
}

TEST(Adam, SizeMismatchThrows) {
  debias::AdamState st(2, 0.1);
  DenseVector p{0.0, 0.0};
  EXPECT_THROW(debias::adam_step(st, p, DenseVector{1.0}, 1.0),
               std::invalid_argument);
  DenseVector wrong{0.0};
  EXPECT_THROW(debias::adam_step(st, wrong, DenseVector{1.0, 1.0}, 1.0),
               std::invalid_argument);
}

TEST(Schedule, ConstantEta) {
  const debias::ScheduleSpec spec{0.1, debias::EtaMode::constant, 0.0};
  const auto v1 = debias::schedule_values(spec, 1);
  EXPECT_DOUBLE_EQ(v1.alpha, 0.1);
  EXPECT_DOUBLE_EQ(v1.eta_scale, 1.0);
  const auto v100 = debias::schedule_values(spec, 100);
  EXPECT_DOUBLE_EQ(v100.alpha, 1.0);
  EXPECT_DOUBLE_EQ(v100.eta_scale, 1.0);
}

TEST(Schedule, InverseTimeEta) {
  const debias::ScheduleSpec spec{1.0, debias::EtaMode::inverse_t, 1000.0};
  EXPECT_DOUBLE_EQ(debias::schedule_values(spec, 500).eta_scale, 1.0);
  EXPECT_DOUBLE_EQ(debias::schedule_values(spec, 1000).eta_scale, 1.0);
  EXPECT_DOUBLE_EQ(debias::schedule_values(spec, 2000).eta_scale, 0.5);
  EXPECT_DOUBLE_EQ(debias::schedule_values(spec, 4000).eta_scale, 0.25);
  EXPECT_DOUBLE_EQ(debias::schedule_values(spec, 4).alpha, 2.0);
}

TEST(Schedule, StepIndexStartsAtOne) {
  const debias::ScheduleSpec spec{0.1, debias::EtaMode::constant, 0.0};
  EXPECT_THROW(debias::schedule_values(spec, 0), std::invalid_argument);
  EXPECT_THROW(debias::schedule_values(spec, -3), std::invalid_argument);
}

TEST(Compose, HandWorkedExample) {
  // grad_p = (1,0), grad_a = (1,1), alpha = 1:
  //   proj = 0.5*(1,1), d = (1,0) - (0.5,0.5) - (1,1) = (-0.5,-1.5)
  debias::DebiasGradients g;
  g.grad_p = {1.0, 0.0};
  g.grad_a_w = {1.0, 1.0};
  const DenseVector d = debias::compose_debias_direction(g, 1.0);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_DOUBLE_EQ(d[0], -0.5);
  EXPECT_DOUBLE_EQ(d[1], -1.5);
}

TEST(Compose, AntiHelpfulnessIdentity) {
  // d . grad_a = -alpha * ||grad_a||^2: the composed direction never has a
  // positive component along the adversary's descent direction.
  SeededRng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 2 + rng.uniform_index(9);
    debias::DebiasGradients g;
    g.grad_p.resize(dim);
    g.grad_a_w.resize(dim);
    for (auto& e : g.grad_p) e = debias::sample_normal(rng, 0.0, 3.0);
    for (auto& e : g.grad_a_w) e = debias::sample_normal(rng, 0.0, 3.0);
    const double alpha = trial % 2 == 0 ? 0.3 : 1.7;
    const DenseVector d = debias::compose_debias_direction(g, alpha);
    const double lhs = debias::dot(d, g.grad_a_w);
    const double rhs = -alpha * debias::squared_norm(g.grad_a_w);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(rhs) + 1e-12);
  }
}

TEST(Compose, OrthogonalWhenAlphaZero) {
  SeededRng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 2 + rng.uniform_index(9);
    debias::DebiasGradients g;
    g.grad_p.resize(dim);
    g.grad_a_w.resize(dim);
    for (auto& e : g.grad_p) e = debias::sample_normal(rng, 0.0, 3.0);
    for (auto& e : g.grad_a_w) e = debias::sample_normal(rng, 0.0, 3.0);
    const DenseVector d = debias::compose_debias_direction(g, 0.0);
    EXPECT_LE(std::abs(debias::dot(d, g.grad_a_w)),
              1e-12 * debias::norm(d) * debias::norm(g.grad_a_w) + 1e-15);
  }
}

TEST(Compose, TinyAdversaryGradientPassesPredictorThrough) {
  debias::DebiasGradients g;
  g.grad_p = {0.3, -0.7, 2.0};
  const DenseVector d_empty = debias::compose_debias_direction(g, 1.0);
  EXPECT_EQ(d_empty, g.grad_p);
  g.grad_a_w = {1e-7, 1e-7, 0.0};
  const DenseVector d_tiny = debias::compose_debias_direction(g, 1.0);
  EXPECT_EQ(d_tiny, g.grad_p);
}

TEST(Compose, NegativeAlphaThrows) {
  debias::DebiasGradients g;
  g.grad_p = {1.0};
  g.grad_a_w = {1.0};
  EXPECT_THROW(debias::compose_debias_direction(g, -0.1),
               std::invalid_argument);
}

TEST(Compose, PerSegmentDiffersFromJoint) {
  debias::DebiasGradients g;
  g.grad_p = {1.0, 0.0, 1.0, 0.0};
  g.grad_a_w = {1.0, 1.0, 0.0, 2.0};
  const std::vector<debias::ParamVector::Segment> segs{{"a", 0, 2},
                                                       {"b", 2, 2}};
  const DenseVector per = debias::compose_debias_direction(g, 1.0, segs);
  // Segment a reproduces the joint hand example; segment b has an orthogonal
  // predictor gradient so only the -alpha term acts.
  EXPECT_DOUBLE_EQ(per[0], -0.5);
  EXPECT_DOUBLE_EQ(per[1], -1.5);
  EXPECT_DOUBLE_EQ(per[2], 1.0);
  EXPECT_DOUBLE_EQ(per[3], -2.0);
  const DenseVector joint = debias::compose_debias_direction(g, 1.0);
  EXPECT_NE(per[0], joint[0]);
  // The anti-helpfulness identity survives segmentation because it holds
  // within each block.
  EXPECT_NEAR(debias::dot(per, g.grad_a_w),
              -debias::squared_norm(g.grad_a_w), 1e-12);
}

TEST(Compose, PerSegmentHandlesTinyBlocks) {
  debias::DebiasGradients g;
  g.grad_p = {1.0, 0.0, 1.0, 0.0};
  g.grad_a_w = {1e-7, 1e-7, 0.0, 2.0};
  const std::vector<debias::ParamVector::Segment> segs{{"a", 0, 2},
                                                       {"b", 2, 2}};
  const DenseVector per = debias::compose_debias_direction(g, 1.0, segs);
  EXPECT_DOUBLE_EQ(per[0], 1.0);
  EXPECT_DOUBLE_EQ(per[1], 0.0);
  EXPECT_DOUBLE_EQ(per[2], 1.0);
  EXPECT_DOUBLE_EQ(per[3], -2.0);
}

TEST(FiniteDiff, QuadraticLossHasTinyError) {
  const auto loss = [](const DenseVector& p) {
    return p[0] * p[0] + 3.0 * p[1] * p[1];
  };
  const DenseVector params{0.7, -1.3};
  const DenseVector grad{2.0 * 0.7, 6.0 * -1.3};
  EXPECT_LT(debias::finite_diff_check(loss, grad, params, 1e-4), 1e-9);
}

TEST(FiniteDiff, DetectsDoubledGradient) {
  // Analytic gradient twice the true one: |4p - 2p| / (|4p| + |2p|) = 1/3.
  const auto loss = [](const DenseVector& p) { return p[0] * p[0]; };
  const DenseVector params{1.0};
  const DenseVector wrong{4.0};
  EXPECT_NEAR(debias::finite_diff_check(loss, wrong, params, 1e-4), 1.0 / 3.0,
              1e-9);
}

TEST(FiniteDiff, InputValidation) {
  const auto loss = [](const DenseVector& p) { return p[0]; };
  EXPECT_THROW(
      debias::finite_diff_check(loss, DenseVector{1.0}, DenseVector{1.0}, 0.0),
      std::invalid_argument);
  EXPECT_THROW(debias::finite_diff_check(loss, DenseVector{1.0, 1.0},
                                         DenseVector{1.0}, 1e-4),
               std::invalid_argument);
  const auto bad = [](const DenseVector&) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  EXPECT_THROW(
      debias::finite_diff_check(bad, DenseVector{1.0}, DenseVector{1.0}, 1e-4),
      debias::DivergenceError);
}

}  // namespace
