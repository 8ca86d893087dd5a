#pragma once

// Finite-difference audit of every analytic gradient in models.hpp. Each
// pairing is checked over the joint parameter vector (predictor and, where
// present, adversary) so the chain-rule terms are covered too. The tamper
// switch doubles the analytic gradient to prove the check has teeth.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "debias/grad_engine.hpp"
#include "debias/models.hpp"
#include "debias/numerics.hpp"

namespace debias {

struct GradCheckResult {
  std::string name;
  double worst_error = 0.0;
};

namespace detail {

inline DenseVector random_vector(SeededRng& rng, std::size_t n,
                                 double stddev) {
  DenseVector v(n);
  for (auto& e : v) e = sample_normal(rng, 0.0, stddev);
  return v;
}

inline std::vector<LabeledExample> random_labeled_batch(SeededRng& rng,
                                                        std::size_t dim,
                                                        std::size_t n) {
  std::vector<LabeledExample> batch;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledExample e;
    e.x = random_vector(rng, dim, 1.0);
    e.y = rng.uniform() < 0.5 ? 0.0 : 1.0;
    e.z = rng.uniform() < 0.5 ? 0.0 : 1.0;
    batch.push_back(std::move(e));
  }
  return batch;
}

inline std::vector<AnalogyExample> random_analogy_batch(SeededRng& rng,
                                                        std::size_t dim,
                                                        std::size_t n) {
  std::vector<AnalogyExample> batch;
  for (std::size_t i = 0; i < n; ++i) {
    AnalogyExample e;
    e.x1 = random_vector(rng, dim, 1.0);
    e.x2 = random_vector(rng, dim, 1.0);
    e.x3 = random_vector(rng, dim, 1.0);
    e.y = random_vector(rng, dim, 1.0);
    e.z = sample_normal(rng, 0.0, 1.0);
    batch.push_back(std::move(e));
  }
  return batch;
}

template <typename LossFn>
double checked_error(LossFn&& loss_fn, DenseVector analytic,
                     const DenseVector& theta, double h, bool tamper) {
  if (tamper) {
    for (auto& g : analytic) g *= 2.0;
  }
  return finite_diff_check(loss_fn, analytic, theta, h);
}

}  // namespace detail

inline std::vector<GradCheckResult> run_gradient_checks(std::uint64_t seed,
                                                        int trials,
                                                        double h = 1e-4,
                                                        bool tamper = false) {
  SeededRng rng(seed);
  const std::size_t dim = 4;
  const std::size_t edim = 6;
  std::vector<GradCheckResult> results{{"logistic_predictor_bce", 0.0},
                                       {"parity_adversary_bce", 0.0},
                                       {"odds_adversary_bce", 0.0},
                                       {"analogy_predictor_squared", 0.0},
                                       {"embedding_adversary_squared", 0.0}};
  for (int trial = 0; trial < trials; ++trial) {
    const auto batch = detail::random_labeled_batch(rng, dim, 5);
    const auto analogies = detail::random_analogy_batch(rng, edim, 4);

    LogisticPredictor lp;
    lp.w1 = detail::random_vector(rng, dim, 0.5);
    lp.b = sample_normal(rng, 0.0, 0.5);

    ParityAdversary pa;
    pa.u = sample_normal(rng, 0.0, 0.7);
    pa.c0 = sample_normal(rng, 0.0, 0.7);

    OddsAdversary oa;
    // Keep |c| clear of the subgradient kink at zero so central differences
    // are valid.
    oa.c = (rng.uniform() < 0.5 ? 1.0 : -1.0) *
           (0.2 + std::abs(sample_normal(rng, 0.0, 0.5)));
    oa.b = sample_normal(rng, 0.0, 0.5);
    oa.w2 = detail::random_vector(rng, 3, 0.7);

    AnalogyPredictor ap;
    ap.w = detail::random_vector(rng, edim, 0.5);

    EmbeddingAdversary ea;
    ea.w2 = detail::random_vector(rng, edim, 0.5);

    {
      DenseVector theta = lp.w1;
      theta.push_back(lp.b);
      const auto unpack = [&](const DenseVector& t) {
        LogisticPredictor m;
        m.w1.assign(t.begin(), t.begin() + dim);
        m.b = t[dim];
        return m;
      };
      const auto loss_fn = [&](const DenseVector& t) {
        return model_gradients(unpack(t), batch).loss;
      };
      const auto grads = model_gradients(lp, batch);
      results[0].worst_error =
          std::max(results[0].worst_error,
                   detail::checked_error(loss_fn, grads.grad, theta, h,
                                         tamper));
    }
    {
      DenseVector theta = lp.w1;
      theta.push_back(lp.b);
      theta.push_back(pa.u);
      theta.push_back(pa.c0);
      const auto unpack = [&](const DenseVector& t) {
        LogisticPredictor m;
        m.w1.assign(t.begin(), t.begin() + dim);
        m.b = t[dim];
        ParityAdversary a;
        a.u = t[dim + 1];
        a.c0 = t[dim + 2];
        return std::make_pair(m, a);
      };
      const auto loss_fn = [&](const DenseVector& t) {
        const auto [m, a] = unpack(t);
        return model_gradients(m, a, batch).loss;
      };
      const auto grads = model_gradients(lp, pa, batch);
      DenseVector analytic = grads.grad_w;
      analytic.insert(analytic.end(), grads.grad_u.begin(),
                      grads.grad_u.end());
      results[1].worst_error =
          std::max(results[1].worst_error,
                   detail::checked_error(loss_fn, analytic, theta, h,
                                         tamper));
    }
    {
      DenseVector theta = lp.w1;
      theta.push_back(lp.b);
      theta.push_back(oa.c);
      theta.push_back(oa.b);
      theta.insert(theta.end(), oa.w2.begin(), oa.w2.end());
      const auto unpack = [&](const DenseVector& t) {
        LogisticPredictor m;
        m.w1.assign(t.begin(), t.begin() + dim);
        m.b = t[dim];
        OddsAdversary a;
        a.c = t[dim + 1];
        a.b = t[dim + 2];
        a.w2.assign(t.begin() + dim + 3, t.begin() + dim + 6);
        return std::make_pair(m, a);
      };
      const auto loss_fn = [&](const DenseVector& t) {
        const auto [m, a] = unpack(t);
        return model_gradients(m, a, batch).loss;
      };
      const auto grads = model_gradients(lp, oa, batch);
      DenseVector analytic = grads.grad_w;
      analytic.insert(analytic.end(), grads.grad_u.begin(),
                      grads.grad_u.end());
      results[2].worst_error =
          std::max(results[2].worst_error,
                   detail::checked_error(loss_fn, analytic, theta, h,
                                         tamper));
    }
    {
      const auto loss_fn = [&](const DenseVector& t) {
        AnalogyPredictor m;
        m.w = t;
        return model_gradients(m, analogies).loss;
      };
      const auto grads = model_gradients(ap, analogies);
      results[3].worst_error =
          std::max(results[3].worst_error,
                   detail::checked_error(loss_fn, grads.grad, ap.w, h,
                                         tamper));
    }
    {
      DenseVector theta = ap.w;
      theta.insert(theta.end(), ea.w2.begin(), ea.w2.end());
      const auto unpack = [&](const DenseVector& t) {
        AnalogyPredictor m;
        m.w.assign(t.begin(), t.begin() + edim);
        EmbeddingAdversary a;
        a.w2.assign(t.begin() + edim, t.end());
        return std::make_pair(m, a);
      };
      const auto loss_fn = [&](const DenseVector& t) {
        const auto [m, a] = unpack(t);
        return model_gradients(m, a, analogies).loss;
      };
      const auto grads = model_gradients(ap, ea, analogies);
      DenseVector analytic = grads.grad_w;
      analytic.insert(analytic.end(), grads.grad_u.begin(),
                      grads.grad_u.end());
      results[4].worst_error =
          std::max(results[4].worst_error,
                   detail::checked_error(loss_fn, analytic, theta, h,
                                         tamper));
    }
  }
  return results;
}

}  // namespace debias
