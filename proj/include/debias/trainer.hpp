#pragma once

// Adversarial training loop: the predictor descends along its own gradient
// with the adversary's pull projected out and an alpha-weighted push away
// from it, while the adversary trains normally on its own objective.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "debias/examples.hpp"
#include "debias/fairness.hpp"
#include "debias/grad_engine.hpp"
#include "debias/models.hpp"
#include "debias/numerics.hpp"

namespace debias {

enum class FairnessKind {
  demographic_parity,
  equality_of_odds,
  equality_of_opportunity,
};

struct FairnessMode {
  FairnessKind kind = FairnessKind::demographic_parity;
  double target_y = 1.0;  // opportunity only: which label the adversary sees
};

struct TrainConfig {
  std::int64_t steps = 1000;
  std::size_t batch_size = 128;
  double predictor_lr = 0.01;
  double adversary_lr = 0.01;
  ScheduleSpec schedule;
  FairnessMode mode;
  bool debias = false;
  std::uint64_t seed = 0;
  double loss_blowup_limit = 1e3;
  double init_scale = 0.1;
  bool project_per_segment = false;
};

struct StepRecord {
  std::int64_t t = 0;
  double loss_p = 0.0;
  std::optional<double> loss_a;
  double alpha = 0.0;
  double eta_scale = 1.0;
  std::size_t adv_n = 0;  // examples the adversary trained on this step
  double dot_d_ga = 0.0;
  double ga_norm2 = 0.0;
  double d_norm2 = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  double wall_time_s = 0.0;
  std::string termination;
};

class TrainDivergenceError : public DivergenceError {
 public:
  TrainDivergenceError(const std::string& what, TrainLog log)
      : DivergenceError(what), log_(std::move(log)) {}
  const TrainLog& log() const { return log_; }

 private:
  TrainLog log_;
};

namespace detail {

inline void validate_config(const TrainConfig& cfg) {
  if (cfg.steps < 0) throw std::invalid_argument("TrainConfig: negative steps");
  if (cfg.batch_size == 0) {
    throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  }
  if (!(cfg.predictor_lr > 0.0) || !(cfg.adversary_lr > 0.0)) {
    throw std::invalid_argument("TrainConfig: learning rates must be > 0");
  }
  if (cfg.schedule.alpha0 < 0.0) {
    throw std::invalid_argument("TrainConfig: alpha0 must be >= 0");
  }
  if (cfg.schedule.eta_mode == EtaMode::inverse_t && !(cfg.schedule.t0 > 0.0)) {
    throw std::invalid_argument("TrainConfig: t0 must be > 0");
  }
  if (!(cfg.loss_blowup_limit > 0.0)) {
    throw std::invalid_argument("TrainConfig: loss_blowup_limit must be > 0");
  }
  if (cfg.init_scale < 0.0) {
    throw std::invalid_argument("TrainConfig: init_scale must be >= 0");
  }
  if (cfg.mode.target_y != 0.0 && cfg.mode.target_y != 1.0) {
    throw std::invalid_argument("TrainConfig: target_y must be 0 or 1");
  }
}

inline void check_loss_in_bounds(double value, double limit,
                                 const char* which) {
  if (!std::isfinite(value) || value > limit) {
    throw DivergenceError(std::string("training diverged: ") + which +
                          " loss " + std::to_string(value));
  }
}

inline void shuffle(std::vector<std::size_t>& order, SeededRng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(order[i - 1], order[j]);
  }
}

// Everything after the per-model gradient work is shared between the
// classification and analogy tracks.
template <typename Predictor>
StepRecord finish_step(Predictor& predictor, AdamState& opt_p,
                       std::int64_t& t, const TrainConfig& cfg,
                       const PredictorGradients& pg,
                       std::optional<double> loss_a, DenseVector grad_a_w,
                       std::size_t adv_n) {
  const ScheduleValues sched = schedule_values(cfg.schedule, t + 1);
  check_loss_in_bounds(pg.loss, cfg.loss_blowup_limit, "predictor");
  if (loss_a.has_value()) {
    check_loss_in_bounds(*loss_a, cfg.loss_blowup_limit, "adversary");
  }

  DebiasGradients g;
  g.grad_p = pg.grad;
  g.grad_a_w = std::move(grad_a_w);
  DenseVector d;
  if (!cfg.debias) {
    d = g.grad_p;
  } else if (cfg.project_per_segment) {
    d = compose_debias_direction(g, sched.alpha, predictor.to_params().layout);
  } else {
    d = compose_debias_direction(g, sched.alpha);
  }

  StepRecord rec;
  rec.t = t + 1;
  rec.loss_p = pg.loss;
  rec.loss_a = loss_a;
  rec.alpha = sched.alpha;
  rec.eta_scale = sched.eta_scale;
  rec.adv_n = adv_n;
  rec.dot_d_ga = g.grad_a_w.empty() ? 0.0 : dot(d, g.grad_a_w);
  rec.ga_norm2 = g.grad_a_w.empty() ? 0.0 : squared_norm(g.grad_a_w);
  rec.d_norm2 = squared_norm(d);

  ParamVector params = predictor.to_params();
  adam_step(opt_p, params.values, d, sched.eta_scale);
  predictor.from_params(params);
  t += 1;
  return rec;
}

}  // namespace detail

// ---- classification track ----

struct ClassificationState {
  TrainConfig cfg;
  LogisticPredictor predictor;
  ParityAdversary parity;  // used for parity and opportunity modes
  OddsAdversary odds;      // used for odds mode
  AdamState opt_p;
  AdamState opt_a;
  SeededRng rng;
  std::int64_t t = 0;
};

inline ClassificationState make_classification_state(const TrainConfig& cfg,
                                                     std::size_t feature_dim) {
  detail::validate_config(cfg);
  if (feature_dim == 0) {
    throw std::invalid_argument("make_classification_state: zero features");
  }
  SeededRng rng(cfg.seed);
  LogisticPredictor predictor;
  predictor.w1.resize(feature_dim);
  for (double& w : predictor.w1) w = sample_normal(rng, 0.0, cfg.init_scale);
  predictor.b = 0.0;

  ParityAdversary parity;
  OddsAdversary odds;
  const bool odds_mode = cfg.mode.kind == FairnessKind::equality_of_odds;
  if (odds_mode) {
    odds.c = sample_normal(rng, 0.0, cfg.init_scale);
    odds.b = 0.0;
    for (double& w : odds.w2) w = sample_normal(rng, 0.0, cfg.init_scale);
  } else {
    parity.u = sample_normal(rng, 0.0, cfg.init_scale);
    parity.c0 = 0.0;
  }
  const std::size_t adv_params = odds_mode ? odds.to_params().size()
                                           : parity.to_params().size();
  return ClassificationState{cfg,
                             std::move(predictor),
                             parity,
                             odds,
                             AdamState(feature_dim + 1, cfg.predictor_lr),
                             AdamState(adv_params, cfg.adversary_lr),
                             rng,
                             0};
}

inline StepRecord train_step(ClassificationState& st,
                             const std::vector<LabeledExample>& batch) {
  if (batch.empty()) {
    throw std::invalid_argument("train_step: empty batch");
  }
  const TrainConfig& cfg = st.cfg;
  const PredictorGradients pg = model_gradients(st.predictor, batch);

  std::optional<double> loss_a;
  DenseVector grad_a_w;
  std::size_t adv_n = 0;
  if (cfg.debias) {
    if (cfg.mode.kind == FairnessKind::equality_of_odds) {
      const AdversaryGradients ag = model_gradients(st.predictor, st.odds,
                                                    batch);
      loss_a = ag.loss;
      grad_a_w = ag.grad_w;
      adv_n = batch.size();
      ParamVector params = st.odds.to_params();
      adam_step(st.opt_a, params.values, ag.grad_u);
      st.odds.from_params(params);
    } else {
      std::vector<LabeledExample> filtered;
      const std::vector<LabeledExample>* sub = &batch;
      if (cfg.mode.kind == FairnessKind::equality_of_opportunity) {
        for (const auto& e : batch) {
          if (e.y == cfg.mode.target_y) filtered.push_back(e);
        }
        sub = &filtered;
      }
      if (!sub->empty()) {
        const AdversaryGradients ag = model_gradients(st.predictor, st.parity,
                                                      *sub);
        loss_a = ag.loss;
        grad_a_w = ag.grad_w;
        adv_n = sub->size();
        ParamVector params = st.parity.to_params();
        adam_step(st.opt_a, params.values, ag.grad_u);
        st.parity.from_params(params);
      }
    }
  }
  return detail::finish_step(st.predictor, st.opt_p, st.t, cfg, pg,
                             loss_a, std::move(grad_a_w), adv_n);
}

struct ClassificationResult {
  LogisticPredictor predictor;
  ParityAdversary parity;
  OddsAdversary odds;
  FairnessMode mode;
  TrainLog log;
};

namespace detail {

template <typename State, typename Example>
TrainLog run_epochs(State& st, const std::vector<Example>& train) {
  TrainLog log;
  log.steps.reserve(static_cast<std::size_t>(st.cfg.steps));
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  };
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Example> batch;
  try {
    while (st.t < st.cfg.steps) {
      shuffle(order, st.rng);
      for (std::size_t off = 0;
           off < order.size() && st.t < st.cfg.steps;
           off += st.cfg.batch_size) {
        const std::size_t end =
            std::min(off + st.cfg.batch_size, order.size());
        batch.clear();
        for (std::size_t i = off; i < end; ++i) batch.push_back(train[order[i]]);
        log.steps.push_back(train_step(st, batch));
      }
    }
  } catch (const DivergenceError& e) {
    log.termination = "diverged";
    log.wall_time_s = elapsed();
    throw TrainDivergenceError(e.what(), std::move(log));
  }
  log.termination = "completed";
  log.wall_time_s = elapsed();
  return log;
}

}  // namespace detail

inline ClassificationResult fit_classifier(
    const std::vector<LabeledExample>& train, const TrainConfig& cfg) {
  if (train.empty()) {
    throw std::invalid_argument("fit_classifier: empty training set");
  }
  ClassificationState st = make_classification_state(
      cfg, feature_dim(train.front().x));
  TrainLog log = detail::run_epochs(st, train);
  return ClassificationResult{std::move(st.predictor), st.parity, st.odds,
                              cfg.mode, std::move(log)};
}

// ---- analogy track ----

struct AnalogyState {
  TrainConfig cfg;
  AnalogyPredictor predictor;
  EmbeddingAdversary adversary;
  AdamState opt_p;
  AdamState opt_a;
  SeededRng rng;
  std::int64_t t = 0;
};

inline AnalogyState make_analogy_state(const TrainConfig& cfg,
                                       std::size_t dim) {
  detail::validate_config(cfg);
  if (dim == 0) {
    throw std::invalid_argument("make_analogy_state: zero dimension");
  }
  SeededRng rng(cfg.seed);
  AnalogyPredictor predictor;
  predictor.w.resize(dim);
  for (double& w : predictor.w) w = sample_normal(rng, 0.0, cfg.init_scale);
  EmbeddingAdversary adversary;
  adversary.w2.resize(dim);
  for (double& w : adversary.w2) w = sample_normal(rng, 0.0, cfg.init_scale);
  return AnalogyState{cfg,
                      std::move(predictor),
                      std::move(adversary),
                      AdamState(dim, cfg.predictor_lr),
                      AdamState(dim, cfg.adversary_lr),
                      rng,
                      0};
}

inline StepRecord train_step(AnalogyState& st,
                             const std::vector<AnalogyExample>& batch) {
  if (batch.empty()) {
    throw std::invalid_argument("train_step: empty batch");
  }
  const TrainConfig& cfg = st.cfg;
  const PredictorGradients pg = model_gradients(st.predictor, batch);

  std::optional<double> loss_a;
  DenseVector grad_a_w;
  std::size_t adv_n = 0;
  if (cfg.debias) {
    const AdversaryGradients ag = model_gradients(st.predictor, st.adversary,
                                                  batch);
    loss_a = ag.loss;
    grad_a_w = ag.grad_w;
    adv_n = batch.size();
    ParamVector params = st.adversary.to_params();
    adam_step(st.opt_a, params.values, ag.grad_u);
    st.adversary.from_params(params);
  }
  return detail::finish_step(st.predictor, st.opt_p, st.t, cfg, pg,
                             loss_a, std::move(grad_a_w), adv_n);
}

struct AnalogyResult {
  AnalogyPredictor predictor;
  EmbeddingAdversary adversary;
  TrainLog log;
};

inline AnalogyResult fit_analogy(const std::vector<AnalogyExample>& train,
                                 const TrainConfig& cfg) {
  if (train.empty()) {
    throw std::invalid_argument("fit_analogy: empty training set");
  }
  AnalogyState st = make_analogy_state(cfg, train.front().y.size());
  TrainLog log = detail::run_epochs(st, train);
  return AnalogyResult{std::move(st.predictor), std::move(st.adversary),
                       std::move(log)};
}

// ---- evaluation ----

inline FairnessReport evaluate(const LogisticPredictor& m,
                               const std::vector<LabeledExample>& test,
                               double threshold = 0.5) {
  std::vector<double> yhat, y, z;
  yhat.reserve(test.size());
  y.reserve(test.size());
  z.reserve(test.size());
  for (const auto& e : test) {
    yhat.push_back(logistic_forward(m, e.x));
    y.push_back(e.y);
    z.push_back(e.z);
  }
  return build_fairness_report(yhat, y, z, threshold);
}

inline double evaluate(const AnalogyPredictor& m,
                       const std::vector<AnalogyExample>& test) {
  if (test.empty()) {
    throw std::invalid_argument("evaluate: empty test set");
  }
  double total = 0.0;
  for (const auto& e : test) {
    const DenseVector yhat = analogy_forward(m, e.x1, e.x2, e.x3);
    total += loss(LossKind::squared_error, yhat, e.y);
  }
  return total / static_cast<double>(test.size());
}

// Mean BCE of the trained adversary's protected-attribute prediction on
// held-out data, scored against the examples its mode lets it see.
inline double adversary_holdout_bce(const ClassificationResult& r,
                                    const std::vector<LabeledExample>& test) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& e : test) {
    if (r.mode.kind == FairnessKind::equality_of_opportunity &&
        e.y != r.mode.target_y) {
      continue;
    }
    const double yhat = logistic_forward(r.predictor, e.x);
    double zhat = 0.0;
    if (r.mode.kind == FairnessKind::equality_of_odds) {
      zhat = clamp_prob(sigmoid(odds_adversary_forward(r.odds, yhat, e.y)));
    } else {
      zhat = parity_adversary_forward(r.parity, yhat);
    }
    total += loss(LossKind::binary_cross_entropy, zhat, e.z);
    n += 1;
  }
  if (n == 0) {
    throw std::invalid_argument("adversary_holdout_bce: no scorable examples");
  }
  return total / static_cast<double>(n);
}

}  // namespace debias
