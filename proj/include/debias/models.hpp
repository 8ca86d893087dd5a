#pragma once

// The five model heads and their batch-mean losses and analytic gradients.
// Predictors expose gradients of their own loss; adversary pairings expose
// gradients of the adversary loss with respect to both the adversary's own
// parameters (grad_u) and the upstream predictor parameters (grad_w).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "debias/examples.hpp"
#include "debias/grad_engine.hpp"
#include "debias/numerics.hpp"

namespace debias {

// Probabilities fed to log-losses are clamped to [kSigmaEps, 1 - kSigmaEps].
inline constexpr double kSigmaEps = 1e-7;

inline double sigmoid(double s) {
  if (s >= 0.0) {
    return 1.0 / (1.0 + std::exp(-s));
  }
  const double e = std::exp(s);
  return e / (1.0 + e);
}

inline double clamp_prob(double p) {
  return std::min(std::max(p, kSigmaEps), 1.0 - kSigmaEps);
}

inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("logit: probability outside (0, 1)");
  }
  return std::log(p / (1.0 - p));
}

enum class LossKind { binary_cross_entropy, squared_error };

inline double loss(LossKind kind, double pred, double target) {
  switch (kind) {
    case LossKind::binary_cross_entropy: {
      if (!(pred > 0.0 && pred < 1.0)) {
        throw std::invalid_argument(
            "loss: cross-entropy prediction outside (0, 1)");
      }
      if (target != 0.0 && target != 1.0) {
        throw std::invalid_argument("loss: cross-entropy target not binary");
      }
      const double p = clamp_prob(pred);
      return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
    }
    case LossKind::squared_error: {
      const double e = pred - target;
      return e * e;
    }
  }
  throw std::invalid_argument("loss: unknown kind");
}

inline double loss(LossKind kind, const DenseVector& pred,
                   const DenseVector& target) {
  if (kind != LossKind::squared_error) {
    throw std::invalid_argument("loss: vector form is squared-error only");
  }
  check_same_dim(pred.size(), target.size(), "loss");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    s += e * e;
  }
  return s;
}

// ---- classification track ----

struct LogisticPredictor {
  DenseVector w1;
  double b = 0.0;

  ParamVector to_params() const {
    auto pv = ParamVector::zeros({{"w1", w1.size()}, {"b", 1}});
    pv.set("w1", w1);
    pv.set_scalar("b", b);
    return pv;
  }
  void from_params(const ParamVector& pv) {
    w1 = pv.get("w1");
    b = pv.get_scalar("b");
  }
};

inline double logistic_forward(const LogisticPredictor& m, const Features& x) {
  check_same_dim(feature_dim(x), m.w1.size(), "logistic_forward");
  return clamp_prob(sigmoid(feature_dot(x, m.w1) + m.b));
}

// Adversary for demographic parity: sees only the predicted probability.
struct ParityAdversary {
  double u = 0.0;
  double c0 = 0.0;

  ParamVector to_params() const {
    auto pv = ParamVector::zeros({{"u", 1}, {"c0", 1}});
    pv.set_scalar("u", u);
    pv.set_scalar("c0", c0);
    return pv;
  }
  void from_params(const ParamVector& pv) {
    u = pv.get_scalar("u");
    c0 = pv.get_scalar("c0");
  }
};

inline double parity_adversary_forward(const ParityAdversary& a,
                                       double yhat) {
  return clamp_prob(sigmoid(a.u * yhat + a.c0));
}

// Adversary for equality of odds: sees the prediction and the true label.
// s = sigmoid((1+|c|) * logit(yhat)) sharpens the prediction, then a per-label
// affine head produces the output logit.
struct OddsAdversary {
  double c = 0.0;
  double b = 0.0;
  DenseVector w2{0.0, 0.0, 0.0};

  ParamVector to_params() const {
    auto pv = ParamVector::zeros({{"c", 1}, {"b", 1}, {"w2", 3}});
    pv.set_scalar("c", c);
    pv.set_scalar("b", b);
    pv.set("w2", w2);
    return pv;
  }
  void from_params(const ParamVector& pv) {
    c = pv.get_scalar("c");
    b = pv.get_scalar("b");
    w2 = pv.get("w2");
  }
};

// Returns the output logit; the predicted probability is its sigmoid.
inline double odds_adversary_forward(const OddsAdversary& a, double yhat,
                                     double y) {
  const double lambda = logit(clamp_prob(yhat));
  const double k = 1.0 + std::abs(a.c);
  const double s = sigmoid(k * lambda);
  const double phi = a.w2[0] + a.w2[1] * y + a.w2[2] * (1.0 - y);
  return phi * s + a.b;
}

// ---- analogy track ----

// Completes x1:x2 :: x3:? as v - w (w.v) with v = x2 + x3 - x1, i.e. the
// vector offset with the component along w removed when ||w|| = 1.
struct AnalogyPredictor {
  DenseVector w;

  ParamVector to_params() const {
    auto pv = ParamVector::zeros({{"w", w.size()}});
    pv.set("w", w);
    return pv;
  }
  void from_params(const ParamVector& pv) { w = pv.get("w"); }
};

inline DenseVector analogy_forward(const AnalogyPredictor& m,
                                   const DenseVector& x1,
                                   const DenseVector& x2,
                                   const DenseVector& x3) {
  check_same_dim(x1.size(), m.w.size(), "analogy_forward");
  check_same_dim(x2.size(), m.w.size(), "analogy_forward");
  check_same_dim(x3.size(), m.w.size(), "analogy_forward");
  DenseVector v = x2;
  axpy(1.0, x3, v);
  axpy(-1.0, x1, v);
  const double t = dot(m.w, v);
  axpy(-t, m.w, v);
  return v;
}

// Linear probe that tries to read the protected value off the completion.
struct EmbeddingAdversary {
  DenseVector w2;

  ParamVector to_params() const {
    auto pv = ParamVector::zeros({{"w2", w2.size()}});
    pv.set("w2", w2);
    return pv;
  }
  void from_params(const ParamVector& pv) { w2 = pv.get("w2"); }
};

inline double embedding_adversary_forward(const EmbeddingAdversary& a,
                                          const DenseVector& yhat) {
  return dot(a.w2, yhat);
}

// ---- batch gradients ----

struct PredictorGradients {
  double loss = 0.0;
  DenseVector grad;
};

struct AdversaryGradients {
  double loss = 0.0;
  DenseVector grad_u;  // adversary's own parameters
  DenseVector grad_w;  // upstream predictor parameters
};

inline PredictorGradients model_gradients(
    const LogisticPredictor& m, const std::vector<LabeledExample>& batch) {
  const std::size_t d = m.w1.size();
  PredictorGradients out;
  out.grad.assign(d + 1, 0.0);
  if (batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& e : batch) {
    const double yhat = logistic_forward(m, e.x);
    out.loss += loss(LossKind::binary_cross_entropy, yhat, e.y) * inv_n;
    const double err = (yhat - e.y) * inv_n;
    DenseVector gw(d, 0.0);
    feature_axpy(err, e.x, gw);
    for (std::size_t i = 0; i < d; ++i) out.grad[i] += gw[i];
    out.grad[d] += err;
  }
  return out;
}

inline AdversaryGradients model_gradients(
    const LogisticPredictor& m, const ParityAdversary& a,
    const std::vector<LabeledExample>& batch) {
  const std::size_t d = m.w1.size();
  AdversaryGradients out;
  out.grad_u.assign(2, 0.0);
  out.grad_w.assign(d + 1, 0.0);
  if (batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& e : batch) {
    const double yhat = logistic_forward(m, e.x);
    const double zhat = parity_adversary_forward(a, yhat);
    out.loss += loss(LossKind::binary_cross_entropy, zhat, e.z) * inv_n;
    const double err = (zhat - e.z) * inv_n;
    out.grad_u[0] += err * yhat;
    out.grad_u[1] += err;
    // Chain through yhat: d(zhat_logit)/d(pred_logit) = u * yhat * (1-yhat).
    const double chain = err * a.u * yhat * (1.0 - yhat);
    DenseVector gw(d, 0.0);
    feature_axpy(chain, e.x, gw);
    for (std::size_t i = 0; i < d; ++i) out.grad_w[i] += gw[i];
    out.grad_w[d] += chain;
  }
  return out;
}

inline AdversaryGradients model_gradients(
    const LogisticPredictor& m, const OddsAdversary& a,
    const std::vector<LabeledExample>& batch) {
  const std::size_t d = m.w1.size();
  AdversaryGradients out;
  out.grad_u.assign(5, 0.0);  // [c, b, w2]
  out.grad_w.assign(d + 1, 0.0);
  if (batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& e : batch) {
    const double yhat = logistic_forward(m, e.x);
    const double lambda = logit(yhat);
    const double k = 1.0 + std::abs(a.c);
    const double s = sigmoid(k * lambda);
    const double phi = a.w2[0] + a.w2[1] * e.y + a.w2[2] * (1.0 - e.y);
    const double zp = clamp_prob(sigmoid(phi * s + a.b));
    out.loss += loss(LossKind::binary_cross_entropy, zp, e.z) * inv_n;
    const double err = (zp - e.z) * inv_n;
    const double sgn_c = a.c > 0.0 ? 1.0 : (a.c < 0.0 ? -1.0 : 0.0);
    out.grad_u[0] += err * phi * s * (1.0 - s) * lambda * sgn_c;
    out.grad_u[1] += err;
    out.grad_u[2] += err * s;
    out.grad_u[3] += err * s * e.y;
    out.grad_u[4] += err * s * (1.0 - e.y);
    // d(lambda)/d(pred_logit) = 1, so the predictor chain is err * phi * k
    // * s * (1-s) against the raw features.
    const double chain = err * phi * k * s * (1.0 - s);
    DenseVector gw(d, 0.0);
    feature_axpy(chain, e.x, gw);
    for (std::size_t i = 0; i < d; ++i) out.grad_w[i] += gw[i];
    out.grad_w[d] += chain;
  }
  return out;
}

inline PredictorGradients model_gradients(
    const AnalogyPredictor& m, const std::vector<AnalogyExample>& batch) {
  const std::size_t d = m.w.size();
  PredictorGradients out;
  out.grad.assign(d, 0.0);
  if (batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    DenseVector v = ex.x2;
    axpy(1.0, ex.x3, v);
    axpy(-1.0, ex.x1, v);
    const double t = dot(m.w, v);
    DenseVector yhat = v;
    axpy(-t, m.w, yhat);
    DenseVector err = yhat;
    axpy(-1.0, ex.y, err);
    out.loss += loss(LossKind::squared_error, yhat, ex.y) * inv_n;
    const double we = dot(m.w, err);
    // dL/dw = -2 (t * err + (w.err) v)
    axpy(-2.0 * inv_n * t, err, out.grad);
    axpy(-2.0 * inv_n * we, v, out.grad);
  }
  return out;
}

inline AdversaryGradients model_gradients(
    const AnalogyPredictor& m, const EmbeddingAdversary& a,
    const std::vector<AnalogyExample>& batch) {
  const std::size_t d = m.w.size();
  AdversaryGradients out;
  out.grad_u.assign(a.w2.size(), 0.0);
  out.grad_w.assign(d, 0.0);
  if (batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    DenseVector v = ex.x2;
    axpy(1.0, ex.x3, v);
    axpy(-1.0, ex.x1, v);
    const double t = dot(m.w, v);
    DenseVector yhat = v;
    axpy(-t, m.w, yhat);
    const double zhat = embedding_adversary_forward(a, yhat);
    out.loss += loss(LossKind::squared_error, zhat, ex.z) * inv_n;
    const double err = zhat - ex.z;
    axpy(2.0 * inv_n * err, yhat, out.grad_u);
    // q = dL/d(yhat); dL/dw = -(t q + (w.q) v)
    DenseVector q = a.w2;
    for (auto& e : q) e *= 2.0 * err;
    const double wq = dot(m.w, q);
    axpy(-inv_n * t, q, out.grad_w);
    axpy(-inv_n * wq, v, out.grad_w);
  }
  return out;
}

}  // namespace debias
