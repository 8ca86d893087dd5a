#pragma once

// Optimizer plumbing shared by every experiment: named flat parameter
// vectors, bias-corrected Adam, the alpha/eta schedules, the debiasing
// direction composition, and a finite-difference gradient checker.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "debias/numerics.hpp"

namespace debias {

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat parameter vector with named contiguous segments, so model structs can
// round-trip through a single optimizer state.
struct ParamVector {
  struct Segment {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;
  };

  std::vector<Segment> layout;
  DenseVector values;

  static ParamVector zeros(
      const std::vector<std::pair<std::string, std::size_t>>& spec) {
    ParamVector pv;
    std::size_t offset = 0;
    for (const auto& [name, length] : spec) {
      for (const auto& seg : pv.layout) {
        if (seg.name == name) {
          throw std::invalid_argument("ParamVector: duplicate segment " +
                                      name);
        }
      }
      pv.layout.push_back({name, offset, length});
      offset += length;
    }
    pv.values.assign(offset, 0.0);
    return pv;
  }

  std::size_t size() const { return values.size(); }

  const Segment& segment(const std::string& name) const {
    for (const auto& seg : layout) {
      if (seg.name == name) return seg;
    }
    throw std::invalid_argument("ParamVector: no segment named " + name);
  }

  DenseVector get(const std::string& name) const {
    const Segment& seg = segment(name);
    return DenseVector(values.begin() + seg.offset,
                       values.begin() + seg.offset + seg.length);
  }

  void set(const std::string& name, const DenseVector& v) {
    const Segment& seg = segment(name);
    check_same_dim(v.size(), seg.length, "ParamVector::set");
    std::copy(v.begin(), v.end(), values.begin() + seg.offset);
  }

  double get_scalar(const std::string& name) const {
    const Segment& seg = segment(name);
    if (seg.length != 1) {
      throw std::invalid_argument("ParamVector: segment " + name +
                                  " is not scalar");
    }
    return values[seg.offset];
  }

  void set_scalar(const std::string& name, double v) {
    const Segment& seg = segment(name);
    if (seg.length != 1) {
      throw std::invalid_argument("ParamVector: segment " + name +
                                  " is not scalar");
    }
    values[seg.offset] = v;
  }
};

// Adam first/second moment state. t counts completed steps.
struct AdamState {
  DenseVector m;
  DenseVector v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double base_lr = 0.001;

  AdamState(std::size_t n, double lr) : m(n, 0.0), v(n, 0.0), base_lr(lr) {}
};

// One bias-corrected Adam update in place. lr_scale multiplies the base
// learning rate for this step only; a scale of zero still advances the
// moment estimates, which is what an annealed-to-zero schedule expects.
inline void adam_step(AdamState& state, DenseVector& params,
                      const DenseVector& grad, double lr_scale = 1.0) {
  check_same_dim(params.size(), state.m.size(), "adam_step");
  check_same_dim(grad.size(), state.m.size(), "adam_step");
  if (!all_finite(grad)) {
    throw DivergenceError("adam_step: non-finite gradient");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const double lr = state.base_lr * lr_scale;
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] =
        state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

enum class EtaMode { constant, inverse_t };

// alpha(t) = alpha0 * sqrt(t); eta_scale(t) = 1 or min(1, t0/t).
struct ScheduleSpec {
  double alpha0 = 0.1;
  EtaMode eta_mode = EtaMode::constant;
  double t0 = 1000.0;
};

struct ScheduleValues {
  double alpha = 0.0;
  double eta_scale = 1.0;
};

inline ScheduleValues schedule_values(const ScheduleSpec& spec,
                                      std::int64_t t) {
  if (t < 1) {
    throw std::invalid_argument("schedule_values: step index must be >= 1");
  }
  ScheduleValues out;
  out.alpha = spec.alpha0 * std::sqrt(static_cast<double>(t));
  switch (spec.eta_mode) {
    case EtaMode::constant:
      out.eta_scale = 1.0;
      break;
    case EtaMode::inverse_t:
      out.eta_scale = std::min(1.0, spec.t0 / static_cast<double>(t));
      break;
  }
  return out;
}

// Gradients of both objectives with respect to the shared (predictor)
// parameters, plus the adversary's own-parameter gradient for its update.
struct DebiasGradients {
  DenseVector grad_p;    // predictor loss wrt predictor params
  DenseVector grad_a_w;  // adversary loss wrt predictor params
  DenseVector grad_a_u;  // adversary loss wrt adversary params
};

// d = grad_p - proj_{grad_a_w}(grad_p) - alpha * grad_a_w. An absent or
// below-threshold adversary gradient passes grad_p through untouched.
inline DenseVector compose_debias_direction(const DebiasGradients& g,
                                            double alpha) {
  if (alpha < 0.0) {
    throw std::invalid_argument("compose_debias_direction: negative alpha");
  }
  if (g.grad_a_w.empty() || squared_norm(g.grad_a_w) < kProjectionEps) {
    return g.grad_p;
  }
  DenseVector d = g.grad_p;
  axpy(-1.0, project(g.grad_p, g.grad_a_w), d);
  axpy(-alpha, g.grad_a_w, d);
  return d;
}

// Variant that projects within each named segment independently rather than
// across the concatenated vector. Off by default in training configs.
inline DenseVector compose_debias_direction(
    const DebiasGradients& g, double alpha,
    const std::vector<ParamVector::Segment>& segments) {
  if (alpha < 0.0) {
    throw std::invalid_argument("compose_debias_direction: negative alpha");
  }
  if (g.grad_a_w.empty() || squared_norm(g.grad_a_w) < kProjectionEps) {
    return g.grad_p;
  }
  check_same_dim(g.grad_p.size(), g.grad_a_w.size(),
                 "compose_debias_direction");
  std::size_t covered = 0;
  for (const auto& seg : segments) {
    if (seg.offset != covered) {
      throw std::invalid_argument(
          "compose_debias_direction: segments must tile the vector");
    }
    covered += seg.length;
  }
  check_same_dim(covered, g.grad_p.size(), "compose_debias_direction");

  DenseVector d(g.grad_p.size());
  for (const auto& seg : segments) {
    DebiasGradients block;
    block.grad_p.assign(g.grad_p.begin() + seg.offset,
                        g.grad_p.begin() + seg.offset + seg.length);
    block.grad_a_w.assign(g.grad_a_w.begin() + seg.offset,
                          g.grad_a_w.begin() + seg.offset + seg.length);
    const DenseVector db = compose_debias_direction(block, alpha);
    std::copy(db.begin(), db.end(), d.begin() + seg.offset);
  }
  return d;
}

// Worst relative error between an analytic gradient and central differences,
// |a - n| / max(1e-8, |a| + |n|), maximized over coordinates.
template <typename LossFn>
double finite_diff_check(LossFn&& loss, const DenseVector& analytic_grad,
                         DenseVector params, double h = 1e-4) {
  if (h <= 0.0) {
    throw std::invalid_argument("finite_diff_check: h must be positive");
  }
  check_same_dim(analytic_grad.size(), params.size(), "finite_diff_check");
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = loss(static_cast<const DenseVector&>(params));
    params[i] = saved - h;
    const double down = loss(static_cast<const DenseVector&>(params));
    params[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw DivergenceError("finite_diff_check: non-finite loss");
    }
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic_grad[i];
    const double rel = std::abs(a - numeric) /
                       std::max(1e-8, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace debias
