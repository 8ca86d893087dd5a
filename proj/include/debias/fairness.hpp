#pragma once

// Group fairness metrics over binary classifications with a binary protected
// attribute: confusion tables, rate gaps, a pooled two-proportion z-test, and
// plug-in entropy estimates.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "debias/numerics.hpp"

namespace debias {

struct GroupCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
};

struct GroupedConfusion {
  std::array<GroupCounts, 2> groups;
};

// Scores strictly above the threshold count as positive predictions.
inline GroupedConfusion confusion_by_group(const std::vector<double>& yhat,
                                           const std::vector<double>& y,
                                           const std::vector<double>& z,
                                           double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument(
        "confusion_by_group: threshold outside (0, 1)");
  }
  check_same_dim(yhat.size(), y.size(), "confusion_by_group");
  check_same_dim(yhat.size(), z.size(), "confusion_by_group");
  GroupedConfusion c;
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw std::invalid_argument("confusion_by_group: label not binary");
    }
    if (z[i] != 0.0 && z[i] != 1.0) {
      throw std::invalid_argument(
          "confusion_by_group: protected value not binary");
    }
    GroupCounts& g = c.groups[z[i] == 1.0 ? 1 : 0];
    const bool pred = yhat[i] > threshold;
    if (y[i] == 1.0) {
      (pred ? g.tp : g.fn) += 1;
    } else {
      (pred ? g.fp : g.tn) += 1;
    }
  }
  return c;
}

struct GroupRates {
  double fpr = 0.0;
  double fnr = 0.0;
};

inline std::array<GroupRates, 2> rates(const GroupedConfusion& c) {
  std::array<GroupRates, 2> out;
  for (int g = 0; g < 2; ++g) {
    const auto& counts = c.groups[g];
    if (counts.fp + counts.tn == 0) {
      throw std::invalid_argument("rates: group " + std::to_string(g) +
                                  " has no negatives, fpr undefined");
    }
    if (counts.fn + counts.tp == 0) {
      throw std::invalid_argument("rates: group " + std::to_string(g) +
                                  " has no positives, fnr undefined");
    }
    out[g].fpr = static_cast<double>(counts.fp) /
                 static_cast<double>(counts.fp + counts.tn);
    out[g].fnr = static_cast<double>(counts.fn) /
                 static_cast<double>(counts.fn + counts.tp);
  }
  return out;
}

inline double demographic_parity_gap(const GroupedConfusion& c) {
  double pr[2];
  for (int g = 0; g < 2; ++g) {
    const auto& counts = c.groups[g];
    if (counts.total() == 0) {
      throw std::invalid_argument("demographic_parity_gap: group " +
                                  std::to_string(g) + " is empty");
    }
    pr[g] = static_cast<double>(counts.tp + counts.fp) /
            static_cast<double>(counts.total());
  }
  return std::abs(pr[0] - pr[1]);
}

// (|FPR_0 - FPR_1|, |TPR_0 - TPR_1|): gaps among true negatives and true
// positives respectively.
inline std::pair<double, double> equalized_odds_gaps(
    const GroupedConfusion& c) {
  const auto r = rates(c);
  const double gap_y0 = std::abs(r[0].fpr - r[1].fpr);
  const double gap_y1 = std::abs((1.0 - r[0].fnr) - (1.0 - r[1].fnr));
  return {gap_y0, gap_y1};
}

// Two-sided pooled two-proportion z-test for k1/n1 vs k2/n2. Degenerate
// pooled proportions and exactly equal proportions give p = 1.
inline double two_proportion_ztest(std::int64_t k1, std::int64_t n1,
                                   std::int64_t k2, std::int64_t n2) {
  if (n1 <= 0 || n2 <= 0 || k1 < 0 || k2 < 0 || k1 > n1 || k2 > n2) {
    throw std::invalid_argument("two_proportion_ztest: bad counts");
  }
  const double p1 = static_cast<double>(k1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(k2) / static_cast<double>(n2);
  const double pooled =
      static_cast<double>(k1 + k2) / static_cast<double>(n1 + n2);
  if (pooled == 0.0 || pooled == 1.0 || p1 == p2) return 1.0;
  const double se =
      std::sqrt(pooled * (1.0 - pooled) *
                (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
  const double zstat = (p1 - p2) / se;
  return 2.0 * normal_cdf(-std::abs(zstat));
}

struct EntropyEstimate {
  double h_z = 0.0;
  double h_z_given_y = 0.0;
};

namespace detail {

inline double bernoulli_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h;
}

}  // namespace detail

// Plug-in entropies in nats. Without labels the conditional entropy defaults
// to the marginal one.
inline EntropyEstimate empirical_entropy(const std::vector<double>& z) {
  if (z.empty()) {
    throw std::invalid_argument("empirical_entropy: empty sample");
  }
  std::int64_t ones = 0;
  for (double v : z) {
    if (v != 0.0 && v != 1.0) {
      throw std::invalid_argument("empirical_entropy: value not binary");
    }
    ones += v == 1.0;
  }
  EntropyEstimate out;
  out.h_z = detail::bernoulli_entropy(static_cast<double>(ones) /
                                      static_cast<double>(z.size()));
  out.h_z_given_y = out.h_z;
  return out;
}

inline EntropyEstimate empirical_entropy(const std::vector<double>& z,
                                         const std::vector<double>& y) {
  check_same_dim(z.size(), y.size(), "empirical_entropy");
  EntropyEstimate out = empirical_entropy(z);
  std::int64_t count[2] = {0, 0};
  std::int64_t ones[2] = {0, 0};
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw std::invalid_argument("empirical_entropy: label not binary");
    }
    const int b = y[i] == 1.0 ? 1 : 0;
    count[b] += 1;
    ones[b] += z[i] == 1.0;
  }
  out.h_z_given_y = 0.0;
  for (int b = 0; b < 2; ++b) {
    if (count[b] == 0) continue;
    const double weight =
        static_cast<double>(count[b]) / static_cast<double>(z.size());
    out.h_z_given_y += weight * detail::bernoulli_entropy(
                                    static_cast<double>(ones[b]) /
                                    static_cast<double>(count[b]));
  }
  return out;
}

struct FairnessReport {
  double accuracy = 0.0;
  std::array<GroupRates, 2> group_rates;
  std::array<double, 2> positive_rate{0.0, 0.0};
  double dp_gap = 0.0;
  double eo_gap_y0 = 0.0;
  double eo_gap_y1 = 0.0;
  double p_value_y0 = 1.0;
  double p_value_y1 = 1.0;
  GroupedConfusion confusion;
};

inline FairnessReport build_fairness_report(const std::vector<double>& yhat,
                                            const std::vector<double>& y,
                                            const std::vector<double>& z,
                                            double threshold = 0.5) {
  FairnessReport r;
  r.confusion = confusion_by_group(yhat, y, z, threshold);
  const auto& g0 = r.confusion.groups[0];
  const auto& g1 = r.confusion.groups[1];
  const std::int64_t total = g0.total() + g1.total();
  if (total == 0) {
    throw std::invalid_argument("build_fairness_report: empty sample");
  }
  r.accuracy = static_cast<double>(g0.tp + g0.tn + g1.tp + g1.tn) /
               static_cast<double>(total);
  r.group_rates = rates(r.confusion);
  for (int g = 0; g < 2; ++g) {
    const auto& counts = r.confusion.groups[g];
    r.positive_rate[g] = static_cast<double>(counts.tp + counts.fp) /
                         static_cast<double>(counts.total());
  }
  r.dp_gap = demographic_parity_gap(r.confusion);
  std::tie(r.eo_gap_y0, r.eo_gap_y1) = equalized_odds_gaps(r.confusion);
  r.p_value_y0 =
      two_proportion_ztest(g0.fp, g0.fp + g0.tn, g1.fp, g1.fp + g1.tn);
  r.p_value_y1 =
      two_proportion_ztest(g0.tp, g0.tp + g0.fn, g1.tp, g1.tp + g1.fn);
  return r;
}

}  // namespace debias
