#pragma once

// Data sources for the three experiments: the two-feature synthetic
// classification task, the census income records, and word embeddings.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "debias/adult.hpp"
#include "debias/embedding.hpp"
#include "debias/examples.hpp"
#include "debias/numerics.hpp"

namespace debias {

struct ToyConfig {
  std::size_t n = 10000;
  std::uint64_t seed = 0;
};

// Hidden-confounder chain: a fair coin r, v ~ N(r, 1), then u and the label
// score w drawn around v. The features are (r, u); r doubles as the
// protected attribute, so a fair predictor must ignore it and most of u.
inline std::vector<LabeledExample> generate_toy(const ToyConfig& cfg) {
  SeededRng rng(cfg.seed);
  std::vector<LabeledExample> out;
  out.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const double r = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const double v = sample_normal(rng, r, 1.0);
    const double u = sample_normal(rng, v, 1.0);
    const double w = sample_normal(rng, v, 1.0);
    LabeledExample e;
    e.x = DenseVector{r, u};
    e.y = w > 0.0 ? 1.0 : 0.0;
    e.z = r;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace debias
