#pragma once

// Shared training-example types used across data loading, models, and the
// trainer.

#include <cstddef>
#include <variant>

#include "debias/numerics.hpp"

namespace debias {

// Feature vector, dense or sparse depending on the data source.
using Features = std::variant<DenseVector, SparseFeatures>;

inline std::size_t feature_dim(const Features& x) {
  if (const auto* d = std::get_if<DenseVector>(&x)) return d->size();
  return std::get<SparseFeatures>(x).dim;
}

inline double feature_dot(const Features& x, const DenseVector& w) {
  if (const auto* d = std::get_if<DenseVector>(&x)) return dot(*d, w);
  return dot(std::get<SparseFeatures>(x), w);
}

// out += a * x
inline void feature_axpy(double a, const Features& x, DenseVector& out) {
  if (const auto* d = std::get_if<DenseVector>(&x)) {
    axpy(a, *d, out);
  } else {
    axpy(a, std::get<SparseFeatures>(x), out);
  }
}

// Classification example: binary task label y and binary protected label z.
struct LabeledExample {
  Features x;
  double y = 0.0;
  double z = 0.0;
};

// Analogy example: the three query embeddings, the target embedding, and the
// scalar protected value of the target.
struct AnalogyExample {
  DenseVector x1;
  DenseVector x2;
  DenseVector x3;
  DenseVector y;
  double z = 0.0;
};

}  // namespace debias
