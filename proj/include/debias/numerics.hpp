#pragma once

// Dense/sparse vector primitives, vector projection, a seeded counter-based
// PRNG with Gaussian sampling, the standard normal CDF, and a small-scale PCA.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace debias {

using DenseVector = std::vector<double>;

// Squared-norm threshold below which a projection target counts as the zero
// vector; prevents division blow-up without affecting practical magnitudes.
inline constexpr double kProjectionEps = 1e-12;

class RankError : public std::runtime_error {
 public:
  RankError(int achieved, int requested)
      : std::runtime_error("principal components: input has rank " +
                           std::to_string(achieved) + ", need " +
                           std::to_string(requested)),
        achieved_rank(achieved) {}
  int achieved_rank;
};

inline void check_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) +
                                ")");
  }
}

// Sparse feature vector: (index, value) entries with strictly increasing
// indices, all below dim.
struct SparseFeatures {
  std::vector<std::pair<std::size_t, double>> entries;
  std::size_t dim = 0;

  SparseFeatures() = default;
  SparseFeatures(std::vector<std::pair<std::size_t, double>> e, std::size_t d)
      : entries(std::move(e)), dim(d) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].first >= dim) {
        throw std::invalid_argument("SparseFeatures: index " +
                                    std::to_string(entries[i].first) +
                                    " out of range for dim " +
                                    std::to_string(dim));
      }
      if (i > 0 && entries[i].first <= entries[i - 1].first) {
        throw std::invalid_argument(
            "SparseFeatures: indices must be strictly increasing");
      }
    }
  }
};

inline double dot(const DenseVector& a, const DenseVector& b) {
  check_same_dim(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double dot(const SparseFeatures& a, const DenseVector& b) {
  check_same_dim(a.dim, b.size(), "dot");
  double s = 0.0;
  for (const auto& [i, v] : a.entries) s += v * b[i];
  return s;
}

// out += a * x
inline void axpy(double a, const DenseVector& x, DenseVector& out) {
  check_same_dim(x.size(), out.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += a * x[i];
}

inline void axpy(double a, const SparseFeatures& x, DenseVector& out) {
  check_same_dim(x.dim, out.size(), "axpy");
  for (const auto& [i, v] : x.entries) out[i] += a * v;
}

inline double squared_norm(const DenseVector& v) { return dot(v, v); }
inline double norm(const DenseVector& v) { return std::sqrt(squared_norm(v)); }

inline bool all_finite(const DenseVector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Orthogonal projection of x onto v; the zero vector when ||v||^2 falls below
// kProjectionEps.
inline DenseVector project(const DenseVector& x, const DenseVector& v) {
  check_same_dim(x.size(), v.size(), "project");
  const double vv = squared_norm(v);
  if (vv < kProjectionEps) return DenseVector(x.size(), 0.0);
  const double c = dot(x, v) / vv;
  DenseVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = c * v[i];
  return out;
}

// Counter-based PRNG (splitmix64). Identical seed gives an identical sample
// stream within one build; single-owner mutable state.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    return next_u64() % n;
  }

 private:
  std::uint64_t state_;
};

// One draw from N(mean, stddev^2). A degenerate stddev of zero returns the
// mean exactly and consumes no randomness.
inline double sample_normal(SeededRng& rng, double mean, double stddev) {
  if (stddev < 0.0) {
    throw std::invalid_argument("sample_normal: negative stddev");
  }
  if (stddev == 0.0) return mean;
  // Box-Muller without the cached spare, keeping the generator a pure counter.
  constexpr double two_pi = 6.283185307179586476925286766559;
  const double u1 = 1.0 - rng.uniform();  // (0, 1], keeps the log finite
  const double u2 = rng.uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(two_pi * u2);
}

// Standard normal CDF via the complementary error function; absolute error
// well below the required 1e-7.
inline double normal_cdf(double x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  return 0.5 * std::erfc(-x * inv_sqrt2);
}

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Inputs here are
// tiny (pair counts or embedding dimensions), so robustness beats speed.
// Returns eigenvalues in descending order with matching unit eigenvectors.
inline void jacobi_eigen_symmetric(std::vector<DenseVector> a,
                                   std::vector<double>& eigenvalues,
                                   std::vector<DenseVector>& eigenvectors) {
  const std::size_t n = a.size();
  std::vector<DenseVector> v(n, DenseVector(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

  double frob = 0.0;
  for (std::size_t i = 0; i < n; ++i) frob += dot(a[i], a[i]);
  frob = std::sqrt(frob);
  const double tol = frob > 0.0 ? 1e-14 * frob : 0.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (std::sqrt(2.0 * off) <= tol) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p][q];
        if (std::abs(apq) <= tol / (2.0 * n)) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) /
            (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = a[p][p], aqq = a[q][q];
        a[p][p] = app - t * apq;
        a[q][q] = aqq + t * apq;
        a[p][q] = a[q][p] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = a[p][k] = c * akp - s * akq;
          a[k][q] = a[q][k] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });

  eigenvalues.assign(n, 0.0);
  eigenvectors.assign(n, DenseVector(n, 0.0));
  for (std::size_t r = 0; r < n; ++r) {
    eigenvalues[r] = a[order[r]][order[r]];
    for (std::size_t k = 0; k < n; ++k) eigenvectors[r][k] = v[k][order[r]];
  }
}

// Flip so the entry of largest magnitude is positive; first such entry on
// ties. Makes component orientation reproducible.
inline void fix_sign(DenseVector& v) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  }
  if (v[arg] < 0.0) {
    for (auto& x : v) x = -x;
  }
}

}  // namespace detail

// Top-k principal components of the rows: mean-centers, eigendecomposes the
// sample covariance (or the Gram matrix when rows are fewer than dimensions),
// and returns unit vectors ordered by descending eigenvalue.
inline std::vector<DenseVector> top_principal_components(
    const std::vector<DenseVector>& rows, int k) {
  if (rows.empty()) {
    throw std::invalid_argument("top_principal_components: no rows");
  }
  const std::size_t n = rows.size();
  const std::size_t d = rows[0].size();
  for (const auto& r : rows) {
    check_same_dim(r.size(), d, "top_principal_components");
  }
  if (k < 1 || static_cast<std::size_t>(k) > std::min(n, d)) {
    throw std::invalid_argument(
        "top_principal_components: k=" + std::to_string(k) +
        " out of range for " + std::to_string(n) + " rows of dim " +
        std::to_string(d));
  }

  DenseVector mean(d, 0.0);
  for (const auto& r : rows) axpy(1.0 / static_cast<double>(n), r, mean);
  std::vector<DenseVector> centered(n, DenseVector(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) centered[i][j] = rows[i][j] - mean[j];
  }

  std::vector<double> eigenvalues;
  std::vector<DenseVector> eigenvectors;
  std::vector<DenseVector> components;

  if (d <= n) {
    std::vector<DenseVector> cov(d, DenseVector(d, 0.0));
    for (const auto& c : centered) {
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
          cov[i][j] += c[i] * c[j] / static_cast<double>(n);
        }
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < i; ++j) cov[i][j] = cov[j][i];
    }
    detail::jacobi_eigen_symmetric(std::move(cov), eigenvalues, eigenvectors);
    components = std::move(eigenvectors);
  } else {
    std::vector<DenseVector> gram(n, DenseVector(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        gram[i][j] = gram[j][i] =
            dot(centered[i], centered[j]) / static_cast<double>(n);
      }
    }
    detail::jacobi_eigen_symmetric(std::move(gram), eigenvalues, eigenvectors);
    // Map each Gram eigenvector q back to feature space: v = X^T q.
    for (const auto& q : eigenvectors) {
      DenseVector comp(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) axpy(q[i], centered[i], comp);
      components.push_back(std::move(comp));
    }
  }

  const double lambda_max = eigenvalues.empty() ? 0.0 : eigenvalues[0];
  const double rank_tol = lambda_max > 0.0 ? lambda_max * 1e-10 : 0.0;
  int rank = 0;
  for (double lambda : eigenvalues) {
    if (lambda > rank_tol && lambda > 0.0) ++rank;
  }
  if (rank < k) throw RankError(rank, k);

  std::vector<DenseVector> out;
  out.reserve(k);
  for (int c = 0; c < k; ++c) {
    DenseVector comp = components[c];
    const double len = norm(comp);
    for (auto& x : comp) x /= len;
    detail::fix_sign(comp);
    out.push_back(std::move(comp));
  }
  return out;
}

}  // namespace debias
