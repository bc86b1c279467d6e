#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyrrt {

/// Upper bound on state and input dimension. Vectors are dynamically sized
/// but never heap-allocate, which keeps the integrator inner loop cheap.
inline constexpr int kMaxDim = 16;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Rng = std::mt19937_64;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double value : values) v[i++] = value;
  return v;
}

inline Vector vec(const std::vector<double>& values) {
  if (values.size() > static_cast<std::size_t>(kMaxDim))
    throw Error("vector dimension exceeds kMaxDim");
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

inline bool all_finite(const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Axis-aligned box; a degenerate box (lower == upper) is a single point.
struct Box {
  Vector lower;
  Vector upper;

  static Box point(const Vector& p) { return Box{p, p}; }

  int dim() const { return static_cast<int>(lower.size()); }

  bool empty() const {
    for (Eigen::Index i = 0; i < lower.size(); ++i)
      if (lower[i] > upper[i]) return true;
    return false;
  }

  bool contains(const Vector& x, double slack = 0.0) const {
    if (x.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
    return true;
  }

  /// Euclidean distance from x to the box (zero inside).
  double distance(const Vector& x) const {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      double d = 0.0;
      if (x[i] < lower[i]) d = lower[i] - x[i];
      else if (x[i] > upper[i]) d = x[i] - upper[i];
      sq += d * d;
    }
    return std::sqrt(sq);
  }

  Box intersect(const Box& other) const {
    return Box{lower.cwiseMax(other.lower), upper.cwiseMin(other.upper)};
  }

  Vector sample(Rng& rng) const {
    Vector x(lower.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x[i] = lower[i] == upper[i] ? lower[i]
                                  : std::uniform_real_distribution<double>(lower[i], upper[i])(rng);
    }
    return x;
  }
};

}  // namespace hyrrt
