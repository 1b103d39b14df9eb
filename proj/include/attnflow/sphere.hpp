#pragma once

// Primitive operations on the unit sphere S^{d-1}: tangent projection,
// renormalized stepping and sampling.

#include <Eigen/Dense>

#include <random>
#include <stdexcept>

namespace attnflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// P_x(y) = y - <x,y> x, the orthogonal projection onto T_x S^{d-1}.
inline Vec project_tangent(const Vec& x, const Vec& y) {
  return y - x.dot(y) * x;
}

/// One step of the project-then-normalize scheme: (x + h v) / |x + h v|.
inline Vec renormalized_step(const Vec& x, const Vec& v, double h) {
  Vec z = x + h * v;
  const double n = z.norm();
  if (n < 1e-14)
    throw NumericalError("renormalized_step: degenerate pre-normalization vector");
  return z / n;
}

/// Geodesic (exponential-map) step, kept as a cross-check for the
/// renormalized scheme.
inline Vec exponential_step(const Vec& x, const Vec& v, double h) {
  const double s = h * v.norm();
  if (s < 1e-300) return x;
  return std::cos(s) * x + std::sin(s) * v / v.norm();
}

inline Vec sample_gaussian(Rng& rng, int d) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec z(d);
  for (int i = 0; i < d; ++i) z[i] = gauss(rng);
  return z;
}

/// Uniform sample on S^{d-1} via a normalized isotropic Gaussian.
inline Vec sample_uniform(Rng& rng, int d) {
  if (d < 2) throw std::invalid_argument("sample_uniform: d must be >= 2");
  while (true) {
    Vec z = sample_gaussian(rng, d);
    const double n = z.norm();
    if (n > 1e-12) return z / n;
  }
}

}  // namespace attnflow
