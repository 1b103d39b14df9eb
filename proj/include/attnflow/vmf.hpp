#pragma once

// Von Mises-Fisher numerics: the modified-Bessel ratio
// A(beta) = I_{d/2}(beta) / I_{d/2-1}(beta), its derivatives, exact VMF
// sampling, and the concentrated surface integrals
// int_{S^{d-1}} (1 - <x,y>)^{k/2} e^{beta <x,y>} dy.

#include "attnflow/sphere.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace attnflow {

/// Surface area of S^{m} embedded in R^{m+1}.
inline double sphere_area(int m) {
  return 2.0 * std::pow(M_PI, 0.5 * (m + 1)) / std::tgamma(0.5 * (m + 1));
}

namespace detail {

// Ratio I_{nu+1}(x) / I_nu(x) by the Gautschi/Perron continued fraction
//   r_nu = 1 / (2(nu+1)/x + r_{nu+1}),
// evaluated with the modified Lentz algorithm. Never forms I_nu itself, so
// it is overflow-safe for arbitrarily large x.
inline double bessel_ratio(double nu, double x) {
  if (x == 0.0) return 0.0;
  const double tiny = 1e-300;
  double f = tiny, c = f, d = 0.0;
  for (long k = 1; k <= 20000000L; ++k) {
    const double b = 2.0 * (nu + k) / x;  // a_k = 1
    d = b + d;
    if (std::abs(d) < tiny) d = tiny;
    c = b + 1.0 / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) return f;
  }
  throw NumericalError("bessel_ratio: continued fraction did not converge");
}

// 32-point Gauss-Legendre nodes/weights on [-1, 1].
inline const std::pair<std::array<double, 32>, std::array<double, 32>>& gauss_legendre_32() {
  static const auto table = [] {
    std::pair<std::array<double, 32>, std::array<double, 32>> t{};
    const int n = 32;
    for (int i = 0; i < n; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
        }
        pp = n * (x * p0 - p1) / (x * x - 1.0);
        const double dx = p0 / pp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      t.first[i] = x;
      t.second[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return t;
  }();
  return table;
}

// Composite 32-point Gauss-Legendre over [lo, hi] with `panels` panels.
template <class F>
double gl_composite(F&& f, double lo, double hi, int panels) {
  const auto& [xs, ws] = gauss_legendre_32();
  const double w = (hi - lo) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * w, mid = a + 0.5 * w, half = 0.5 * w;
    double acc = 0.0;
    for (int i = 0; i < 32; ++i) acc += ws[i] * f(mid + half * xs[i]);
    total += half * acc;
  }
  return total;
}

template <class F>
double gl_adaptive(F&& f, double lo, double hi, int min_panels, double rel_tol = 1e-10) {
  int panels = std::max(1, min_panels);
  double prev = gl_composite(f, lo, hi, panels);
  for (int level = 0; level < 18; ++level) {
    panels *= 2;
    const double cur = gl_composite(f, lo, hi, panels);
    if (std::abs(cur - prev) <= rel_tol * std::max(std::abs(cur), 1e-300)) return cur;
    prev = cur;
  }
  throw NumericalError("gl_adaptive: quadrature did not converge");
}

}  // namespace detail

/// Mean resultant length A(beta) of the VMF distribution on S^{d-1}.
inline double vmf_mean_resultant(double beta, int d) {
  if (beta < 0) throw std::invalid_argument("vmf_mean_resultant: beta must be >= 0");
  if (d < 2) throw std::invalid_argument("vmf_mean_resultant: d must be >= 2");
  return detail::bessel_ratio(0.5 * d - 1.0, beta);
}

/// A'(beta) = 1 - A^2 - (d-1) A / beta.
inline double vmf_A_prime(double beta, int d) {
  const double a = vmf_mean_resultant(beta, d);
  return 1.0 - a * a - (d - 1) * a / beta;
}

/// A''(beta) = -2 A A' - (d-1) A'/beta + (d-1) A/beta^2.
inline double vmf_A_doubleprime(double beta, int d) {
  const double a = vmf_mean_resultant(beta, d);
  const double ap = 1.0 - a * a - (d - 1) * a / beta;
  return -2.0 * a * ap - (d - 1) * ap / beta + (d - 1) * a / (beta * beta);
}

struct VmfParams {
  Vec mean_dir;
  double kappa = 0.0;
};

/// Exact VMF sampling (Wood's rejection scheme on t = <mean_dir, Y> plus a
/// uniform tangential direction).
inline Vec sample_vmf(Rng& rng, const VmfParams& p) {
  const int d = static_cast<int>(p.mean_dir.size());
  if (d < 2) throw std::invalid_argument("sample_vmf: d must be >= 2");
  if (p.kappa < 0) throw std::invalid_argument("sample_vmf: kappa must be >= 0");
  if (p.kappa == 0.0) return sample_uniform(rng, d);

  const double kappa = p.kappa, m = d - 1;
  const double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + m * m)) / m;
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + m * std::log(1.0 - x0 * x0);

  std::gamma_distribution<double> gamma(0.5 * m, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double w = 0.0;
  while (true) {
    const double g1 = gamma(rng), g2 = gamma(rng);
    const double z = g1 / (g1 + g2);  // Beta((d-1)/2, (d-1)/2)
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = unif(rng);
    if (kappa * w + m * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }

  // uniform direction orthogonal to mean_dir
  Vec v;
  while (true) {
    v = project_tangent(p.mean_dir, sample_gaussian(rng, d));
    const double n = v.norm();
    if (n > 1e-12) {
      v /= n;
      break;
    }
  }
  Vec y = w * p.mean_dir + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
  return y / y.norm();
}

/// log of int_{S^{d-1}} (1 - <x,y>)^{k/2} e^{beta <x,y>} dy, computed with the
/// exponential factored out so arbitrarily large beta is safe.
inline double surface_integral_log(double k, double beta, int d, int n_quad = 64) {
  if (n_quad < 64) throw std::invalid_argument("surface_integral_log: n_quad must be >= 64");
  // reduce to the polar angle: |S^{d-2}| int_0^pi (1-cos)^{k/2} e^{b(cos-1)} sin^{d-2}
  auto f = [&](double theta) {
    const double ct = std::cos(theta);
    return std::pow(1.0 - ct, 0.5 * k) * std::exp(beta * (ct - 1.0)) *
           std::pow(std::sin(theta), d - 2);
  };
  const double j = detail::gl_adaptive(f, 0.0, M_PI, n_quad / 32);
  if (!(j > 0.0)) throw NumericalError("surface_integral_log: non-positive quadrature value");
  return beta + std::log(sphere_area(d - 2) * j);
}

inline double surface_integral_estimate(double k, double beta, int d, int n_quad = 64) {
  return std::exp(surface_integral_log(k, beta, d, n_quad));
}

}  // namespace attnflow
