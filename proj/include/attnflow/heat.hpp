#pragma once

// Analytic heat-phase oracle: spherical heat kernels and the closed-form
// forward/backward evolution of heat-kernel mixtures (variance arithmetic
// var_j -> var_j - gamma t).

#include "attnflow/sphere.hpp"
#include "attnflow/vmf.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace attnflow {

// Crossover between the wrapped-Gaussian image sum (small t) and the Fourier
// series (large t) for the circle kernel.
inline constexpr double kCircleKernelCrossover = 0.5;

/// Heat kernel on S^1 at angular offset theta and heat time t, normalized so
/// that int_0^{2pi} = 1.
inline double heat_kernel_circle(double theta, double t) {
  if (!(t > 0)) throw std::invalid_argument("heat_kernel_circle: t must be > 0");
  if (t < kCircleKernelCrossover) {
    // image sum of the line kernel (variance 2t)
    const double inv = 1.0 / std::sqrt(4.0 * M_PI * t);
    double acc = 0.0;
    for (int k = 0;; ++k) {
      const double tp = std::exp(-(theta + 2.0 * M_PI * k) * (theta + 2.0 * M_PI * k) / (4.0 * t));
      const double tm = k == 0 ? 0.0
                               : std::exp(-(theta - 2.0 * M_PI * k) * (theta - 2.0 * M_PI * k) /
                                          (4.0 * t));
      acc += tp + tm;
      if (k > 0 && tp + tm < 1e-18) break;
    }
    return inv * acc;
  }
  // spectral form
  double acc = 1.0;
  for (int l = 1;; ++l) {
    const double e = std::exp(-static_cast<double>(l) * l * t);
    acc += 2.0 * e * std::cos(l * theta);
    if (e < 1e-18) break;
  }
  return acc / (2.0 * M_PI);
}

/// d/dtheta of heat_kernel_circle (same image-sum / Fourier split).
inline double heat_kernel_circle_deriv(double theta, double t) {
  if (!(t > 0)) throw std::invalid_argument("heat_kernel_circle_deriv: t must be > 0");
  if (t < kCircleKernelCrossover) {
    const double inv = 1.0 / std::sqrt(4.0 * M_PI * t);
    double acc = 0.0;
    for (int k = 0;; ++k) {
      const double up = theta + 2.0 * M_PI * k, um = theta - 2.0 * M_PI * k;
      const double tp = std::exp(-up * up / (4.0 * t));
      const double tm = k == 0 ? 0.0 : std::exp(-um * um / (4.0 * t));
      acc += -up / (2.0 * t) * tp - (k == 0 ? 0.0 : um / (2.0 * t) * tm);
      if (k > 0 && tp + tm < 1e-18) break;
    }
    return inv * acc;
  }
  double acc = 0.0;
  for (int l = 1;; ++l) {
    const double e = std::exp(-static_cast<double>(l) * l * t);
    acc -= 2.0 * l * e * std::sin(l * theta);
    if (e < 1e-18) break;
  }
  return acc / (2.0 * M_PI);
}

/// Heat kernel on S^{d-1}, d >= 3, as a Gegenbauer series in cos of the
/// angle, normalized as a surface density.
inline double heat_kernel_sphere(double cos_angle, double t, int d) {
  if (d < 3) throw std::invalid_argument("heat_kernel_sphere: d must be >= 3 (use circle kernel)");
  if (t < 1e-6)
    throw NumericalError("heat_kernel_sphere: t below series-convergence floor 1e-6");
  cos_angle = std::clamp(cos_angle, -1.0, 1.0);
  const double alpha = 0.5 * (d - 2);
  // Gegenbauer recurrence for C_l^alpha(x), plus the same recurrence at x=1
  // to normalize P~_l = C_l(x)/C_l(1) with P~_l(1) = 1.
  double c_prev = 1.0, c_cur = 2.0 * alpha * cos_angle;
  double n_prev = 1.0, n_cur = 2.0 * alpha;
  double dim_prev = 1.0;  // dim of degree-0 harmonics
  double acc = dim_prev;  // l = 0 term (kernel integrates to 1)
  for (int l = 1; l <= 2000000; ++l) {
    // dim of degree-l spherical harmonics on S^{d-1}:
    // (2l+d-2)/(d-2) * binom(l+d-3, l); computed incrementally.
    double dim_l;
    if (l == 1) {
      dim_l = d;
    } else {
      // binom ratio: binom(l+d-3,l)/binom(l+d-4,l-1) = (l+d-3)/l
      dim_l = dim_prev * (2.0 * l + d - 2.0) / (2.0 * (l - 1) + d - 2.0) * (l + d - 3.0) / l;
    }
    const double decay = std::exp(-static_cast<double>(l) * (l + d - 2.0) * t);
    acc += decay * dim_l * (c_cur / n_cur);
    if (decay * dim_l < 1e-14) break;
    dim_prev = dim_l;
    const double lp = l + 1;
    const double c_next = (2.0 * (lp + alpha - 1.0) * cos_angle * c_cur - (lp + 2.0 * alpha - 2.0) * c_prev) / lp;
    const double n_next = (2.0 * (lp + alpha - 1.0) * n_cur - (lp + 2.0 * alpha - 2.0) * n_prev) / lp;
    c_prev = c_cur;
    c_cur = c_next;
    n_prev = n_cur;
    n_cur = n_next;
  }
  return acc / sphere_area(d - 1);
}

struct HeatComponent {
  Vec center;
  double var = 0.0;   // heat time of the kernel
  double weight = 0.0;
  bool dirac = false; // collapsed component (var meaningless)
};

struct HeatMixture {
  std::vector<HeatComponent> components;
  int d = 2;

  double min_var() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : components)
      if (!c.dirac) m = std::min(m, c.var);
    return m;
  }
};

/// Closed-form mixture evolution: var_j <- var_j - gamma * t. Backward
/// evolution (gamma = +1) fails at or past the first collapse time.
inline HeatMixture mixture_evolve(const HeatMixture& m, double t, int gamma) {
  if (gamma != 1 && gamma != -1)
    throw std::invalid_argument("mixture_evolve: gamma must be +1 or -1");
  HeatMixture out = m;
  for (std::size_t j = 0; j < out.components.size(); ++j) {
    auto& c = out.components[j];
    if (c.dirac) continue;
    const double nv = c.var - gamma * t;
    if (nv <= 0.0) {
      std::ostringstream msg;
      msg << "mixture_evolve: component " << j << " (var=" << c.var
          << ") collapses at t=" << c.var << " <= requested t=" << t;
      throw NumericalError(msg.str());
    }
    c.var = nv;
  }
  return out;
}

/// Mixture density at a point on the sphere. Undefined if any component has
/// collapsed to a dirac.
inline double mixture_density(const HeatMixture& m, const Vec& x) {
  double acc = 0.0;
  for (const auto& c : m.components) {
    if (c.dirac)
      throw NumericalError("mixture_density: dirac component present, density undefined");
    if (m.d == 2) {
      const double theta = std::atan2(x[1], x[0]) - std::atan2(c.center[1], c.center[0]);
      acc += c.weight * heat_kernel_circle(theta, c.var);
    } else {
      acc += c.weight * heat_kernel_sphere(c.center.dot(x), c.var, m.d);
    }
  }
  return acc;
}

/// Circle specialization: density as a function of the azimuth.
inline double mixture_density_circle(const HeatMixture& m, double theta) {
  double acc = 0.0;
  for (const auto& c : m.components) {
    if (c.dirac)
      throw NumericalError("mixture_density_circle: dirac component present");
    acc += c.weight * heat_kernel_circle(theta - std::atan2(c.center[1], c.center[0]), c.var);
  }
  return acc;
}

/// d/dtheta of mixture_density_circle.
inline double mixture_density_circle_deriv(const HeatMixture& m, double theta) {
  double acc = 0.0;
  for (const auto& c : m.components) {
    if (c.dirac)
      throw NumericalError("mixture_density_circle_deriv: dirac component present");
    acc +=
        c.weight * heat_kernel_circle_deriv(theta - std::atan2(c.center[1], c.center[0]), c.var);
  }
  return acc;
}

}  // namespace attnflow
