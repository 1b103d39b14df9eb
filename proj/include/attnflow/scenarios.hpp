#pragma once

// Scenario registry, initial-condition samplers, and rate-fitting utilities
// for the verification suite.

#include "attnflow/dynamics.hpp"
#include "attnflow/heat.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace attnflow {

enum class InitKind {
  Uniform,                        // i.i.d. uniform on S^{d-1}
  CircleMixture,                  // d=2, azimuth from the heat mixture
  PlaneMixture,                   // d=3, azimuth from the mixture, z = 0
  SphereMixtureUniformElevation,  // d=3, azimuth from the mixture, height z
                                  // uniform on (-1, 1) as under the uniform
                                  // surface measure
};

struct Scenario {
  std::string id;
  int d = 3;
  int N = 1000;
  ModelParams params;
  IntegratorConfig cfg;
  InitKind init = InitKind::Uniform;
  HeatMixture mixture;  // azimuthal law for mixture inits
  int gamma = 0;        // heat-phase sign (+1 backward, -1 forward, 0 n/a)
  unsigned long long seed = 1;
  std::vector<std::string> observables;
};

namespace detail {

inline HeatMixture three_component_mixture() {
  // weights (0.2, 0.5, 0.3) at azimuths (pi/2, 0, 4pi/3); component variance
  // is the heat time sigma0^2 = 0.04 (wrapped-Gaussian angular variance
  // 2 * 0.04).
  HeatMixture m;
  m.d = 2;
  const double means[3] = {M_PI / 2.0, 0.0, 4.0 * M_PI / 3.0};
  const double weights[3] = {0.2, 0.5, 0.3};
  for (int j = 0; j < 3; ++j) {
    HeatComponent c;
    c.center = (Vec(2) << std::cos(means[j]), std::sin(means[j])).finished();
    c.var = 0.04;
    c.weight = weights[j];
    m.components.push_back(c);
  }
  return m;
}

inline HeatMixture four_component_mixture() {
  HeatMixture m;
  m.d = 2;
  const double means[4] = {0.0, 1.2, 2.9, 4.8};
  const double weights[4] = {0.3, 0.3, 0.2, 0.2};
  for (int j = 0; j < 4; ++j) {
    HeatComponent c;
    c.center = (Vec(2) << std::cos(means[j]), std::sin(means[j])).finished();
    c.var = 0.04;
    c.weight = weights[j];
    m.components.push_back(c);
  }
  return m;
}

}  // namespace detail

inline Scenario scenario_defaults(const std::string& id) {
  Scenario s;
  s.id = id;
  if (id == "1a" || id == "1b") {
    s.d = 3;
    s.N = 10000;
    s.params = ModelParams::identity(3, 30.0);
    if (id == "1a") {
      s.params.V = Eigen::Vector3d(2.0, 1.0, 1.0).asDiagonal();
    } else {
      s.params.V = (Mat(3, 3) << 1.0, -1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0).finished();
    }
    s.cfg.scheme = Scheme::ProjectedEuler;
    s.cfg.h = 1e-2;
    s.cfg.clock = Clock::Plain;
    s.cfg.max_steps = 400;
    s.init = InitKind::Uniform;
    s.observables = {"subspace_distance"};
  } else if (id == "2a") {
    s.d = 3;
    s.N = 10000;
    s.params = ModelParams::identity(3, 10.0);
    s.params.V = Eigen::Vector3d(1.0, 1.0, 0.5).asDiagonal();
    s.cfg.scheme = Scheme::ProjectedEuler;
    s.cfg.h = 1e-3;
    s.cfg.clock = Clock::Heat;
    s.cfg.max_steps = 1500;
    s.init = InitKind::SphereMixtureUniformElevation;
    s.mixture = detail::three_component_mixture();
    s.gamma = +1;
    s.observables = {"cluster_count"};
  } else if (id == "2b") {
    s.d = 2;
    s.N = 50000;
    s.params = ModelParams::identity(2, 50.0);
    s.params.V = -Mat::Identity(2, 2);
    s.cfg.scheme = Scheme::ProjectedEuler;
    s.cfg.h = 1e-3;
    s.cfg.clock = Clock::Heat;
    s.cfg.max_steps = 200;
    s.init = InitKind::CircleMixture;
    s.mixture = detail::three_component_mixture();
    s.gamma = -1;
    s.observables = {"w1_to_oracle"};
  } else if (id == "full_story") {
    s.d = 3;
    s.N = 500;
    s.params = ModelParams::identity(3, 10.0);
    s.params.V = Eigen::Vector3d(1.0, 1.0, 0.5).asDiagonal();
    s.cfg.scheme = Scheme::ProjectedEuler;
    s.cfg.h = 1e-2;
    s.cfg.clock = Clock::Plain;
    s.cfg.max_steps = 2000;
    s.init = InitKind::PlaneMixture;
    s.mixture = detail::four_component_mixture();
    s.observables = {"energy_log"};
  } else {
    throw std::invalid_argument("scenario_defaults: unknown scenario id '" + id + "'");
  }
  return s;
}

/// I.i.d. draws from a wrapped-normal mixture on S^1 (angles in [0, 2pi)).
inline std::vector<double> sample_mixture_circle(const std::vector<double>& weights,
                                                 const std::vector<double>& means, double sigma,
                                                 int n, Rng& rng) {
  if (weights.size() != means.size() || weights.empty())
    throw std::invalid_argument("sample_mixture_circle: weights/means size mismatch");
  std::discrete_distribution<int> comp(weights.begin(), weights.end());
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const double a = means[comp(rng)] + noise(rng);
    const double w = std::fmod(a, 2.0 * M_PI);
    out[i] = w < 0 ? w + 2.0 * M_PI : w;
  }
  return out;
}

/// Draws azimuths from a heat mixture (component j is a wrapped normal with
/// angular variance 2 * var_j).
inline std::vector<double> sample_heat_mixture_circle(const HeatMixture& m, int n, Rng& rng) {
  std::vector<double> weights, means;
  for (const auto& c : m.components) {
    if (c.dirac) throw std::invalid_argument("sample_heat_mixture_circle: dirac component");
    weights.push_back(c.weight);
    means.push_back(std::atan2(c.center[1], c.center[0]));
  }
  std::discrete_distribution<int> comp(weights.begin(), weights.end());
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const int j = comp(rng);
    std::normal_distribution<double> noise(0.0, std::sqrt(2.0 * m.components[j].var));
    const double a = means[j] + noise(rng);
    const double w = std::fmod(a, 2.0 * M_PI);
    out[i] = w < 0 ? w + 2.0 * M_PI : w;
  }
  return out;
}

/// Materializes the initial particle state of a scenario.
inline ParticleState init_state(const Scenario& s, Rng& rng) {
  ParticleState st;
  st.points = Mat(s.d, s.N);
  switch (s.init) {
    case InitKind::Uniform:
      for (int i = 0; i < s.N; ++i) st.points.col(i) = sample_uniform(rng, s.d);
      break;
    case InitKind::CircleMixture: {
      if (s.d != 2) throw std::invalid_argument("init_state: CircleMixture requires d=2");
      const auto angles = sample_heat_mixture_circle(s.mixture, s.N, rng);
      for (int i = 0; i < s.N; ++i)
        st.points.col(i) = (Vec(2) << std::cos(angles[i]), std::sin(angles[i])).finished();
      break;
    }
    case InitKind::PlaneMixture: {
      if (s.d != 3) throw std::invalid_argument("init_state: PlaneMixture requires d=3");
      const auto angles = sample_heat_mixture_circle(s.mixture, s.N, rng);
      for (int i = 0; i < s.N; ++i)
        st.points.col(i) =
            (Vec(3) << std::cos(angles[i]), std::sin(angles[i]), 0.0).finished();
      break;
    }
    case InitKind::SphereMixtureUniformElevation: {
      if (s.d != 3)
        throw std::invalid_argument("init_state: SphereMixtureUniformElevation requires d=3");
      const auto angles = sample_heat_mixture_circle(s.mixture, s.N, rng);
      std::uniform_real_distribution<double> height(-1.0, 1.0);
      for (int i = 0; i < s.N; ++i) {
        const double z = height(rng), rho = std::sqrt(1.0 - z * z);
        st.points.col(i) =
            (Vec(3) << std::cos(angles[i]) * rho, std::sin(angles[i]) * rho, z).finished();
      }
      break;
    }
  }
  return st;
}

struct RateFit {
  std::vector<double> xs, ys;  // the fitted (possibly log-transformed) pairs
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least-squares line through (xs, ys).
inline RateFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 3)
    throw std::invalid_argument("fit_line: need at least 3 matching points");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
  if (vx <= 0) throw std::invalid_argument("fit_line: xs are constant");
  RateFit f;
  f.xs = xs;
  f.ys = ys;
  f.slope = cxy / vx;
  f.intercept = (sy - f.slope * sx) / n;
  f.r2 = vy > 0 ? cxy * cxy / (vx * vy) : 1.0;
  return f;
}

/// Least-squares power-law fit on (log x, log y); xs must be positive and
/// strictly increasing, ys positive.
inline RateFit fit_rate(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 3)
    throw std::invalid_argument("fit_rate: need at least 3 matching points");
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0) || !(ys[i] > 0))
      throw std::invalid_argument("fit_rate: xs and ys must be positive");
    if (i > 0 && xs[i] <= xs[i - 1])
      throw std::invalid_argument("fit_rate: xs must be strictly increasing");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  return fit_line(lx, ly);
}

}  // namespace attnflow
