#pragma once

// Particle dynamics: the finite-beta self-attention field and integrators,
// the alignment limit flow, the rescaled heat field, and the pairing-phase
// limit ODE with its exponential clock.

#include "attnflow/parallel.hpp"
#include "attnflow/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace attnflow {

struct ModelParams {
  Mat Q, K, V;
  double beta = 1.0;

  static ModelParams identity(int d, double beta) {
    return {Mat::Identity(d, d), Mat::Identity(d, d), Mat::Identity(d, d), beta};
  }
};

struct ParticleState {
  Mat points;  // d x N, unit columns
  double time = 0.0;
  double rescaled_time = 0.0;

  int dim() const { return static_cast<int>(points.rows()); }
  int size() const { return static_cast<int>(points.cols()); }
};

enum class Scheme { ProjectedEuler, ProjectedRk4, DiscreteLayer };
enum class Clock { Plain, Heat, Pairing };

struct IntegratorConfig {
  Scheme scheme = Scheme::ProjectedEuler;
  double h = 1e-2;
  Clock clock = Clock::Plain;
  int max_steps = 100;
  int snapshot_stride = 10;
  bool store_points = true;
  double pairing_stop_inner = 2.0;  // <= 1 enables early halt on pair inner product
  int threads = 1;
  // Sorted-order reductions: bitwise permutation equivariance at O(N^2 log N)
  bool canonical_reduction = false;
};

struct SeriesPoint {
  double t;
  double value;
};

struct Snapshot {
  int step;
  double time;
  double rescaled_time;
  Mat points;
};

struct Observer {
  std::string name;
  std::function<double(const ParticleState&)> fn;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<std::pair<std::string, std::vector<SeriesPoint>>> series;
};

namespace detail {

// Softmax-weighted interaction sums, blocked over target particles so the
// score matrix stays small and Eigen can vectorize the exponentials. When
// the full exponent range 2*beta*|Q|_2|K|_2 fits the double exp range, a
// constant shift replaces the per-column maximum (one less pass over the
// N^2 scores); otherwise row maxima are subtracted per column. Both paths
// normalize by the column sum, so the shift cancels exactly.
inline Mat interaction_sums(const Mat& x, const ModelParams& p, int threads) {
  const int n = static_cast<int>(x.cols());
  const double score_bound = p.Q.jacobiSvd().singularValues()[0] *
                             p.K.jacobiSvd().singularValues()[0];
  const bool safe_range = 2.0 * p.beta * score_bound < 700.0;
  const Mat qx = (safe_range ? Mat(p.beta * p.Q) : p.Q) * x;
  const Mat kx = p.K * x, vx = p.V * x;
  const double shift = p.beta * score_bound;
  Mat out(x.rows(), n);
  constexpr int kBlock = 256;
  const long nblocks = (n + kBlock - 1) / kBlock;
  parallel_chunks(nblocks, threads, [&](long lo, long hi) {
    Mat scores(n, kBlock);
    for (long b = lo; b < hi; ++b) {
      const int c0 = static_cast<int>(b) * kBlock;
      const int bw = std::min(kBlock, n - c0);
      scores.leftCols(bw).noalias() = kx.transpose() * qx.middleCols(c0, bw);
      if (safe_range) {
        scores.leftCols(bw).array() = (scores.leftCols(bw).array() - shift).exp();
      } else {
        for (int c = 0; c < bw; ++c) {
          auto col = scores.col(c).array();
          col = ((col - col.maxCoeff()) * p.beta).exp();
        }
      }
      out.middleCols(c0, bw).noalias() = vx * scores.leftCols(bw);
      for (int c = 0; c < bw; ++c) out.col(c0 + c) /= scores.col(c).sum();
    }
  });
  return out;
}

// Sum in canonical (sorted) order: the result is a function of the input
// multiset only, so it is bitwise identical under any permutation of the
// inputs.
inline double canonical_sum(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc;
}

// Order-canonical variant of interaction_sums: every reduction over the
// source index j is performed in sorted-value order, which makes whole
// trajectories bitwise equivariant under particle permutations. O(N^2 log N);
// intended for invariant tests and small N.
inline Mat interaction_sums_canonical(const Mat& x, const ModelParams& p) {
  const int n = static_cast<int>(x.cols());
  const int d = static_cast<int>(x.rows());
  const Mat qx = p.Q * x, kx = p.K * x, vx = p.V * x;
  Mat out(d, n);
  std::vector<double> w(n), terms(n);
  for (int i = 0; i < n; ++i) {
    double smax = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) smax = std::max(smax, kx.col(j).dot(qx.col(i)));
    for (int j = 0; j < n; ++j)
      w[j] = std::exp(p.beta * (kx.col(j).dot(qx.col(i)) - smax));
    std::vector<double> z(w);
    const double zsum = canonical_sum(z);
    for (int c = 0; c < d; ++c) {
      for (int j = 0; j < n; ++j) terms[j] = w[j] * vx(c, j);
      out(c, i) = canonical_sum(terms) / zsum;
    }
  }
  return out;
}

inline void project_columns(const Mat& x, Mat& f) {
  const Eigen::RowVectorXd dots = (x.array() * f.array()).colwise().sum();
  f -= x * dots.asDiagonal();
}

inline void normalize_columns(Mat& x) {
  for (int i = 0; i < x.cols(); ++i) {
    const double n = x.col(i).norm();
    if (n < 1e-14) {
      std::ostringstream msg;
      msg << "normalize_columns: degenerate vector at particle " << i;
      throw NumericalError(msg.str());
    }
    x.col(i) /= n;
  }
}

using FieldFn = std::function<Mat(const Mat&)>;

inline Mat advance(const Mat& x, const FieldFn& field, Scheme scheme, double h) {
  switch (scheme) {
    case Scheme::ProjectedEuler: {
      Mat y = x + h * field(x);
      normalize_columns(y);
      return y;
    }
    case Scheme::ProjectedRk4: {
      const Mat k1 = field(x);
      Mat s2 = x + 0.5 * h * k1;
      normalize_columns(s2);
      const Mat k2 = field(s2);
      Mat s3 = x + 0.5 * h * k2;
      normalize_columns(s3);
      const Mat k3 = field(s3);
      Mat s4 = x + h * k3;
      normalize_columns(s4);
      const Mat k4 = field(s4);
      Mat y = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      normalize_columns(y);
      return y;
    }
    case Scheme::DiscreteLayer:
      throw std::logic_error("advance: discrete layer handled separately");
  }
  throw std::logic_error("advance: unknown scheme");
}

}  // namespace detail

/// Tangent interaction field of Eq. (SA): for each particle i,
/// P_{x_i}(sum_j softmax_j(beta <Q x_i, K x_j>) V x_j).
inline Mat attention_field(const ParticleState& s, const ModelParams& p, int threads = 1,
                           bool canonical = false) {
  Mat f = canonical ? detail::interaction_sums_canonical(s.points, p)
                    : detail::interaction_sums(s.points, p, threads);
  detail::project_columns(s.points, f);
  return f;
}

/// Same field with the tangent projection applied to each summand before
/// accumulation. Mathematically identical (the projection is linear), but
/// keeps full relative precision when the softmax is dominated by the
/// self-term whose projection vanishes — which is exactly the pairing-phase
/// regime, where the O(e^{-beta(1-d_t)}) cross-terms would otherwise drown in
/// the O(1) radial part and be amplified back by the clock dilation.
/// O(N^2 d) scalar loops; intended for small N.
inline Mat attention_field_projected_sum(const ParticleState& s, const ModelParams& p) {
  const int n = s.size(), d = s.dim();
  const Mat qx = p.Q * s.points, kx = p.K * s.points, vx = p.V * s.points;
  Mat f = Mat::Zero(d, n);
  Vec w(n);
  for (int i = 0; i < n; ++i) {
    const Vec xi = s.points.col(i);
    double smax = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) smax = std::max(smax, kx.col(j).dot(qx.col(i)));
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      w[j] = std::exp(p.beta * (kx.col(j).dot(qx.col(i)) - smax));
      z += w[j];
    }
    for (int j = 0; j < n; ++j)
      f.col(i) += w[j] * (vx.col(j) - xi.dot(vx.col(j)) * xi);
    f.col(i) /= z;
  }
  return f;
}

/// One discrete transformer layer: x_i <- N(x_i + softmax-weighted sum),
/// with no tangent projection before the normalization.
inline ParticleState discrete_layer_step(const ParticleState& s, const ModelParams& p,
                                         int threads = 1) {
  ParticleState out = s;
  out.points += detail::interaction_sums(s.points, p, threads);
  detail::normalize_columns(out.points);
  out.time += 1.0;
  out.rescaled_time += 1.0;
  return out;
}

struct ClosestPair {
  int i = -1, j = -1;
  double inner = -2.0;
};

/// Argmax over pairs of <x_i, x_j>, ties broken by lexicographic index order.
inline ClosestPair closest_pair(const ParticleState& s) {
  const int n = s.size();
  if (n < 2) throw std::invalid_argument("closest_pair: need at least two particles");
  const Mat g = s.points.transpose() * s.points;
  ClosestPair best;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (g(i, j) > best.inner) best = {i, j, g(i, j)};
  return best;
}

/// beta-rescaled field for the heat phase (component i of beta * chi_beta).
inline Vec rescaled_heat_field(const ParticleState& s, const ModelParams& p, int i,
                               int threads = 1) {
  return p.beta * attention_field(s, p, threads).col(i);
}

/// Limit field of the pairing phase: the closest pair moves along its
/// geodesic, everything else is frozen.
inline Mat pairing_limit_field(const ParticleState& s, const ClosestPair& pair) {
  Mat f = Mat::Zero(s.dim(), s.size());
  f.col(pair.i) = project_tangent(s.points.col(pair.i), s.points.col(pair.j));
  f.col(pair.j) = project_tangent(s.points.col(pair.j), s.points.col(pair.i));
  return f;
}

/// Alignment limit field P_x(V K^T Q x / |K^T Q x|).
inline Vec alignment_field(const Vec& x, const ModelParams& p) {
  const Vec b = p.K.transpose() * (p.Q * x);
  const double nb = b.norm();
  if (nb < 1e-12)
    throw NumericalError("alignment_field: |K^T Q x| < 1e-12 (matrices not invertible?)");
  return project_tangent(x, p.V * b / nb);
}

inline Mat alignment_field_all(const Mat& x, const ModelParams& p) {
  Mat f(x.rows(), x.cols());
  for (int i = 0; i < x.cols(); ++i) f.col(i) = alignment_field(x.col(i), p);
  return f;
}

namespace detail {

inline void record(Trajectory& traj, const ParticleState& s, int step, Clock clock,
                   bool store_points, const std::vector<Observer>& observers) {
  if (store_points) traj.snapshots.push_back({step, s.time, s.rescaled_time, s.points});
  const double t = clock == Clock::Plain ? s.time : s.rescaled_time;
  for (std::size_t k = 0; k < observers.size(); ++k)
    traj.series[k].second.push_back({t, observers[k].fn(s)});
}

template <class StepFn>
Trajectory integrate_loop(ParticleState s, const IntegratorConfig& cfg,
                          const std::vector<Observer>& observers, StepFn&& do_step) {
  Trajectory traj;
  traj.series.reserve(observers.size());
  for (const auto& ob : observers) traj.series.push_back({ob.name, {}});
  detail::record(traj, s, 0, cfg.clock, cfg.store_points, observers);
  for (int step = 1; step <= cfg.max_steps; ++step) {
    const bool stop = do_step(s);
    if (step % cfg.snapshot_stride == 0 || step == cfg.max_steps || stop)
      detail::record(traj, s, step, cfg.clock, cfg.store_points, observers);
    if (stop) break;
  }
  return traj;
}

}  // namespace detail

/// Advances the interacting system under the chosen scheme and clock.
/// Heat clock: integrates beta*chi in rescaled time s (dt = beta ds).
/// Pairing clock: physical step dt = h * exp(beta(1 - d_t)) with d_t the
/// closest-pair inner product, recomputed each step; exposes rescaled time
/// tau with dtau = h.
inline Trajectory integrate(const ParticleState& s0, const ModelParams& p,
                            const IntegratorConfig& cfg,
                            const std::vector<Observer>& observers = {}) {
  if (cfg.h <= 0 || cfg.max_steps < 1)
    throw std::invalid_argument("integrate: invalid integrator config");
  detail::FieldFn field = [&](const Mat& x) {
    ParticleState tmp{x, 0.0, 0.0};
    return attention_field(tmp, p, cfg.threads, cfg.canonical_reduction);
  };
  return detail::integrate_loop(s0, cfg, observers, [&](ParticleState& s) -> bool {
    switch (cfg.clock) {
      case Clock::Plain: {
        if (cfg.scheme == Scheme::DiscreteLayer) {
          s = discrete_layer_step(s, p, cfg.threads);
          return false;
        }
        s.points = detail::advance(s.points, field, cfg.scheme, cfg.h);
        s.time += cfg.h;
        s.rescaled_time += cfg.h;
        return false;
      }
      case Clock::Heat: {
        detail::FieldFn scaled = [&](const Mat& x) { return p.beta * field(x); };
        s.points = detail::advance(s.points, scaled, cfg.scheme, cfg.h);
        s.rescaled_time += cfg.h;
        s.time += p.beta * cfg.h;
        return false;
      }
      case Clock::Pairing: {
        const ClosestPair pair = closest_pair(s);
        const double expo = p.beta * (1.0 - pair.inner);
        if (expo > 700.0) {
          std::ostringstream msg;
          msg << "integrate: pairing clock factor e^" << expo << " exceeds cap e^700 at pair ("
              << pair.i << "," << pair.j << "), inner=" << pair.inner;
          throw NumericalError(msg.str());
        }
        // The pair's softmax weight on its partner is O(e^{-beta(1-d_t)}),
        // so the physical step must be dilated by the inverse factor for the
        // rescaled-clock motion to stay O(h) per step.
        const double dt = cfg.h * std::exp(expo);
        detail::FieldFn proj_field = [&](const Mat& x) {
          return attention_field_projected_sum({x, 0.0, 0.0}, p);
        };
        s.points = detail::advance(s.points, proj_field, cfg.scheme, dt);
        s.time += dt;
        s.rescaled_time += cfg.h;
        return cfg.pairing_stop_inner <= 1.0 && closest_pair(s).inner > cfg.pairing_stop_inner;
      }
    }
    return false;
  });
}

/// Non-interacting transport under the alignment limit field.
inline Trajectory integrate_alignment(const ParticleState& s0, const ModelParams& p, double h,
                                      double T, Scheme scheme = Scheme::ProjectedRk4,
                                      const std::vector<Observer>& observers = {},
                                      int snapshot_stride = 10, bool store_points = true) {
  IntegratorConfig cfg;
  cfg.scheme = scheme;
  cfg.h = h;
  cfg.max_steps = std::max(1, static_cast<int>(std::llround(T / h)));
  cfg.snapshot_stride = snapshot_stride;
  cfg.store_points = store_points;
  detail::FieldFn field = [&](const Mat& x) { return alignment_field_all(x, p); };
  return detail::integrate_loop(s0, cfg, observers, [&](ParticleState& s) -> bool {
    s.points = detail::advance(s.points, field, scheme, h);
    s.time += h;
    s.rescaled_time += h;
    return false;
  });
}

/// Pairing-phase limit ODE in the rescaled clock; halts once the pair inner
/// product exceeds 1 - eps.
inline Trajectory integrate_pairing_limit(const ParticleState& s0, double h, double eps,
                                          int max_steps, Scheme scheme = Scheme::ProjectedRk4,
                                          int snapshot_stride = 1) {
  const ClosestPair pair = closest_pair(s0);
  IntegratorConfig cfg;
  cfg.scheme = scheme;
  cfg.h = h;
  cfg.max_steps = max_steps;
  cfg.snapshot_stride = snapshot_stride;
  detail::FieldFn field = [&](const Mat& x) {
    ParticleState tmp{x, 0.0, 0.0};
    return pairing_limit_field(tmp, pair);
  };
  return detail::integrate_loop(s0, cfg, {}, [&](ParticleState& s) -> bool {
    s.points = detail::advance(s.points, field, scheme, h);
    s.time += h;
    s.rescaled_time += h;
    return s.points.col(pair.i).dot(s.points.col(pair.j)) > 1.0 - eps;
  });
}

}  // namespace attnflow
