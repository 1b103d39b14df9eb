#pragma once

// Metrics over particle configurations: Wasserstein-1 on the circle (exact
// CDF transport with weighted median), sliced W1 on S^{d-1}, interaction
// energy, single-linkage cluster detection, circular KDE, and quadrature
// evaluation of the attention kernel field against smooth circle densities.

#include "attnflow/dynamics.hpp"
#include "attnflow/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <vector>

namespace attnflow {

struct EmpiricalMeasure {
  Mat points;                   // d x n
  std::vector<double> weights;  // empty = uniform

  int dim() const { return static_cast<int>(points.rows()); }
  int size() const { return static_cast<int>(points.cols()); }
};

namespace detail {

inline std::vector<double> resolved_weights(const EmpiricalMeasure& m) {
  if (!m.weights.empty()) return m.weights;
  return std::vector<double>(m.size(), 1.0 / m.size());
}

inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  return a < 0 ? a + 2.0 * M_PI : a;
}

}  // namespace detail

inline double w1_circle_angles(const std::vector<double>& angles_a,
                               const std::vector<double>& weights_a,
                               const std::vector<double>& angles_b,
                               const std::vector<double>& weights_b);

/// Uniform-weight convenience overload.
inline double w1_circle_angles(const std::vector<double>& angles_a,
                               const std::vector<double>& angles_b) {
  return w1_circle_angles(angles_a, std::vector<double>(angles_a.size(), 1.0 / angles_a.size()),
                          angles_b, std::vector<double>(angles_b.size(), 1.0 / angles_b.size()));
}

/// Exact W1 between weighted atomic measures on S^1 with geodesic ground
/// cost: min_m int_0^{2pi} |F_a - F_b - m| with m the length-weighted median
/// of the CDF difference.
inline double w1_circle_angles(const std::vector<double>& angles_a,
                               const std::vector<double>& weights_a,
                               const std::vector<double>& angles_b,
                               const std::vector<double>& weights_b) {
  struct Event {
    double angle, delta;
  };
  std::vector<Event> events;
  events.reserve(angles_a.size() + angles_b.size());
  for (std::size_t i = 0; i < angles_a.size(); ++i)
    events.push_back({detail::wrap_angle(angles_a[i]), weights_a[i]});
  for (std::size_t i = 0; i < angles_b.size(); ++i)
    events.push_back({detail::wrap_angle(angles_b[i]), -weights_b[i]});
  std::sort(events.begin(), events.end(),
            [](const Event& x, const Event& y) { return x.angle < y.angle; });

  struct Segment {
    double length, value;
  };
  std::vector<Segment> segments;
  segments.reserve(events.size() + 1);
  double cum = 0.0, prev = 0.0;
  if (!events.empty() && events.front().angle > 0.0)
    segments.push_back({events.front().angle, 0.0});
  for (std::size_t k = 0; k < events.size(); ++k) {
    cum += events[k].delta;
    const double next = k + 1 < events.size() ? events[k + 1].angle : 2.0 * M_PI;
    if (next > events[k].angle) segments.push_back({next - events[k].angle, cum});
  }
  (void)prev;

  // length-weighted median of the CDF difference
  std::sort(segments.begin(), segments.end(),
            [](const Segment& x, const Segment& y) { return x.value < y.value; });
  double half = M_PI, acc = 0.0, median = 0.0;
  for (const auto& seg : segments) {
    acc += seg.length;
    if (acc >= half) {
      median = seg.value;
      break;
    }
  }
  double w1 = 0.0;
  for (const auto& seg : segments) w1 += seg.length * std::abs(seg.value - median);
  return w1;
}

inline double w1_circle(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.dim() != 2 || b.dim() != 2)
    throw std::invalid_argument("w1_circle: both measures must live on S^1 (d=2)");
  auto angles = [](const EmpiricalMeasure& m) {
    std::vector<double> out(m.size());
    for (int i = 0; i < m.size(); ++i) out[i] = std::atan2(m.points(1, i), m.points(0, i));
    return out;
  };
  return w1_circle_angles(angles(a), detail::resolved_weights(a), angles(b),
                          detail::resolved_weights(b));
}

/// 1-D W1 between weighted samples on the line (CDF walk over merged
/// breakpoints).
inline double w1_line(std::vector<std::pair<double, double>> a,
                      std::vector<std::pair<double, double>> b) {
  auto lt = [](const auto& x, const auto& y) { return x.first < y.first; };
  std::sort(a.begin(), a.end(), lt);
  std::sort(b.begin(), b.end(), lt);
  double w1 = 0.0, fa = 0.0, fb = 0.0, x = 0.0;
  std::size_t i = 0, j = 0;
  bool first = true;
  while (i < a.size() || j < b.size()) {
    const double nx = (j >= b.size() || (i < a.size() && a[i].first <= b[j].first)) ? a[i].first
                                                                                   : b[j].first;
    if (!first) w1 += std::abs(fa - fb) * (nx - x);
    first = false;
    x = nx;
    while (i < a.size() && a[i].first == x) fa += a[i++].second;
    while (j < b.size() && b[j].first == x) fb += b[j++].second;
  }
  return w1;
}

struct SlicedW1 {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// Sliced W1: average 1-D W1 of projections onto n_proj random directions.
inline SlicedW1 sliced_w1_sphere(const EmpiricalMeasure& a, const EmpiricalMeasure& b, int n_proj,
                                 Rng& rng) {
  if (a.dim() != b.dim()) throw std::invalid_argument("sliced_w1_sphere: dimension mismatch");
  if (n_proj < 1) throw std::invalid_argument("sliced_w1_sphere: n_proj must be >= 1");
  const auto wa = detail::resolved_weights(a), wb = detail::resolved_weights(b);
  double sum = 0.0, sumsq = 0.0;
  for (int p = 0; p < n_proj; ++p) {
    const Vec u = sample_uniform(rng, a.dim());
    std::vector<std::pair<double, double>> pa(a.size()), pb(b.size());
    for (int i = 0; i < a.size(); ++i) pa[i] = {u.dot(a.points.col(i)), wa[i]};
    for (int i = 0; i < b.size(); ++i) pb[i] = {u.dot(b.points.col(i)), wb[i]};
    const double v = w1_line(std::move(pa), std::move(pb));
    sum += v;
    sumsq += v * v;
  }
  SlicedW1 out;
  out.value = sum / n_proj;
  if (n_proj > 1)
    out.stderr_ = std::sqrt(std::max(0.0, (sumsq / n_proj - out.value * out.value) / (n_proj - 1)));
  return out;
}

struct EnergyResult {
  double value = 0.0;      // shifted energy (1/(2 beta N^2)) sum e^{beta(s_ij - shift)}
  double shift = 0.0;      // max_{i,j} <Q x_i, K x_j>
  double log_value = 0.0;  // log of the unshifted energy
  bool asymmetric_warning = false;
};

/// Interaction energy of the configuration (softmax potential with the max
/// score subtracted; shift reported so absolute values are reconstructible).
inline EnergyResult interaction_energy(const ParticleState& s, const ModelParams& p) {
  const int n = s.size();
  const Mat scores = (p.K * s.points).transpose() * (p.Q * s.points);
  EnergyResult out;
  const Mat b = p.Q.transpose() * p.K;
  out.asymmetric_warning = (b - b.transpose()).norm() > 1e-10 * std::max(b.norm(), 1.0);
  out.shift = scores.maxCoeff();
  const double acc = (p.beta * (scores.array() - out.shift)).exp().sum();
  out.value = acc / (2.0 * p.beta * n * n);
  out.log_value = p.beta * out.shift + std::log(out.value);
  return out;
}

struct Cluster {
  Vec centroid;
  double weight = 0.0;
  int member_count = 0;
};

using ClusterSet = std::vector<Cluster>;

/// Single-linkage grouping under geodesic distance threshold angular_tol.
/// Clusters are reported in order of their smallest member index.
inline ClusterSet cluster_detect(const ParticleState& s, double angular_tol = 0.05) {
  if (!(angular_tol > 0 && angular_tol < M_PI))
    throw std::invalid_argument("cluster_detect: angular_tol must lie in (0, pi)");
  const int n = s.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  const double cos_tol = std::cos(angular_tol);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (s.points.col(i).dot(s.points.col(j)) >= cos_tol) {
        const int ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
  std::vector<int> roots;
  std::vector<int> index_of(n, -1);
  ClusterSet out;
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (index_of[r] < 0) {
      index_of[r] = static_cast<int>(out.size());
      out.push_back({Vec::Zero(s.dim()), 0.0, 0});
    }
    auto& c = out[index_of[r]];
    c.centroid += s.points.col(i);
    c.weight += 1.0 / n;
    c.member_count += 1;
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double nn = out[k].centroid.norm();
    if (nn < 1e-10 * out[k].member_count) {
      std::ostringstream msg;
      msg << "cluster_detect: degenerate centroid (weighted mean ~ 0) in cluster " << k;
      throw NumericalError(msg.str());
    }
    out[k].centroid /= nn;
  }
  return out;
}

/// Wrapped-Gaussian kernel density estimate on a uniform circular grid.
inline std::vector<double> kde_circle(const std::vector<double>& angles, double bandwidth,
                                      int grid_size) {
  if (!(bandwidth > 0)) throw std::invalid_argument("kde_circle: bandwidth must be > 0");
  std::vector<double> density(grid_size, 0.0);
  const int wraps = std::max(1, static_cast<int>(std::ceil(3.0 * bandwidth / (2.0 * M_PI))));
  const double norm = 1.0 / (angles.size() * bandwidth * std::sqrt(2.0 * M_PI));
  for (int g = 0; g < grid_size; ++g) {
    const double theta = 2.0 * M_PI * g / grid_size;
    double acc = 0.0;
    for (const double a : angles) {
      double off = detail::wrap_angle(theta - a);
      if (off > M_PI) off -= 2.0 * M_PI;
      for (int k = -wraps; k <= wraps; ++k) {
        const double z = (off + 2.0 * M_PI * k) / bandwidth;
        acc += std::exp(-0.5 * z * z);
      }
    }
    density[g] = norm * acc;
  }
  return density;
}

/// Quadrature evaluation of the kernel field chi_beta[mu] at azimuth theta_x
/// for an absolutely continuous density on S^1 (periodic trapezoid rule with
/// refinement doubling).
inline Vec kernel_field_quadrature_circle(const std::function<double(double)>& density,
                                          const ModelParams& p, double theta_x,
                                          int n_quad = 1024) {
  if (p.Q.rows() != 2) throw std::invalid_argument("kernel_field_quadrature_circle: d must be 2");
  const Vec x = (Vec(2) << std::cos(theta_x), std::sin(theta_x)).finished();
  const Vec qx = p.Q * x;
  auto evaluate = [&](int n) {
    // factor out the max exponent over the grid
    std::vector<double> expo(n), dens(n);
    std::vector<Vec> ys(n);
    double emax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      const double phi = 2.0 * M_PI * k / n;
      ys[k] = (Vec(2) << std::cos(phi), std::sin(phi)).finished();
      expo[k] = p.beta * qx.dot(p.K * ys[k]);
      dens[k] = density(phi);
      emax = std::max(emax, expo[k]);
    }
    Vec num = Vec::Zero(2);
    double den = 0.0;
    for (int k = 0; k < n; ++k) {
      const double w = std::exp(expo[k] - emax) * dens[k];
      num += w * (p.V * ys[k]);
      den += w;
    }
    if (den <= 0.0)
      throw NumericalError("kernel_field_quadrature_circle: vanishing denominator");
    return Vec(num / den);
  };
  int n = std::max(64, n_quad);
  Vec prev = evaluate(n);
  for (int level = 0; level < 14; ++level) {
    n *= 2;
    Vec cur = evaluate(n);
    if ((cur - prev).norm() <= 1e-9 * std::max(1.0, cur.norm()))
      return project_tangent(x, cur);
    prev = cur;
  }
  throw NumericalError("kernel_field_quadrature_circle: quadrature did not converge");
}

}  // namespace attnflow
