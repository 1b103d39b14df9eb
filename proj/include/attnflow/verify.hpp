#pragma once

// Numerical verification suite: each check runs a desk-scale experiment and
// compares simulation output against an analytic oracle or a predicted
// convergence rate.

#include "attnflow/heat.hpp"
#include "attnflow/metrics.hpp"
#include "attnflow/scenarios.hpp"
#include "attnflow/spectral.hpp"
#include "attnflow/vmf.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace attnflow {

struct VerifyOptions {
  unsigned long long seed = 1;
  int threads = 1;
  bool desk_scale = false;  // shrink N / step counts further
};

struct CheckReport {
  std::string id;
  bool pass = false;
  std::string summary;
  std::vector<std::pair<std::string, double>> stats;  // fitted slopes, errors, ...
  std::vector<std::pair<std::string, std::vector<SeriesPoint>>> series;
  double runtime_seconds = 0.0;
};

inline const std::vector<std::string>& verification_check_ids() {
  static const std::vector<std::string> ids = {
      "vmf_asymptotics", "integral_asymptotics",   "tensor_symmetry", "heat_field_limit",
      "alignment_limit", "emax_collapse",          "heat_forward",    "heat_backward_clusters",
      "pairing_limit",   "dobrushin",
  };
  return ids;
}

namespace detail {

inline std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i)
    out[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
  return out;
}

inline std::vector<double> state_angles(const Mat& points) {
  std::vector<double> a(points.cols());
  for (int i = 0; i < points.cols(); ++i) a[i] = std::atan2(points(1, i), points(0, i));
  return a;
}

// Discretizes a circle mixture into weighted atoms on a uniform grid.
inline std::pair<std::vector<double>, std::vector<double>> atomize_mixture_circle(
    const HeatMixture& m, int grid) {
  std::vector<double> angles(grid), w(grid);
  double tot = 0.0;
  for (int k = 0; k < grid; ++k) {
    angles[k] = 2.0 * M_PI * k / grid;
    w[k] = mixture_density_circle(m, angles[k]);
    tot += w[k];
  }
  for (auto& x : w) x /= tot;
  return {angles, w};
}

inline double w1_particles_vs_mixture(const Mat& points, const HeatMixture& m, int grid = 4096) {
  const auto [ga, gw] = atomize_mixture_circle(m, grid);
  const auto pa = state_angles(points);
  const std::vector<double> pw(pa.size(), 1.0 / pa.size());
  return w1_circle_angles(pa, pw, ga, gw);
}

inline void put_series(CheckReport& r, const std::string& name, const std::vector<double>& xs,
                       const std::vector<double>& ys) {
  std::vector<SeriesPoint> pts;
  for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back({xs[i], ys[i]});
  r.series.push_back({name, std::move(pts)});
}

// --- individual checks -----------------------------------------------------

inline void check_vmf_asymptotics(CheckReport& r, const VerifyOptions&) {
  std::ostringstream sum;
  bool pass = true;

  // closed form for d=3 over beta in [0.1, 500]
  double worst = 0.0;
  for (double b : logspace(0.1, 500.0, 60)) {
    const double closed = 1.0 / std::tanh(b) - 1.0 / b;
    worst = std::max(worst, std::abs(vmf_mean_resultant(b, 3) - closed));
  }
  r.stats.push_back({"d3_closed_form_max_err", worst});
  if (worst > 1e-10) pass = false;
  sum << "d=3 closed-form max err " << worst << (worst <= 1e-10 ? " (ok)" : " (FAIL)") << "; ";

  const auto betas = logspace(1e2, 1e4, 12);
  for (int d : {2, 3, 5}) {
    std::vector<double> diff, aprime;
    bool fit_ok = true;
    for (double b : betas) {
      const double y = std::abs(vmf_mean_resultant(b, d) - (1.0 - (d - 1) / (2.0 * b)));
      if (!(y > 0)) fit_ok = false;
      diff.push_back(y);
      aprime.push_back(std::abs(vmf_A_prime(b, d)));
    }
    put_series(r, "abs_diff_d" + std::to_string(d), betas, diff);
    double slope = 0.0;
    if (fit_ok) {
      try {
        slope = fit_rate(betas, diff).slope;
      } catch (const std::exception&) {
        fit_ok = false;
      }
    }
    const bool ok = fit_ok && std::abs(slope + 2.0) <= 0.2;
    r.stats.push_back({"slope_A_minus_asym_d" + std::to_string(d), slope});
    if (!ok) pass = false;
    sum << "d=" << d << " A-diff slope " << (fit_ok ? std::to_string(slope) : "unfittable")
        << (ok ? " (ok)" : " (FAIL)") << "; ";

    const double slope_ap = fit_rate(betas, aprime).slope;
    r.stats.push_back({"slope_Aprime_d" + std::to_string(d), slope_ap});
    const bool ok_ap = std::abs(slope_ap + 2.0) <= 0.2;
    if (!ok_ap) pass = false;
    sum << "d=" << d << " A' slope " << slope_ap << (ok_ap ? " (ok)" : " (FAIL)") << "; ";
  }
  r.pass = pass;
  r.summary = sum.str();
}

inline void check_integral_asymptotics(CheckReport& r, const VerifyOptions&) {
  std::ostringstream sum;
  bool pass = true;
  const int d = 3;
  const auto betas = logspace(50.0, 800.0, 9);
  for (int k = 0; k <= 3; ++k) {
    std::vector<double> lx, ly;
    for (double b : betas) {
      lx.push_back(std::log(b));
      ly.push_back(surface_integral_log(k, b, d) - b);  // log(I e^{-beta})
    }
    const double slope = fit_line(lx, ly).slope;
    const double target = -0.5 * (d - 1 + k);
    r.stats.push_back({"slope_k" + std::to_string(k), slope});
    put_series(r, "log_integral_k" + std::to_string(k), betas, ly);
    const bool ok = std::abs(slope - target) <= 0.05;
    if (!ok) pass = false;
    sum << "k=" << k << " slope " << slope << " (target " << target << (ok ? ", ok" : ", FAIL")
        << "); ";
  }
  r.pass = pass;
  r.summary = sum.str();
}

inline void check_tensor_symmetry(CheckReport& r, const VerifyOptions& opt) {
  const int d = 4;
  const double kappa = 20.0;
  const int n = opt.desk_scale ? 200000 : 1000000;
  Rng rng(opt.seed * 7919 + 3);
  VmfParams p;
  p.mean_dir = Vec::Unit(d, 0);
  p.kappa = kappa;
  Mat y(d, n);
  for (int i = 0; i < n; ++i) y.col(i) = sample_vmf(rng, p);
  const Vec mean = y.rowwise().mean();

  std::ostringstream sum;
  bool pass = true;
  double worst_ratio = 0.0;
  int checked = 0;
  // Rotational symmetry about e1 forces every central-moment entry in which
  // some tangent index (>= 1) appears an odd number of times to vanish.
  auto forbidden = [&](const std::vector<int>& idx) {
    int cnt[4] = {0, 0, 0, 0};
    for (int i : idx) cnt[i]++;
    for (int a = 1; a < d; ++a)
      if (cnt[a] % 2 == 1) return true;
    // distinct tangent pairs, e.g. (2,2) vs (3,3), are allowed individually
    return false;
  };
  auto test_entry = [&](const std::vector<int>& idx) {
    if (!forbidden(idx)) return;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double prod = 1.0;
      for (int a : idx) prod *= y(a, i) - mean[a];
      s1 += prod;
      s2 += prod * prod;
    }
    const double m1 = s1 / n;
    const double se = std::sqrt(std::max(0.0, (s2 / n - m1 * m1) / n));
    const double ratio = se > 0 ? std::abs(m1) / se : (m1 == 0.0 ? 0.0 : 1e18);
    worst_ratio = std::max(worst_ratio, ratio);
    ++checked;
    if (ratio > 5.0) pass = false;
  };
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) test_entry({i, j});
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int k = j; k < d; ++k) test_entry({i, j, k});
  r.stats.push_back({"n_forbidden_entries", static_cast<double>(checked)});
  r.stats.push_back({"worst_abs_over_se", worst_ratio});
  sum << checked << " symmetry-forbidden entries, worst |mean|/SE = " << worst_ratio
      << (pass ? " <= 5 (ok)" : " > 5 (FAIL)");
  r.pass = pass;
  r.summary = sum.str();
}

inline void check_heat_field_limit(CheckReport& r, const VerifyOptions& opt) {
  const HeatMixture m = detail::three_component_mixture();
  auto density = [&](double phi) { return mixture_density_circle(m, phi); };
  // evaluation grid: offsets around each component center
  std::vector<double> thetas;
  for (const auto& c : m.components) {
    const double mu = std::atan2(c.center[1], c.center[0]);
    for (double off : {-0.6, -0.4, -0.2, 0.05, 0.2, 0.4, 0.6}) thetas.push_back(mu + off);
  }
  const auto betas = logspace(1e2, 1e4, opt.desk_scale ? 5 : 7);
  std::vector<double> errs;
  for (double b : betas) {
    ModelParams p = ModelParams::identity(2, b);
    double err = 0.0;
    for (double th : thetas) {
      const Vec f = kernel_field_quadrature_circle(density, p, th);
      const Vec u = (Vec(2) << -std::sin(th), std::cos(th)).finished();
      const double val = b * f.dot(u);
      const double target = mixture_density_circle_deriv(m, th) / mixture_density_circle(m, th);
      err = std::max(err, std::abs(val - target));
    }
    errs.push_back(err);
  }
  const double slope = fit_rate(betas, errs).slope;
  put_series(r, "sup_error", betas, errs);
  r.stats.push_back({"slope", slope});
  r.pass = slope <= -0.45;
  std::ostringstream sum;
  sum << "sup-norm error slope " << slope << (r.pass ? " <= -0.45 (ok)" : " > -0.45 (FAIL)");
  r.summary = sum.str();
}

inline void check_alignment_limit(CheckReport& r, const VerifyOptions& opt) {
  const int N = opt.desk_scale ? 500 : 2000;
  const double h = 1e-3, T = 2.0;
  const int steps = static_cast<int>(std::llround(T / h));
  const int stride = steps / 4;  // snapshots at t = 0.5, 1.0, 1.5, 2.0
  Scenario sc = scenario_defaults("1a");
  Rng rng(opt.seed * 104729 + 11);
  sc.N = N;
  ParticleState s0 = init_state(sc, rng);

  Trajectory limit = integrate_alignment(s0, sc.params, h, T, Scheme::ProjectedRk4, {}, stride);
  auto snapshot_at = [&](const Trajectory& tr, int step) -> const Snapshot& {
    for (const auto& s : tr.snapshots)
      if (s.step == step) return s;
    throw std::logic_error("check_alignment_limit: missing snapshot");
  };

  const std::vector<double> beta_list = {10.0, 20.0, 40.0};
  const std::vector<int> check_steps = {stride, 2 * stride, 4 * stride};  // t = 0.5, 1, 2
  std::vector<std::vector<double>> w1(check_steps.size());
  for (double beta : beta_list) {
    ModelParams p = sc.params;
    p.beta = beta;
    IntegratorConfig cfg;
    cfg.scheme = Scheme::ProjectedEuler;
    cfg.h = h;
    cfg.max_steps = steps;
    cfg.snapshot_stride = stride;
    cfg.threads = opt.threads;
    Trajectory fin = integrate(s0, p, cfg);
    for (std::size_t t = 0; t < check_steps.size(); ++t) {
      EmpiricalMeasure a{snapshot_at(fin, check_steps[t]).points, {}};
      EmpiricalMeasure b{snapshot_at(limit, check_steps[t]).points, {}};
      Rng prng(opt.seed * 31 + 1000 + static_cast<unsigned long long>(t));
      w1[t].push_back(sliced_w1_sphere(a, b, 128, prng).value);
    }
  }
  bool pass = true;
  std::ostringstream sum;
  for (std::size_t t = 0; t < check_steps.size(); ++t) {
    put_series(r, "w1_t" + std::to_string(t), beta_list, w1[t]);
    sum << "t=" << check_steps[t] * h << ": ";
    for (std::size_t b = 0; b < beta_list.size(); ++b) {
      sum << "W1(beta=" << beta_list[b] << ")=" << w1[t][b] << (b + 1 < beta_list.size() ? ", " : "");
      if (b > 0 && !(w1[t][b] < w1[t][b - 1])) pass = false;
    }
    sum << "; ";
  }
  r.pass = pass;
  r.summary = sum.str() + (pass ? "strictly decreasing in beta (ok)" : "NOT decreasing (FAIL)");
}

inline void check_emax_collapse(CheckReport& r, const VerifyOptions& opt) {
  const int N = opt.desk_scale ? 500 : 2000;
  Scenario sc = scenario_defaults("1a");  // V = diag(2,1,1), E_max = span(e1)
  Rng rng(opt.seed * 104729 + 11);
  sc.N = N;
  ParticleState s0 = init_state(sc, rng);
  Subspace emax = dominant_invariant_subspace(sc.params.V * sc.params.K.transpose() * sc.params.Q);

  auto mean_dist = [&](const Mat& pts) {
    double acc = 0.0;
    for (int i = 0; i < pts.cols(); ++i) acc += subspace_distance(pts.col(i), emax);
    return acc / pts.cols();
  };

  Trajectory limit = integrate_alignment(s0, sc.params, 1e-2, 10.0, Scheme::ProjectedRk4, {}, 1000,
                                         true);
  const double d_limit = mean_dist(limit.snapshots.back().points);

  ModelParams p = sc.params;  // beta = 30
  IntegratorConfig cfg;
  cfg.scheme = Scheme::ProjectedEuler;
  cfg.h = 1e-2;
  cfg.max_steps = 1000;
  cfg.snapshot_stride = 1000;
  cfg.threads = opt.threads;
  Trajectory fin = integrate(s0, p, cfg);
  const double d_finite = mean_dist(fin.snapshots.back().points);

  r.stats.push_back({"mean_dist_limit", d_limit});
  r.stats.push_back({"mean_dist_finite", d_finite});
  r.pass = d_limit < 0.05 && d_finite < 0.1;
  std::ostringstream sum;
  sum << "limit-flow mean distance " << d_limit << " (tol 0.05), finite-beta " << d_finite
      << " (tol 0.1)" << (r.pass ? " (ok)" : " (FAIL)");
  r.summary = sum.str();
}

inline void check_heat_forward(CheckReport& r, const VerifyOptions& opt) {
  const int N = opt.desk_scale ? 2000 : 5000;
  Scenario sc = scenario_defaults("2b");
  sc.N = N;
  const std::vector<int> checkpoints = {50, 100, 200};  // rescaled times 0.05, 0.1, 0.2
  const double h = sc.cfg.h;

  auto run = [&](double beta) {
    Scenario s = sc;
    s.params.beta = beta;
    Rng rng(opt.seed * 4241 + 17);  // same init draw for both betas
    ParticleState st = init_state(s, rng);
    IntegratorConfig cfg = s.cfg;
    cfg.max_steps = checkpoints.back();
    cfg.snapshot_stride = checkpoints.front();
    cfg.threads = opt.threads;
    return integrate(st, s.params, cfg);
  };
  Trajectory t50 = run(50.0), t10 = run(10.0);
  auto snapshot_at = [&](const Trajectory& tr, int step) -> const Snapshot& {
    for (const auto& s : tr.snapshots)
      if (s.step == step) return s;
    throw std::logic_error("check_heat_forward: missing snapshot");
  };

  bool pass = true;
  std::ostringstream sum;
  std::vector<double> xs, y50, y10, ytol;
  Rng orng(opt.seed * 65537 + 5);
  for (int cp : checkpoints) {
    const double s_time = cp * h;
    const HeatMixture evolved = mixture_evolve(sc.mixture, s_time, -1);
    const double w50 = w1_particles_vs_mixture(snapshot_at(t50, cp).points, evolved);
    const double w10 = w1_particles_vs_mixture(snapshot_at(t10, cp).points, evolved);
    // sampling-error oracle: mean W1 of fresh N-draws from the evolved mixture
    double samp = 0.0;
    const int reps = 5;
    for (int rep = 0; rep < reps; ++rep) {
      const auto angles = sample_heat_mixture_circle(evolved, N, orng);
      Mat pts(2, N);
      for (int i = 0; i < N; ++i)
        pts.col(i) = (Vec(2) << std::cos(angles[i]), std::sin(angles[i])).finished();
      samp += w1_particles_vs_mixture(pts, evolved);
    }
    samp /= reps;
    const double tol = 3.0 * samp;
    xs.push_back(s_time);
    y50.push_back(w50);
    y10.push_back(w10);
    ytol.push_back(tol);
    const bool ok = w50 < w10 && w50 < tol;
    if (!ok) pass = false;
    sum << "s=" << s_time << ": W1(beta=50)=" << w50 << ", W1(beta=10)=" << w10 << ", tol=" << tol
        << (ok ? " (ok); " : " (FAIL); ");
  }
  put_series(r, "w1_beta50", xs, y50);
  put_series(r, "w1_beta10", xs, y10);
  put_series(r, "tolerance", xs, ytol);
  r.pass = pass;
  r.summary = sum.str();
}

inline void check_heat_backward_clusters(CheckReport& r, const VerifyOptions& opt) {
  Scenario sc = scenario_defaults("2a");
  sc.N = opt.desk_scale ? 2000 : 5000;
  Rng rng(opt.seed * 911 + 29);
  ParticleState st = init_state(sc, rng);
  IntegratorConfig cfg = sc.cfg;
  cfg.snapshot_stride = cfg.max_steps;
  cfg.threads = opt.threads;
  Trajectory tr = integrate(st, sc.params, cfg);
  const ClusterSet clusters = cluster_detect({tr.snapshots.back().points, 0.0, 0.0}, 0.05);

  const double target_means[3] = {M_PI / 2.0, 0.0, 4.0 * M_PI / 3.0};
  const double target_weights[3] = {0.2, 0.5, 0.3};
  bool pass = clusters.size() == 3;
  std::ostringstream sum;
  sum << clusters.size() << " clusters";
  if (pass) {
    for (int j = 0; j < 3; ++j) {
      double best_ang = 1e18;
      double best_w = 0.0;
      for (const auto& c : clusters) {
        double az = std::atan2(c.centroid[1], c.centroid[0]);
        double diff = std::abs(az - target_means[j]);
        diff = std::min(diff, 2.0 * M_PI - diff);
        if (diff < best_ang) {
          best_ang = diff;
          best_w = c.weight;
        }
      }
      const bool ok = best_ang <= 0.05 && std::abs(best_w - target_weights[j]) <= 0.05;
      if (!ok) pass = false;
      sum << "; target " << target_means[j] << ": azimuth err " << best_ang << ", weight "
          << best_w << " (want " << target_weights[j] << ")" << (ok ? " ok" : " FAIL");
    }
  } else {
    sum << " (want exactly 3) FAIL";
  }
  r.stats.push_back({"cluster_count", static_cast<double>(clusters.size())});
  r.pass = pass;
  r.summary = sum.str();
}

inline void check_pairing_limit(CheckReport& r, const VerifyOptions& opt) {
  // four diracs on S^2 with a unique closest pair (inner 0.54); all other
  // pairs have inner <= 0
  ParticleState s0;
  s0.points = Mat(3, 4);
  s0.points.col(0) = (Vec(3) << 1.0, 0.0, 0.0).finished();
  s0.points.col(1) = (Vec(3) << std::cos(1.0), std::sin(1.0), 0.0).finished();
  s0.points.col(2) = (Vec(3) << 0.0, -1.0, 0.0).finished();
  s0.points.col(3) = (Vec(3) << 0.0, 0.0, 1.0).finished();
  const double h = 1e-3, eps = 0.1;
  const ModelParams base = ModelParams::identity(3, 1.0);

  Trajectory limit = integrate_pairing_limit(s0, h, eps, 5000, Scheme::ProjectedEuler, 1);

  const std::vector<double> betas = {20.0, 40.0, 80.0};
  std::vector<double> devs, frozen_disp;
  for (double beta : betas) {
    ModelParams p = base;
    p.beta = beta;
    IntegratorConfig cfg;
    cfg.scheme = Scheme::ProjectedEuler;
    cfg.h = h;
    cfg.clock = Clock::Pairing;
    cfg.max_steps = 5000;
    cfg.snapshot_stride = 1;
    cfg.pairing_stop_inner = 1.0 - eps;
    Trajectory fin = integrate(s0, p, cfg);
    const std::size_t n = std::min(limit.snapshots.size(), fin.snapshots.size());
    double dev = 0.0, disp = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      for (int i = 0; i < 4; ++i)
        dev = std::max(dev,
                       (limit.snapshots[k].points.col(i) - fin.snapshots[k].points.col(i)).norm());
      for (int i : {2, 3})
        disp = std::max(disp, (fin.snapshots[k].points.col(i) - s0.points.col(i)).norm());
    }
    devs.push_back(dev);
    // displacements below machine epsilon are indistinguishable from zero
    frozen_disp.push_back(std::max(disp, 2.3e-16));
  }
  put_series(r, "sup_deviation", betas, devs);
  put_series(r, "frozen_displacement", betas, frozen_disp);
  bool pass = true;
  for (std::size_t b = 1; b < betas.size(); ++b)
    if (!(devs[b] < devs[b - 1])) pass = false;
  std::vector<double> ld(frozen_disp.size());
  for (std::size_t i = 0; i < ld.size(); ++i) ld[i] = std::log(frozen_disp[i]);
  const double slope = fit_line(betas, ld).slope;
  if (!(slope < 0)) pass = false;
  r.stats.push_back({"frozen_disp_log_slope", slope});
  std::ostringstream sum;
  sum << "sup deviation: ";
  for (std::size_t b = 0; b < betas.size(); ++b)
    sum << "beta=" << betas[b] << ": " << devs[b] << (b + 1 < betas.size() ? ", " : "; ");
  sum << "frozen-particle log-displacement slope " << slope
      << (pass ? " (ok)" : " (FAIL)");
  r.pass = pass;
  r.summary = sum.str();
}

inline void check_dobrushin(CheckReport& r, const VerifyOptions& opt) {
  const std::vector<int> sizes = {250, 500, 1000, 2000};
  const int ref_n = opt.desk_scale ? 2000 : 4000;
  const int n_seeds = 5;
  Scenario sc = scenario_defaults("1a");
  sc.params.beta = 5.0;
  IntegratorConfig cfg;
  cfg.scheme = Scheme::ProjectedEuler;
  cfg.h = 1e-2;
  cfg.max_steps = 100;  // T = 1
  cfg.snapshot_stride = 100;
  cfg.threads = opt.threads;

  std::vector<double> avg(sizes.size(), 0.0);
  for (int seed = 0; seed < n_seeds; ++seed) {
    Rng rng(opt.seed * 131071 + 1000 * (seed + 1));
    auto run = [&](int n) {
      Scenario s = sc;
      s.N = n;
      ParticleState st = init_state(s, rng);
      Trajectory tr = integrate(st, sc.params, cfg);
      return tr.snapshots.back().points;
    };
    const Mat ref = run(ref_n);
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      const Mat fin = run(sizes[k]);
      Rng prng(opt.seed * 777 + 13 * (seed + 1));
      avg[k] += sliced_w1_sphere({fin, {}}, {ref, {}}, 128, prng).value / n_seeds;
    }
  }
  std::vector<double> xs(sizes.begin(), sizes.end());
  put_series(r, "sliced_w1_vs_ref", xs, avg);
  bool pass = true;
  std::ostringstream sum;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    sum << "N=" << sizes[k] << ": " << avg[k] << (k + 1 < sizes.size() ? ", " : "");
    if (k > 0 && !(avg[k] < avg[k - 1])) pass = false;
  }
  r.pass = pass;
  r.summary = sum.str() + (pass ? " decreasing in N (ok)" : " NOT decreasing (FAIL)");
}

}  // namespace detail

inline CheckReport run_verification(const std::string& check_id, const VerifyOptions& opt = {}) {
  CheckReport r;
  r.id = check_id;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (check_id == "vmf_asymptotics") {
      detail::check_vmf_asymptotics(r, opt);
    } else if (check_id == "integral_asymptotics") {
      detail::check_integral_asymptotics(r, opt);
    } else if (check_id == "tensor_symmetry") {
      detail::check_tensor_symmetry(r, opt);
    } else if (check_id == "heat_field_limit") {
      detail::check_heat_field_limit(r, opt);
    } else if (check_id == "alignment_limit") {
      detail::check_alignment_limit(r, opt);
    } else if (check_id == "emax_collapse") {
      detail::check_emax_collapse(r, opt);
    } else if (check_id == "heat_forward") {
      detail::check_heat_forward(r, opt);
    } else if (check_id == "heat_backward_clusters") {
      detail::check_heat_backward_clusters(r, opt);
    } else if (check_id == "pairing_limit") {
      detail::check_pairing_limit(r, opt);
    } else if (check_id == "dobrushin") {
      detail::check_dobrushin(r, opt);
    } else {
      throw std::invalid_argument("run_verification: unknown check '" + check_id + "'");
    }
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    r.pass = false;
    r.summary = std::string("check '") + check_id + "' raised: " + e.what();
  }
  r.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace attnflow
