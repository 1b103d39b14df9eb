#include "attnflow/dynamics.hpp"

#include "catch_amalgamated.hpp"

#include <algorithm>
#include <numeric>

using namespace attnflow;

namespace {

ModelParams small_params() {
  ModelParams p = ModelParams::identity(2, 2.5);
  p.Q << 1.0, 0.3, -0.2, 1.0;
  p.K << 0.9, 0.0, 0.1, 1.1;
  p.V << 1.5, 0.2, 0.0, 0.7;
  return p;
}

ParticleState angles_state(const std::vector<double>& angles) {
  ParticleState s;
  s.points = Mat(2, static_cast<int>(angles.size()));
  for (std::size_t i = 0; i < angles.size(); ++i)
    s.points.col(i) = (Vec(2) << std::cos(angles[i]), std::sin(angles[i])).finished();
  return s;
}

}  // namespace

TEST_CASE("attention field matches a high-precision reference", "[dynamics]") {
  // N = 3 on the circle; reference computed with 50-digit arithmetic
  const ParticleState s = angles_state({0.3, 2.0, 4.1});
  const Mat f = attention_field(s, small_params());
  const double ref[3][2] = {{0.059400497411250605162, -0.19202565973503901138},
                            {0.074090017126517418525, 0.033907856040633648707},
                            {-0.41519505884065063569, 0.29166655045922360051}};
  for (int i = 0; i < 3; ++i) {
    REQUIRE(std::abs(f(0, i) - ref[i][0]) < 1e-14);
    REQUIRE(std::abs(f(1, i) - ref[i][1]) < 1e-14);
  }
  // projected-sum variant computes the same field
  const Mat g = attention_field_projected_sum(s, small_params());
  REQUIRE((f - g).norm() < 1e-14);
}

TEST_CASE("field is tangential and vanishes on antipodal identity pairs", "[dynamics]") {
  const ParticleState s = angles_state({0.7, 0.7 + M_PI});
  const ModelParams p = ModelParams::identity(2, 4.0);
  const Mat f = attention_field(s, p);
  // V = Id: contribution of each point is radial after symmetric weighting;
  // the antipodal pair's tangential parts cancel exactly
  REQUIRE(f.norm() < 1e-15);
  const Mat f2 = attention_field(angles_state({0.1, 1.9, 5.0}), small_params());
  const ParticleState s2 = angles_state({0.1, 1.9, 5.0});
  for (int i = 0; i < 3; ++i) REQUIRE(std::abs(s2.points.col(i).dot(f2.col(i))) < 1e-15);
}

TEST_CASE("softmax weights survive scores up to beta<.,.> = 600", "[dynamics]") {
  ModelParams p = ModelParams::identity(2, 600.0);
  const ParticleState s = angles_state({0.0, 0.01, 3.0});
  const Mat f = attention_field(s, p);
  REQUIRE(f.allFinite());
  const Mat g = attention_field_projected_sum(s, p);
  REQUIRE(g.allFinite());
}

TEST_CASE("threaded and canonical reductions agree with the serial field", "[dynamics]") {
  Rng rng(3);
  ParticleState s;
  const int n = 257;  // deliberately not a multiple of the block size
  s.points = Mat(3, n);
  for (int i = 0; i < n; ++i) s.points.col(i) = sample_uniform(rng, 3);
  ModelParams p = ModelParams::identity(3, 9.0);
  p.V(0, 0) = 2.0;
  const Mat serial = attention_field(s, p, 1);
  const Mat threaded = attention_field(s, p, 4);
  REQUIRE((serial - threaded).norm() == 0.0);  // fixed-chunk schedule is deterministic
  const Mat canon = attention_field(s, p, 1, /*canonical=*/true);
  REQUIRE((serial - canon).norm() < 1e-13);
}

TEST_CASE("canonical reduction is bitwise permutation-equivariant", "[dynamics]") {
  Rng rng(8);
  const int n = 40;
  ParticleState s;
  s.points = Mat(3, n);
  for (int i = 0; i < n; ++i) s.points.col(i) = sample_uniform(rng, 3);
  ModelParams p = ModelParams::identity(3, 12.0);
  p.Q(0, 1) = 0.2;
  const Mat f = attention_field(s, p, 1, true);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 shuf(5);
  std::shuffle(perm.begin(), perm.end(), shuf);
  ParticleState sp;
  sp.points = Mat(3, n);
  for (int i = 0; i < n; ++i) sp.points.col(i) = s.points.col(perm[i]);
  const Mat fp = attention_field(sp, p, 1, true);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < 3; ++r) REQUIRE(fp(r, i) == f(r, perm[i]));  // bitwise
}

TEST_CASE("projected Euler error is first order (Richardson)", "[dynamics]") {
  const ParticleState s0 = angles_state({0.3, 2.0, 4.1});
  const ModelParams p = small_params();
  auto endpoint = [&](Scheme scheme, double h) {
    IntegratorConfig cfg;
    cfg.scheme = scheme;
    cfg.h = h;
    cfg.max_steps = static_cast<int>(std::llround(1.0 / h));
    cfg.snapshot_stride = cfg.max_steps;
    Trajectory t = integrate(s0, p, cfg);
    return t.snapshots.back().points;
  };
  const Mat fine = endpoint(Scheme::ProjectedRk4, 1e-4);  // reference solution
  const double e1 = (endpoint(Scheme::ProjectedEuler, 2e-2) - fine).norm();
  const double e2 = (endpoint(Scheme::ProjectedEuler, 1e-2) - fine).norm();
  REQUIRE(e1 / e2 > 1.7);
  REQUIRE(e1 / e2 < 2.3);
}

TEST_CASE("projected RK4 error is fourth order (Richardson)", "[dynamics]") {
  const ParticleState s0 = angles_state({0.3, 2.0, 4.1});
  const ModelParams p = small_params();
  auto endpoint = [&](double h) {
    IntegratorConfig cfg;
    cfg.scheme = Scheme::ProjectedRk4;
    cfg.h = h;
    cfg.max_steps = static_cast<int>(std::llround(1.0 / h));
    cfg.snapshot_stride = cfg.max_steps;
    return integrate(s0, p, cfg).snapshots.back().points;
  };
  const Mat fine = endpoint(1e-4);
  const double e1 = (endpoint(4e-2) - fine).norm();
  const double e2 = (endpoint(2e-2) - fine).norm();
  REQUIRE(e1 / e2 > 11.0);
  REQUIRE(e1 / e2 < 21.0);
}

TEST_CASE("discrete layer step matches a hand evaluation", "[dynamics]") {
  // N = 2, V = Id, beta = 1: x_i <- normalize(x_i + sum_j w_ij x_j)
  const ParticleState s = angles_state({0.0, M_PI / 2});
  const ModelParams p = ModelParams::identity(2, 1.0);
  const ParticleState out = discrete_layer_step(s, p);
  const double w_self = std::exp(1.0) / (std::exp(1.0) + 1.0);
  const double w_cross = 1.0 - w_self;
  Vec expect0 = (Vec(2) << 1.0 + w_self, w_cross).finished();
  expect0.normalize();
  Vec expect1 = (Vec(2) << w_cross, 1.0 + w_self).finished();
  expect1.normalize();
  REQUIRE((out.points.col(0) - expect0).norm() < 1e-14);
  REQUIRE((out.points.col(1) - expect1).norm() < 1e-14);
}

TEST_CASE("integrator keeps unit norms and advances clocks", "[dynamics]") {
  Rng rng(21);
  ParticleState s;
  s.points = Mat(3, 50);
  for (int i = 0; i < 50; ++i) s.points.col(i) = sample_uniform(rng, 3);
  ModelParams p = ModelParams::identity(3, 10.0);
  IntegratorConfig cfg;
  cfg.h = 1e-2;
  cfg.max_steps = 100;
  cfg.snapshot_stride = 25;
  Trajectory t = integrate(s, p, cfg);
  REQUIRE(t.snapshots.size() == 5);  // initial + 4 strides
  for (const auto& snap : t.snapshots)
    for (int i = 0; i < 50; ++i)
      REQUIRE(std::abs(snap.points.col(i).norm() - 1.0) < 1e-12);
  REQUIRE(std::abs(t.snapshots.back().time - 1.0) < 1e-12);

  // heat clock: physical dt = beta * h per rescaled step
  cfg.clock = Clock::Heat;
  cfg.max_steps = 10;
  cfg.snapshot_stride = 10;
  Trajectory th = integrate(s, p, cfg);
  REQUIRE(std::abs(th.snapshots.back().rescaled_time - 0.1) < 1e-12);
  REQUIRE(std::abs(th.snapshots.back().time - 10.0 * 1e-2 * p.beta) < 1e-12);
}

TEST_CASE("alignment field and limit integration", "[dynamics]") {
  ModelParams p = ModelParams::identity(3, 30.0);
  p.V = Eigen::Vector3d(2.0, 1.0, 1.0).asDiagonal();
  const Vec x = (Vec(3) << std::sqrt(0.5), std::sqrt(0.5), 0.0).finished();
  const Vec f = alignment_field(x, p);
  // V K^T Q x / |K^T Q x| = V x here; check tangency and the known direction
  REQUIRE(std::abs(x.dot(f)) < 1e-14);
  REQUIRE((f - project_tangent(x, p.V * x)).norm() < 1e-14);
  // the limit flow pushes mass toward the top eigdirections (e1)
  ParticleState s0;
  s0.points = Mat(3, 20);
  Rng rng(14);
  for (int i = 0; i < 20; ++i) {
    s0.points.col(i) = sample_uniform(rng, 3);
    if (s0.points(0, i) < 0) s0.points.col(i) *= -1.0;  // start in the e1 hemisphere
  }
  Trajectory t = integrate_alignment(s0, p, 1e-2, 8.0);
  for (int i = 0; i < 20; ++i) REQUIRE(t.snapshots.back().points(0, i) > 0.99);
}

TEST_CASE("closest pair and pairing limit field", "[dynamics]") {
  ParticleState s;
  s.points = Mat(3, 4);
  s.points.col(0) = (Vec(3) << 1, 0, 0).finished();
  s.points.col(1) = (Vec(3) << std::cos(1.0), std::sin(1.0), 0).finished();
  s.points.col(2) = (Vec(3) << 0, -1, 0).finished();
  s.points.col(3) = (Vec(3) << 0, 0, 1).finished();
  const ClosestPair pair = closest_pair(s);
  REQUIRE(((pair.i == 0 && pair.j == 1) || (pair.i == 1 && pair.j == 0)));
  REQUIRE(std::abs(pair.inner - std::cos(1.0)) < 1e-14);
  const Mat f = pairing_limit_field(s, pair);
  // only the pair moves, along the connecting geodesic, symmetrically
  REQUIRE(f.col(2).norm() < 1e-15);
  REQUIRE(f.col(3).norm() < 1e-15);
  REQUIRE(f.col(0).norm() > 0.1);
  REQUIRE(std::abs(f.col(0).norm() - f.col(1).norm()) < 1e-14);
  // halting: the pairing limit integrator stops once the pair inner > 1 - eps
  Trajectory t = integrate_pairing_limit(s, 1e-3, 0.1, 200000);
  const ClosestPair done = closest_pair(ParticleState{t.snapshots.back().points, 0, 0});
  REQUIRE(done.inner > 0.9);
}
