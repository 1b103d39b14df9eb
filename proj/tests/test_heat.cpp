#include "attnflow/heat.hpp"

#include "catch_amalgamated.hpp"

using namespace attnflow;

namespace {

double trapezoid_circle(const std::function<double(double)>& f, int n) {
  double acc = 0.0;
  for (int k = 0; k < n; ++k) acc += f(2.0 * M_PI * k / n);
  return acc * 2.0 * M_PI / n;
}

}  // namespace

TEST_CASE("circle kernel matches reference values", "[heat]") {
  // 50-digit image sums of the wrapped Gaussian with variance 2t
  REQUIRE(std::abs(heat_kernel_circle(0.7, 0.3) - 0.34237143820640804694) < 1e-14);
  REQUIRE(std::abs(heat_kernel_circle(2.0, 1.1) - 0.11252251916248462278) < 1e-14);
}

TEST_CASE("circle kernel is normalized and even", "[heat]") {
  for (double t : {0.01, 0.2, 0.5, 3.0}) {
    const double mass = trapezoid_circle([t](double th) { return heat_kernel_circle(th, t); }, 512);
    REQUIRE(std::abs(mass - 1.0) < 1e-12);
    REQUIRE(std::abs(heat_kernel_circle(1.3, t) - heat_kernel_circle(-1.3, t)) < 1e-15);
  }
}

TEST_CASE("circle kernel representations agree at the crossover", "[heat]") {
  // evaluate both branches just around the switch point
  const double t = kCircleKernelCrossover;
  for (double th : {0.0, 0.4, 1.5, 3.0}) {
    const double below = heat_kernel_circle(th, t - 1e-12);
    const double above = heat_kernel_circle(th, t + 1e-12);
    REQUIRE(std::abs(below - above) < 1e-12);
    const double dbelow = heat_kernel_circle_deriv(th, t - 1e-12);
    const double dabove = heat_kernel_circle_deriv(th, t + 1e-12);
    REQUIRE(std::abs(dbelow - dabove) < 1e-12);
  }
}

TEST_CASE("circle kernel satisfies the heat equation", "[heat]") {
  // convention: p_t = p_theta_theta (angular variance 2t)
  for (double t : {0.1, 0.8}) {
    for (double th : {0.3, 1.1, 2.5}) {
      const double e = 1e-4;
      const double pt = (heat_kernel_circle(th, t + e) - heat_kernel_circle(th, t - e)) / (2 * e);
      const double pxx = (heat_kernel_circle(th + e, t) - 2.0 * heat_kernel_circle(th, t) +
                          heat_kernel_circle(th - e, t)) /
                         (e * e);
      REQUIRE(std::abs(pt - pxx) < 1e-4);
    }
  }
}

TEST_CASE("circle kernel derivative matches finite differences", "[heat]") {
  for (double t : {0.05, 0.5, 2.0}) {
    for (double th : {0.2, 1.0, 2.8}) {
      const double e = 1e-6;
      const double fd = (heat_kernel_circle(th + e, t) - heat_kernel_circle(th - e, t)) / (2 * e);
      REQUIRE(std::abs(heat_kernel_circle_deriv(th, t) - fd) < 1e-7);
    }
  }
}

TEST_CASE("sphere kernel matches the Legendre reference value", "[heat]") {
  // d=3 reference: sum_l (2l+1)/(4pi) e^{-l(l+1)t} P_l(cos 0.8) at 50 digits
  REQUIRE(std::abs(heat_kernel_sphere(std::cos(0.8), 0.25, 3) - 0.19299731621879396335) < 1e-12);
}

TEST_CASE("sphere kernel is normalized", "[heat]") {
  // integrate over the polar angle: int_0^pi p(cos a, t) * 2 pi sin a da = 1
  for (double t : {0.05, 0.3, 2.0}) {
    const int n = 8000;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const double a = M_PI * (k + 0.5) / n;
      acc += heat_kernel_sphere(std::cos(a), t, 3) * 2.0 * M_PI * std::sin(a) * M_PI / n;
    }
    REQUIRE(std::abs(acc - 1.0) < 1e-6);
  }
}

TEST_CASE("mixture evolution is a semigroup with exact inverse", "[heat]") {
  HeatMixture m;
  m.d = 2;
  for (int j = 0; j < 2; ++j) {
    HeatComponent c;
    c.center = (Vec(2) << std::cos(1.0 + j), std::sin(1.0 + j)).finished();
    // dyadic values so the semigroup identity is exact in binary floating point
    c.var = 0.125 + 0.0625 * j;
    c.weight = 0.5;
    m.components.push_back(c);
  }
  const HeatMixture fwd = mixture_evolve(m, 0.375, -1);  // forward: var + t
  const HeatMixture two = mixture_evolve(mixture_evolve(m, 0.125, -1), 0.25, -1);
  for (std::size_t j = 0; j < m.components.size(); ++j) {
    REQUIRE(fwd.components[j].var == two.components[j].var);  // exact semigroup
    REQUIRE(fwd.components[j].var == m.components[j].var + 0.375);
  }
  const HeatMixture back = mixture_evolve(fwd, 0.375, +1);  // backward undoes forward
  for (std::size_t j = 0; j < m.components.size(); ++j)
    REQUIRE(back.components[j].var == m.components[j].var);
}

TEST_CASE("backward evolution past the collapse time raises", "[heat]") {
  HeatMixture m;
  m.d = 2;
  HeatComponent c;
  c.center = (Vec(2) << 1, 0).finished();
  c.var = 0.04;
  c.weight = 1.0;
  m.components.push_back(c);
  REQUIRE_THROWS_AS(mixture_evolve(m, 0.05, +1), NumericalError);
  REQUIRE_THROWS_AS(mixture_evolve(m, 0.04, +1), NumericalError);
  REQUIRE_NOTHROW(mixture_evolve(m, 0.039, +1));
}

TEST_CASE("mixture density integrates to one and matches the kernel", "[heat]") {
  HeatMixture m;
  m.d = 2;
  const double ws[3] = {0.2, 0.5, 0.3}, th[3] = {0.5, 2.0, 4.0};
  for (int j = 0; j < 3; ++j) {
    HeatComponent c;
    c.center = (Vec(2) << std::cos(th[j]), std::sin(th[j])).finished();
    c.var = 0.04 + 0.02 * j;
    c.weight = ws[j];
    m.components.push_back(c);
  }
  const double mass =
      trapezoid_circle([&](double a) { return mixture_density_circle(m, a); }, 1024);
  REQUIRE(std::abs(mass - 1.0) < 1e-12);
  // single-component mixture reduces to the kernel itself
  HeatMixture single;
  single.d = 2;
  single.components.push_back({(Vec(2) << 1, 0).finished(), 0.1, 1.0, false});
  REQUIRE(std::abs(mixture_density_circle(single, 0.9) - heat_kernel_circle(0.9, 0.1)) < 1e-15);
  // derivative consistency
  for (double a : {0.3, 1.7, 3.9}) {
    const double e = 1e-6;
    const double fd =
        (mixture_density_circle(m, a + e) - mixture_density_circle(m, a - e)) / (2 * e);
    REQUIRE(std::abs(mixture_density_circle_deriv(m, a) - fd) < 1e-6);
  }
}

TEST_CASE("long forward evolution converges to the uniform density", "[heat]") {
  HeatMixture m;
  m.d = 2;
  m.components.push_back({(Vec(2) << 1, 0).finished(), 0.02, 0.6, false});
  m.components.push_back({(Vec(2) << -1, 0).finished(), 0.05, 0.4, false});
  const HeatMixture late = mixture_evolve(m, 20.0, -1);
  for (double a : {0.0, 1.0, 2.0, 3.0}) {
    REQUIRE(std::abs(mixture_density_circle(late, a) - 1.0 / (2.0 * M_PI)) < 1e-6);
  }
}
