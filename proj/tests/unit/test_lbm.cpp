#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "vortexswim/lbm.hpp"

using namespace vortexswim;
using namespace vortexswim::lbm;
using L = Lattice;

namespace {

FlowConfig periodic_box(int nx, int ny, double tau) {
  FlowConfig c;
  c.nx = nx;
  c.ny = ny;
  c.u_in = 0.0;
  c.tau_override = tau;
  c.west = c.east = c.north = c.south = Boundary::Periodic;
  return c;
}

double total_mass(const DistributionField& f) {
  const auto d = f.data();
  return std::accumulate(d.begin(), d.end(), 0.0);
}

}  // namespace

TEST_CASE("lattice weights and isotropy as exact rationals") {
  int wsum = 0;
  for (int n : L::weight_numerator) wsum += n;
  CHECK(wsum == L::kWeightDenominator);
  // sum w c_a c_b = cs2 delta_ab, i.e. sum n c_a c_b * cs2_den = den * cs2_num delta_ab
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      int s = 0;
      for (int i = 0; i < L::Q; ++i) {
        const int ca = a == 0 ? L::cx[i] : L::cy[i];
        const int cb = b == 0 ? L::cx[i] : L::cy[i];
        s += L::weight_numerator[i] * ca * cb;
      }
      CHECK(s * L::kCs2Denominator == (a == b ? L::kWeightDenominator * L::kCs2Numerator : 0));
    }
  }
  for (int i = 0; i < L::Q; ++i) {
    CHECK(L::cx[L::opposite[i]] == -L::cx[i]);
    CHECK(L::cy[L::opposite[i]] == -L::cy[i]);
  }
}

TEST_CASE("equilibrium reproduces density, momentum and momentum flux") {
  const double rho = 1.03;
  const Vec2 u{0.04, -0.025};
  const Populations eq = equilibrium(rho, u);
  double m0 = 0, mx = 0, my = 0, pxx = 0, pxy = 0, pyy = 0;
  for (int i = 0; i < L::Q; ++i) {
    m0 += eq[i];
    mx += eq[i] * L::cx[i];
    my += eq[i] * L::cy[i];
    pxx += eq[i] * L::cx[i] * L::cx[i];
    pxy += eq[i] * L::cx[i] * L::cy[i];
    pyy += eq[i] * L::cy[i] * L::cy[i];
  }
  CHECK(m0 == doctest::Approx(rho).epsilon(1e-14));
  CHECK(mx == doctest::Approx(rho * u.x).epsilon(1e-14));
  CHECK(my == doctest::Approx(rho * u.y).epsilon(1e-14));
  CHECK(pxx == doctest::Approx(rho * (L::cs2 + u.x * u.x)).epsilon(1e-14));
  CHECK(pxy == doctest::Approx(rho * u.x * u.y).epsilon(1e-14));
  CHECK(pyy == doctest::Approx(rho * (L::cs2 + u.y * u.y)).epsilon(1e-14));
}

TEST_CASE("fluid at rest is a fixed point") {
  Solver s(periodic_box(16, 12, 0.8));
  s.initialize_uniform(1.0, {});
  for (int t = 0; t < 20; ++t) s.step();
  const Populations eq = equilibrium(1.0, {});
  for (int i = 0; i < L::Q; ++i) CHECK(s.field().f(i, 3, 5) == doctest::Approx(eq[i]).epsilon(1e-15));
}

TEST_CASE("tau = 1 collision lands exactly on equilibrium") {
  DistributionField f(4, 3, 1.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.05, 0.2);
  for (double& v : f.data()) v = d(rng);
  MacroField m = macroscopics(f, nullptr);
  collide_rows(f, m, 0, f.ny());
  for (int y = 0; y < f.ny(); ++y) {
    for (int x = 0; x < f.nx(); ++x) {
      const Populations eq = equilibrium(m.rho[m.index(x, y)], m.velocity(x, y));
      for (int i = 0; i < L::Q; ++i)
        CHECK(f.post_plane(i)[f.index(x, y)] == doctest::Approx(eq[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("macroscopic velocity carries the half-force correction") {
  DistributionField f(3, 3, 0.9);
  VectorField g(3, 3);
  std::fill(g.x.begin(), g.x.end(), 0.006);
  const MacroField m = macroscopics(f, &g);
  CHECK(m.ux[4] == doctest::Approx(0.003).epsilon(1e-14));
  CHECK(m.uy[4] == doctest::Approx(0.0).scale(1.0));
  CHECK(m.p[4] == doctest::Approx(L::cs2));
}

TEST_CASE("mass is conserved on a periodic box with body force") {
  Solver s(periodic_box(24, 20, 0.7));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-0.01, 0.01);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 24; ++x) s.field().set_cell(x, y, equilibrium(1.0 + d(rng), {d(rng), d(rng)}));
  for (std::size_t k = 0; k < s.force().x.size(); ++k) s.force().x[k] = 1e-5 * std::sin(0.3 * k);
  const double m0 = total_mass(s.field());
  for (int t = 0; t < 200; ++t) s.step();
  CHECK(std::abs(total_mass(s.field()) - m0) / m0 < 1e-12);
}

TEST_CASE("Poiseuille channel matches the parabolic profile") {
  FlowConfig c = periodic_box(64, 32, 0.8);
  c.north = c.south = Boundary::NoSlip;
  Solver s(c);
  s.initialize_uniform(1.0, {});
  const double g = 1e-6;
  std::fill(s.force().x.begin(), s.force().x.end(), g);
  for (int t = 0; t < 8000; ++t) s.step();
  s.update_macro();
  // Walls half way between cells: y = -1/2 and y = ny - 1/2.
  const double nu = c.viscosity();
  const double h = c.ny;
  for (int y = 0; y < c.ny; ++y) {
    const double yy = y + 0.5;
    const double exact = g / (2 * nu) * yy * (h - yy);
    const double u = s.macro().ux[s.macro().index(10, y)] + 0.5 * g;  // half-force velocity
    CHECK(u == doctest::Approx(exact).epsilon(0.01));
  }
}

TEST_CASE("Taylor-Green vortex decays at 2 nu k^2") {
  const int n = 64;
  Solver s(periodic_box(n, n, 0.8));
  const double u0 = 0.02;
  const double k = 2 * kPi / n;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const Vec2 u{-u0 * std::cos(k * x) * std::sin(k * y), u0 * std::sin(k * x) * std::cos(k * y)};
      const double p = -0.25 * u0 * u0 * (std::cos(2 * k * x) + std::cos(2 * k * y));
      s.field().set_cell(x, y, equilibrium(1.0 + 3.0 * p, u));
    }
  }
  auto energy = [&] {
    s.update_macro();
    double e = 0;
    for (std::size_t i = 0; i < s.macro().ux.size(); ++i)
      e += s.macro().ux[i] * s.macro().ux[i] + s.macro().uy[i] * s.macro().uy[i];
    return e;
  };
  for (int t = 0; t < 100; ++t) s.step();  // let the initial non-equilibrium transient pass
  const double e0 = energy();
  const int ticks = 1000;
  for (int t = 0; t < ticks; ++t) s.step();
  const double rate = -std::log(energy() / e0) / ticks;
  const double exact = 2 * s.config().viscosity() * 2 * k * k;
  CHECK(rate == doctest::Approx(exact).epsilon(0.02));
}

TEST_CASE("vorticity of solid-body rotation is twice the rate") {
  MacroField m(20, 20);
  const double om = 1e-3;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      m.ux[m.index(x, y)] = -om * (y - 10.0);
      m.uy[m.index(x, y)] = om * (x - 10.0);
    }
  const auto w = vorticity(m);
  for (double v : w) CHECK(v == doctest::Approx(2 * om).epsilon(1e-12));
}

TEST_CASE("stability gate rejects tau <= 1/2") {
  FlowConfig c = periodic_box(10, 10, 0.4);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("stability gate") != std::string::npos);
  }
  c.tau_override = 0.6;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("cylinder wake: uniform inflow stays finite and the cylinder feels drag") {
  FlowConfig c;
  c.nx = 120;
  c.ny = 50;
  c.u_in = 0.05;
  c.reynolds = 40;
  c.diameter = 10;
  c.cylinder_center = {30, 25};
  c.inlet_ramp = 500;
  Solver s(c);
  s.initialize_uniform(1.0, {});
  for (int t = 0; t < 2000; ++t) s.step();
  const Vec2 f = s.obstacle_force();
  CHECK(f.x > 0.0);
  CHECK(std::abs(f.y) < 0.2 * f.x);
}

TEST_CASE("non-finite populations raise a divergence error") {
  Solver s(periodic_box(8, 8, 0.7));
  s.initialize_uniform(1.0, {});
  s.field().f(3, 2, 2) = std::nan("");
  CHECK_THROWS_AS(s.step(), DivergedError);
}
