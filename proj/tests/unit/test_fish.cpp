#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "vortexswim/fish.hpp"

using namespace vortexswim;
using namespace vortexswim::fish;

namespace {

double width_oracle(double s) {
  const double c[5] = {0.2610, -0.3112, 0.1371, -0.0791, -0.0078};
  return c[0] * std::sqrt(s) + c[1] * s + c[2] * s * s + c[3] * s * s * s + c[4] * s * s * s * s;
}

// Independent oracle: build the constraint system from monomial derivatives
// and solve with Householder QR.
WaveCoefficients oracle_coeffs(double tp, double tn, double lp, double ln) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 6);
  Eigen::VectorXd b(6);
  const double z[2] = {0.0, 0.5 * ln};
  for (int side = 0; side < 2; ++side) {
    for (int k = 0; k < 6; ++k) {
      const double zz = z[side];
      a(side, k) = k == 0 ? 1.0 : std::pow(zz, k);
      a(2 + side, k) = k < 1 ? 0.0 : k * (k == 1 ? 1.0 : std::pow(zz, k - 1));
      a(4 + side, k) = k < 2 ? 0.0 : k * (k - 1) * (k == 2 ? 1.0 : std::pow(zz, k - 2));
    }
  }
  b << tp, tn, 0, 0, -tp * std::pow(2 * kPi / lp, 2), -tn * std::pow(2 * kPi / ln, 2);
  const Eigen::VectorXd c = a.householderQr().solve(b);
  WaveCoefficients out;
  for (int k = 0; k < 6; ++k) out[k] = c[k];
  return out;
}

}  // namespace

TEST_CASE("half width: closed at both ends, positive inside") {
  CHECK(half_width(0.0) == 0.0);
  CHECK(std::abs(half_width(1.0)) < 1e-4);
  CHECK(half_width(0.25) == doctest::Approx(width_oracle(0.25)).epsilon(1e-14));
  for (int k = 1; k < 1000; ++k) CHECK(half_width(k / 1000.0) > 0.0);
  CHECK_THROWS_AS(half_width(-0.01), DomainError);
  CHECK_THROWS_AS(half_width(1.01), DomainError);
}

TEST_CASE("waveform: zero amplitudes give the zero polynomial") {
  const auto c = solve_wave_coeffs(0.0, 0.0, 1.0, 1.3);
  for (double v : c) CHECK(v == 0.0);
}

TEST_CASE("waveform: constraints hold and match an independent solve") {
  const auto c = solve_wave_coeffs(0.3, 0.3, 1.0, 1.0);
  const auto o = oracle_coeffs(0.3, 0.3, 1.0, 1.0);
  for (int k = 0; k < 6; ++k) CHECK(c[k] == doctest::Approx(o[k]).epsilon(1e-9));
  for (double r : constraint_residuals(c, 0.3, 0.3, 1.0, 1.0)) CHECK(r < 1e-10);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> th(-0.5, 0.5), lam(0.5, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double tp = th(rng), tn = th(rng), lp = lam(rng), ln = lam(rng);
    const auto ci = solve_wave_coeffs(tp, tn, lp, ln);
    for (double r : constraint_residuals(ci, tp, tn, lp, ln)) REQUIRE(r < 1e-10);
  }
  CHECK_THROWS_AS(solve_wave_coeffs(0.1, 0.1, 0.0, 1.0), DomainError);
}

TEST_CASE("deflection envelope") {
  WavePlan p;
  p.theta_prev = 0.2;
  p.theta_next = -0.4;
  p.period = 100;
  p.solve();
  for (double t : {0.0, 10.0, 49.0}) CHECK(deflection_angle(0.0, t, p) == 0.0);
  WavePlan z;
  z.period = 100;
  CHECK(deflection_angle(0.7, 20.0, z) == 0.0);
  // Linear in l/L at fixed phase.
  const double zeta = 0.2;
  const double t = zeta * p.period / p.lambda;  // head phase; station phase shifts by l/L
  const double a = deflection_angle(0.1, t + 0.1 * p.period, p);
  const double b = deflection_angle(0.3, t + 0.3 * p.period, p);
  CHECK(b == doctest::Approx(3 * a).epsilon(1e-12));
}

TEST_CASE("undulation is C2 across half-cycle boundaries") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> th(-0.5, 0.5);
  const double len = 40, lambda = 1.0, period = 400;
  Undulation u(len, lambda, period);
  u.begin_half_cycle(th(rng));
  for (int n = 0; n < 12; ++n) {
    const WavePlan out = u.current();
    const WavePlan& in = u.begin_half_cycle(th(rng));
    const double t0 = in.t_start;
    for (int k = 0; k <= 20; ++k) {
      const double s = k / 20.0;
      // At t0 the head enters the new plan; any station at that instant is
      // still in the old one. Compare the two plans at the head boundary
      // and the undulation at a station's own boundary time.
      const double tb = t0 + s * period / lambda;
      if (tb > in.t_end()) continue;
      const WavePlan& newer = in;
      const double z_old = out.phase(s, tb);
      const double z_new = newer.phase(s, tb);
      CHECK(z_new == doctest::Approx(0.0).scale(1.0));
      CHECK(s * waveform(out.coeffs, z_old) ==
            doctest::Approx(s * waveform(newer.coeffs, z_new)).epsilon(1e-8).scale(1.0));
      const double k1 = lambda / period;
      CHECK(s * k1 * waveform_d1(out.coeffs, z_old) ==
            doctest::Approx(s * k1 * waveform_d1(newer.coeffs, z_new)).epsilon(1e-8).scale(1.0));
      CHECK(s * k1 * k1 * waveform_d2(out.coeffs, z_old) ==
            doctest::Approx(s * k1 * k1 * waveform_d2(newer.coeffs, z_new)).epsilon(1e-8).scale(1.0));
    }
    // Undulation evaluated just either side of the head boundary.
    const double h = 1e-7;
    CHECK(u.deflection(len, t0 - h) == doctest::Approx(u.deflection(len, t0 + h)).epsilon(1e-6));
  }
}

TEST_CASE("undulation: head stays straight and steady plans are periodic") {
  Undulation u(40, 1.0, 200);
  const auto arc = BodyShape{40, 41}.arc_stations();
  u.begin_half_cycle(0.4);
  std::vector<MidlineState> snaps;
  for (int n = 0; n < 9; ++n) {
    u.begin_half_cycle(n % 2 ? 0.4 : -0.4);
    snaps.push_back(u.midline(u.current().t_start + 17.0, arc));
    for (double t = u.current().t_start; t < u.current().t_end(); t += 7)
      CHECK(u.deflection(0.0, t) == 0.0);
  }
  // The first half cycles are the transient from a straight body; after
  // that the midline repeats every full period (two half cycles).
  const MidlineState& a = snaps[snaps.size() - 3];
  const MidlineState& b = snaps.back();
  for (std::size_t k = 0; k < arc.size(); ++k) {
    CHECK(a.lateral[k] == doctest::Approx(b.lateral[k]).epsilon(1e-6).scale(1.0));
    CHECK(a.theta[k] == doctest::Approx(b.theta[k]).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("midline quadrature") {
  const auto arc = BodyShape{10, 101}.arc_stations();
  std::vector<double> th(arc.size(), 0.0);
  MidlineState m = integrate_midline(arc, th);
  for (std::size_t k = 0; k < arc.size(); ++k) {
    CHECK(m.lateral[k] == 0.0);
    CHECK(m.axial[k] == doctest::Approx(arc[k]).epsilon(1e-14));
  }
  const double alpha = 0.37;
  std::fill(th.begin(), th.end(), alpha);
  m = integrate_midline(arc, th);
  for (std::size_t k = 0; k < arc.size(); ++k) {
    CHECK(std::abs(m.lateral[k] - arc[k] * std::sin(alpha)) < 1e-10);
    CHECK(std::abs(m.axial[k] - arc[k] * std::cos(alpha)) < 1e-10);
  }
}

TEST_CASE("midline: arc length exact, p(0) = 0, converged at 101 stations") {
  const double len = 32;
  Undulation u(len, 1.0, 300);
  const auto coarse = BodyShape{len, 101}.arc_stations();
  const auto fine = BodyShape{len, 1001}.arc_stations();
  for (double t = 0; t < 450; t += 13) {
    while (u.half_cycles() == 0 || t >= u.current().t_end())
      u.begin_half_cycle(u.half_cycles() % 2 ? -0.5 : 0.5);
    const MidlineState m = u.midline(t, coarse);
    double total = 0;
    for (std::size_t k = 1; k < coarse.size(); ++k)
      total += std::hypot(m.axial[k] - m.axial[k - 1], m.lateral[k] - m.lateral[k - 1]);
    CHECK(std::abs(total - len) < 1e-8 * len);
    CHECK(m.lateral[0] == 0.0);
    const MidlineState f = u.midline(t, fine);
    for (std::size_t k = 0; k < coarse.size(); ++k) {
      CHECK(std::abs(m.lateral[k] - f.lateral[10 * k]) < 1e-4 * len);
      CHECK(std::abs(m.axial[k] - f.axial[10 * k]) < 1e-4 * len);
    }
  }
}

TEST_CASE("tail deflection overshoot over one steady cycle") {
  Undulation u(1.0, 1.0, 100);
  double peak = 0;
  for (double t = 0; t < 600; t += 0.25) {
    while (u.half_cycles() == 0 || t >= u.current().t_end())
      u.begin_half_cycle(u.half_cycles() % 2 ? -0.5 : 0.5);
    if (t >= 500) peak = std::max(peak, std::abs(u.deflection(1.0, t)));
  }
  MESSAGE("max |theta(L)| over a steady cycle: " << peak);
  CHECK(peak >= 0.5 - 1e-9);
  CHECK(peak < 0.6);
}
