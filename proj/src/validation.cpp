#include "vortexswim/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "vortexswim/fish.hpp"
#include "vortexswim/ibm.hpp"

namespace vortexswim::validation {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

lbm::FlowConfig periodic_box(int nx, int ny, double tau) {
  lbm::FlowConfig c;
  c.nx = nx;
  c.ny = ny;
  c.u_in = 0.0;
  c.tau_override = tau;
  c.west = c.east = c.north = c.south = lbm::Boundary::Periodic;
  return c;
}

}  // namespace

Row poiseuille() {
  const auto t0 = Clock::now();
  auto c = periodic_box(64, 32, 0.8);
  c.north = c.south = lbm::Boundary::NoSlip;
  lbm::Solver s(c);
  s.initialize_uniform(1.0, {});
  const double g = 1e-6;
  std::fill(s.force().x.begin(), s.force().x.end(), g);
  for (int t = 0; t < 8000; ++t) s.step();
  s.update_macro();
  // Half-way walls at y = -1/2 and ny - 1/2.
  const double nu = c.viscosity();
  const double h = c.ny;
  double prof = 0.0, centre = 0.0;
  for (int y = 0; y < c.ny; ++y) {
    const double yy = y + 0.5;
    const double exact = g / (2 * nu) * yy * (h - yy);
    const double u = s.macro().ux[s.macro().index(10, y)] + 0.5 * g;  // half-force velocity
    const double e = std::abs(u - exact) / exact;
    prof = std::max(prof, e);
    if (y == c.ny / 2 - 1 || y == c.ny / 2) centre = std::max(centre, e);
  }
  return {"poiseuille", "centreline_rel_error", centre, "< 0.01", centre < 0.01, since(t0),
          "64x32, tau 0.8, 8000 ticks; worst row " + fmt(prof)};
}

Row taylor_green() {
  const auto t0 = Clock::now();
  const int n = 64;
  lbm::Solver s(periodic_box(n, n, 0.8));
  const double u0 = 0.02;
  const double k = 2 * kPi / n;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const Vec2 u{-u0 * std::cos(k * x) * std::sin(k * y), u0 * std::sin(k * x) * std::cos(k * y)};
      const double p = -0.25 * u0 * u0 * (std::cos(2 * k * x) + std::cos(2 * k * y));
      s.field().set_cell(x, y, lbm::equilibrium(1.0 + 3.0 * p, u));
    }
  auto energy = [&] {
    s.update_macro();
    double e = 0;
    for (std::size_t i = 0; i < s.macro().ux.size(); ++i)
      e += s.macro().ux[i] * s.macro().ux[i] + s.macro().uy[i] * s.macro().uy[i];
    return e;
  };
  for (int t = 0; t < 100; ++t) s.step();
  const double e0 = energy();
  const int ticks = 1000;
  for (int t = 0; t < ticks; ++t) s.step();
  const double rate = -std::log(energy() / e0) / ticks;
  // Energy ~ exp(-2 nu |k|^2 t) with |k|^2 = 2 k^2.
  const double exact = 2 * s.config().viscosity() * 2 * k * k;
  const double err = std::abs(rate - exact) / exact;
  return {"taylor_green", "decay_rate_rel_error", err, "< 0.02", err < 0.02, since(t0),
          "64x64, tau 0.8, rate " + fmt(rate) + " vs " + fmt(exact)};
}

double dominant_frequency(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 16) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = (x[i] - mean) * (0.5 - 0.5 * std::cos(2 * kPi * double(i) / double(n - 1)));
  // Scan at 1/8 of the natural resolution, skipping the two lowest bins.
  const int over = 8;
  const std::size_t bins = n / 2 * over;
  auto power = [&](double f) {
    double re = 0, im = 0;
    const double c = std::cos(2 * kPi * f), s = std::sin(2 * kPi * f);
    double cr = 1, ci = 0;  // rotating phasor
    for (std::size_t i = 0; i < n; ++i) {
      re += w[i] * cr;
      im -= w[i] * ci;
      const double t = cr * c - ci * s;
      ci = cr * s + ci * c;
      cr = t;
    }
    return re * re + im * im;
  };
  std::size_t best = 0;
  double pbest = -1.0;
  std::vector<double> p(bins + 1, 0.0);
  for (std::size_t b = 2 * over; b <= bins; ++b) {
    p[b] = power(double(b) / double(n * over));
    if (p[b] > pbest) {
      pbest = p[b];
      best = b;
    }
  }
  double shift = 0.0;
  if (best > 2 * over && best < bins) {
    const double a = p[best - 1], c = p[best + 1];
    const double den = a - 2 * pbest + c;
    if (den != 0.0) shift = 0.5 * (a - c) / den;
  }
  return (double(best) + shift) / double(n * over);
}

std::vector<Row> strouhal(const StrouhalSetup& st) {
  const auto t0 = Clock::now();
  lbm::FlowConfig c;
  c.nx = int(st.length * st.diameter);
  c.ny = int(st.width * st.diameter);
  c.u_in = st.u_in;
  c.reynolds = st.reynolds;
  c.diameter = st.diameter;
  c.cylinder_center = {st.centre * st.diameter, c.ny / 2.0};
  c.inlet_ramp = st.ramp;
  lbm::Solver s(c);
  s.initialize_uniform(1.0, {0.0, 0.0});
  std::vector<double> lift;
  lift.reserve(std::size_t(st.ticks));
  for (int t = 0; t < st.ticks; ++t) {
    s.step();
    lift.push_back(s.obstacle_force().y);
  }
  const std::vector<double> tail(lift.begin() + st.ticks / 2, lift.end());
  const double f = dominant_frequency(tail);
  const double sr = f * st.diameter / st.u_in;
  double mean = 0.0;
  for (double v : tail) mean += v;
  mean /= double(tail.size());
  int crossings = 0;
  double amp = 0.0;
  for (std::size_t i = 1; i < tail.size(); ++i) {
    if ((tail[i - 1] - mean) * (tail[i] - mean) < 0) ++crossings;
    amp = std::max(amp, std::abs(tail[i] - mean));
  }
  const double cl = amp / (0.5 * st.u_in * st.u_in * st.diameter);
  const double secs = since(t0);
  std::ostringstream note;
  note << c.nx << "x" << c.ny << ", D " << st.diameter << ", tau " << std::setprecision(4) << c.tau()
       << ", " << st.ticks << " ticks";
  return {{"strouhal", "St", sr, "[0.18, 0.21]", sr >= 0.18 && sr <= 0.21, secs, note.str()},
          {"strouhal", "lift_coefficient_amplitude", cl, "> 0, >= 10 sign changes",
           cl > 1e-3 && crossings >= 10, 0.0, std::to_string(crossings) + " sign changes"}};
}

std::vector<Row> ibm_operators(std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(3.0, 45.0), uy(3.0, 27.0), un(-1.0, 1.0);
  const int nx = 48, ny = 30;
  double worst_adj = 0.0, worst_lin = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 50;
    std::vector<Vec2> X(m), F(m);
    std::vector<double> ds(m);
    for (int k = 0; k < m; ++k) {
      X[k] = {ux(rng), uy(rng)};
      F[k] = {un(rng), un(rng)};
      ds[k] = 0.5 + 0.5 * std::abs(un(rng));
    }
    lbm::VectorField g(nx, ny);
    fsi::spread_force(X, F, ds, g);
    lbm::MacroField u(nx, ny);
    for (std::size_t i = 0; i < u.ux.size(); ++i) {
      u.ux[i] = un(rng);
      u.uy[i] = un(rng);
    }
    double lhs = 0.0;
    for (std::size_t i = 0; i < u.ux.size(); ++i) lhs += g.x[i] * u.ux[i] + g.y[i] * u.uy[i];
    const auto ui = fsi::interpolate_velocity(X, u);
    double rhs = 0.0;
    for (int k = 0; k < m; ++k) rhs += dot(F[k], ui[k]) * ds[k];
    worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300));

    // Linear field a + B x.
    const double a0 = un(rng), a1 = un(rng), b00 = un(rng), b01 = un(rng), b10 = un(rng), b11 = un(rng);
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        u.ux[u.index(x, y)] = a0 + 0.01 * (b00 * x + b01 * y);
        u.uy[u.index(x, y)] = a1 + 0.01 * (b10 * x + b11 * y);
      }
    const auto ul = fsi::interpolate_velocity(X, u);
    for (int k = 0; k < m; ++k) {
      const Vec2 e{a0 + 0.01 * (b00 * X[k].x + b01 * X[k].y), a1 + 0.01 * (b10 * X[k].x + b11 * X[k].y)};
      worst_lin = std::max(worst_lin, norm(ul[k] - e));
    }
  }
  const double secs = since(t0);
  return {{"ibm", "adjointness_rel_error", worst_adj, "< 1e-12", worst_adj < 1e-12, secs,
           "20 random trials, 50 markers"},
          {"ibm", "linear_field_abs_error", worst_lin, "< 1e-10", worst_lin < 1e-10, 0.0, ""}};
}

std::vector<Row> waveform(std::uint64_t seed, int draws) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> th(-0.6, 0.6), lam(0.5, 2.0);
  double worst = 0.0;
  for (int k = 0; k < draws; ++k) {
    const double tp = th(rng), tn = th(rng), lp = lam(rng), ln = lam(rng);
    const auto c = fish::solve_wave_coeffs(tp, tn, lp, ln);
    for (double r : fish::constraint_residuals(c, tp, tn, lp, ln)) worst = std::max(worst, std::abs(r));
  }
  const double secs = since(t0);

  // Waveform value and first two phase derivatives where consecutive
  // half-cycle plans meet: end of plan n-1 (phase lambda/2) vs start of n.
  const auto t1 = Clock::now();
  fish::Undulation u(40.0, 1.0, 200.0);
  double jump = 0.0;
  int joins = 0;
  for (int n = 0; n < 12; ++n) {
    u.begin_half_cycle(th(rng));
    const auto& plans = u.plans();
    if (plans.size() < 2) continue;
    const auto& a = plans[plans.size() - 2];
    const auto& b = plans.back();
    const double z = 0.5 * a.lambda, h = 0.5 * b.lambda;
    jump = std::max({jump, std::abs(fish::waveform(a.coeffs, z) - fish::waveform(b.coeffs, 0.0)),
                     h * std::abs(fish::waveform_d1(a.coeffs, z) - fish::waveform_d1(b.coeffs, 0.0)),
                     h * h * std::abs(fish::waveform_d2(a.coeffs, z) - fish::waveform_d2(b.coeffs, 0.0))});
    ++joins;
  }
  return {{"waveform", "constraint_residual_max", worst, "< 1e-10", worst < 1e-10, secs,
           std::to_string(draws) + " random draws"},
          {"waveform", "c2_join_jump_max", jump, "< 1e-8", jump < 1e-8, since(t1),
           "p, (lambda/2) p', (lambda/2)^2 p'' over " + std::to_string(joins) + " joins"}};
}

Row body_shape() {
  const double h0 = fish::half_width(0.0), h1 = fish::half_width(1.0);
  return {"body_shape", "half_width_ends", std::max(std::abs(h0), std::abs(h1)),
          "w(0) = 0, |w(1)| < 1e-4", h0 == 0.0 && std::abs(h1) < 1e-4, 0.0,
          "w(1) = " + fmt(h1)};
}

Row stability_gate(const lbm::FlowConfig& cfg) {
  Row r{"stability", "tau", cfg.tau(), "> 0.5", true, 0.0, ""};
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    r.pass = false;
    r.note = e.what();
  }
  return r;
}

Row self_propulsion(const PropulsionSetup& p) {
  const auto t0 = Clock::now();
  lbm::FlowConfig c;
  c.nx = int(8 * p.length);
  c.ny = int(3 * p.length);
  c.u_in = 0.0;
  c.tau_override = p.tau;
  c.west = c.east = lbm::Boundary::Periodic;
  c.north = c.south = lbm::Boundary::FreeSlip;
  lbm::Solver s(c);
  s.initialize_uniform(1.0, {0.0, 0.0});
  fish::BodyShape shape;
  shape.length = p.length;
  shape.stations = int(p.length) + 1;
  fsi::Swimmer f(shape, 1.0, p.period, {});
  const double heading = kPi;
  f.place({(8 - 2) * p.length, 1.5 * p.length}, heading);
  const int half = int(std::lround(p.period / 2));
  Vec2 start{};
  double sign = 1.0;
  for (int h = 0; h < 2 * p.cycles; ++h) {
    f.begin_half_cycle(sign * p.amplitude);
    sign = -sign;
    for (int k = 0; k < half; ++k) f.tick(s);
    if (h == 1) start = f.body().d;
  }
  const Vec2 d = f.body().d - start;
  const Vec2 forward{std::cos(heading), std::sin(heading)};
  const double speed = dot(d, forward) / p.length / double(p.cycles - 1);
  std::ostringstream note;
  note << "L " << p.length << " cells, T " << p.period << ", tau " << p.tau << ", " << p.cycles
       << " cycles, " << c.nx << "x" << c.ny;
  return {"self_propulsion", "forward_speed_L_per_cycle", speed, "> 0.01", speed > 0.01, since(t0),
          note.str()};
}

std::string csv_header() { return "test,metric,value,bound,pass\n"; }

std::string csv_row(const Row& r) {
  std::ostringstream os;
  os << std::setprecision(10) << r.test << ',' << r.metric << ',' << r.value << ",\"" << r.bound
     << "\"," << (r.pass ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace vortexswim::validation
