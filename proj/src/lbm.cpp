#include "vortexswim/lbm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace vortexswim::lbm {

namespace {

using L = Lattice;

constexpr int kQ = L::Q;

}  // namespace

Populations equilibrium(double rho, Vec2 u) {
  Populations out{};
  const double usq = u.x * u.x + u.y * u.y;
  for (int i = 0; i < kQ; ++i) {
    const double cu = L::cx[i] * u.x + L::cy[i] * u.y;
    out[i] = L::w[i] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * usq);
  }
  return out;
}

double FlowConfig::tau() const {
  if (tau_override > 0.0) return tau_override;
  if (!has_cylinder() || reynolds <= 0.0) return 0.5;
  return 3.0 * u_in * diameter / reynolds + 0.5;
}

double FlowConfig::inlet_speed(std::int64_t tick) const {
  if (inlet_ramp <= 0 || tick >= inlet_ramp) return u_in;
  const double s = std::sin(0.5 * kPi * double(tick) / inlet_ramp);
  return u_in * s * s;
}

void FlowConfig::validate() const {
  std::ostringstream err;
  if (nx < 3 || ny < 3) err << "grid must be at least 3x3 (got " << nx << "x" << ny << "); ";
  const double t = tau();
  if (!(t > 0.5)) {
    err << "stability gate: tau = " << t << " must exceed 0.5";
    if (!has_cylinder() && tau_override <= 0.0) err << " (no cylinder, set tau explicitly)";
    err << "; ";
  }
  if (west == Boundary::Outflow || west == Boundary::FreeSlip || west == Boundary::NoSlip)
    err << "west side supports only periodic or velocity inlet; ";
  if (east == Boundary::VelocityInlet || east == Boundary::FreeSlip || east == Boundary::NoSlip)
    err << "east side supports only periodic or outflow; ";
  if ((west == Boundary::Periodic) != (east == Boundary::Periodic))
    err << "west and east must both be periodic or neither; ";
  for (Boundary b : {north, south}) {
    if (b == Boundary::VelocityInlet || b == Boundary::Outflow)
      err << "north/south support only periodic, free-slip or no-slip; ";
  }
  if ((north == Boundary::Periodic) != (south == Boundary::Periodic))
    err << "north and south must both be periodic or neither; ";
  if (has_cylinder()) {
    const double r = 0.5 * diameter;
    if (cylinder_center.x - r < 2.0 || cylinder_center.x + r > nx - 3.0 ||
        cylinder_center.y - r < 2.0 || cylinder_center.y + r > ny - 3.0)
      err << "cylinder must lie fully inside the grid; ";
  }
  if (std::abs(u_in) >= std::sqrt(L::cs2)) err << "inlet speed must be below the lattice sound speed; ";
  const std::string msg = err.str();
  if (!msg.empty()) throw ConfigError("invalid flow config: " + msg.substr(0, msg.size() - 2));
}

void VectorField::clear() {
  std::fill(x.begin(), x.end(), 0.0);
  std::fill(y.begin(), y.end(), 0.0);
}

MacroField::MacroField(int nx_, int ny_) : nx(nx_), ny(ny_) {
  const std::size_t n = std::size_t(nx_) * ny_;
  rho.assign(n, 1.0);
  ux.assign(n, 0.0);
  uy.assign(n, 0.0);
  p.assign(n, L::cs2);
  gx.assign(n, 0.0);
  gy.assign(n, 0.0);
}

DistributionField::DistributionField(int nx, int ny, double tau)
    : nx_(nx), ny_(ny), tau_(tau), f_(std::size_t(kQ) * nx * ny), post_(f_.size()) {
  fill_equilibrium(1.0, {0.0, 0.0});
}

Populations DistributionField::cell(int x, int y) const {
  Populations out{};
  for (int i = 0; i < kQ; ++i) out[i] = f(i, x, y);
  return out;
}

void DistributionField::set_cell(int x, int y, const Populations& pop) {
  for (int i = 0; i < kQ; ++i) f(i, x, y) = pop[i];
}

void DistributionField::fill_equilibrium(double rho, Vec2 u) {
  const Populations eq = equilibrium(rho, u);
  for (int i = 0; i < kQ; ++i) {
    auto pl = plane(i);
    std::fill(pl.begin(), pl.end(), eq[i]);
  }
}

void macroscopics_rows(const DistributionField& field, const VectorField* force,
                       MacroField& out, int y_begin, int y_end) {
  const int nx = field.nx();
  const std::size_t n = field.cells();
  const double* f = field.data().data();
  double rho_min = 1.0;
  for (int y = y_begin; y < y_end; ++y) {
    for (int x = 0; x < nx; ++x) {
      const std::size_t k = std::size_t(y) * nx + x;
      const double f0 = f[k], f1 = f[n + k], f2 = f[2 * n + k], f3 = f[3 * n + k],
                   f4 = f[4 * n + k], f5 = f[5 * n + k], f6 = f[6 * n + k],
                   f7 = f[7 * n + k], f8 = f[8 * n + k];
      const double rho = f0 + f1 + f2 + f3 + f4 + f5 + f6 + f7 + f8;
      double jx = f1 - f3 + f5 - f6 - f7 + f8;
      double jy = f2 - f4 + f5 + f6 - f7 - f8;
      double gx = 0.0;
      double gy = 0.0;
      if (force != nullptr) {
        gx = force->x[k];
        gy = force->y[k];
        jx += 0.5 * gx;
        jy += 0.5 * gy;
      }
      rho_min = std::min(rho_min, rho);
      // NaN compares false; caught below.
      if (!(rho == rho)) rho_min = rho;
      out.rho[k] = rho;
      out.p[k] = rho * L::cs2;
      out.ux[k] = jx / rho;
      out.uy[k] = jy / rho;
      out.gx[k] = gx;
      out.gy[k] = gy;
    }
  }
  if (!(rho_min > 0.0) || !std::isfinite(rho_min))
    throw DivergedError("non-positive or non-finite density", field.tick());
}

void macroscopics(const DistributionField& field, const VectorField* force, MacroField& out) {
  if (out.nx != field.nx() || out.ny != field.ny()) out = MacroField(field.nx(), field.ny());
  macroscopics_rows(field, force, out, 0, field.ny());
}

MacroField macroscopics(const DistributionField& field, const VectorField* force) {
  MacroField out(field.nx(), field.ny());
  macroscopics_rows(field, force, out, 0, field.ny());
  return out;
}

void collide_rows(DistributionField& field, const MacroField& macro, int y_begin, int y_end) {
  const int nx = field.nx_;
  const std::size_t n = field.cells();
  const double omega = 1.0 / field.tau_;
  const double guo = 1.0 - 0.5 * omega;
  const double* f = field.f_.data();
  double* post = field.post_.data();
  for (int y = y_begin; y < y_end; ++y) {
    for (int x = 0; x < nx; ++x) {
      const std::size_t k = std::size_t(y) * nx + x;
      const double rho = macro.rho[k];
      const double ux = macro.ux[k];
      const double uy = macro.uy[k];
      const double gx = macro.gx[k];
      const double gy = macro.gy[k];
      const double usq = 1.5 * (ux * ux + uy * uy);
      const bool forced = gx != 0.0 || gy != 0.0;
      for (int i = 0; i < kQ; ++i) {
        const double cu = L::cx[i] * ux + L::cy[i] * uy;
        const double feq = L::w[i] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - usq);
        const double fi = f[i * n + k];
        double out = fi - omega * (fi - feq);
        if (forced) {
          // w_i [ (c - u)/cs^2 + (c.u) c / cs^4 ] . g
          const double ax = 3.0 * (L::cx[i] - ux) + 9.0 * cu * L::cx[i];
          const double ay = 3.0 * (L::cy[i] - uy) + 9.0 * cu * L::cy[i];
          out += guo * L::w[i] * (ax * gx + ay * gy);
        }
        post[i * n + k] = out;
      }
    }
  }
}

void stream_rows(DistributionField& field, int y_begin, int y_end) {
  const int nx = field.nx_;
  const int ny = field.ny_;
  const std::size_t n = field.cells();
  for (int i = 0; i < kQ; ++i) {
    const int cx = L::cx[i];
    const int cy = L::cy[i];
    const double* src_plane = field.post_.data() + i * n;
    double* dst_plane = field.f_.data() + i * n;
    for (int y = y_begin; y < y_end; ++y) {
      const int ys = (y - cy + ny) % ny;
      const double* src = src_plane + std::size_t(ys) * nx;
      double* dst = dst_plane + std::size_t(y) * nx;
      if (cx == 0) {
        std::memcpy(dst, src, sizeof(double) * nx);
      } else if (cx == 1) {
        std::memcpy(dst + 1, src, sizeof(double) * (nx - 1));
        dst[0] = src[nx - 1];
      } else {
        std::memcpy(dst, src + 1, sizeof(double) * (nx - 1));
        dst[nx - 1] = src[0];
      }
    }
  }
}

void collide_and_stream(DistributionField& field, const MacroField& macro) {
  collide_rows(field, macro, 0, field.ny());
  // Any NaN/Inf in the post-collision state shows up in the plane sums.
  double checksum = 0.0;
  for (int i = 0; i < kQ; ++i) {
    for (double v : field.post_plane(i)) checksum += v;
  }
  if (!std::isfinite(checksum)) throw DivergedError("non-finite population", field.tick());
  stream_rows(field, 0, field.ny());
  field.set_tick(field.tick() + 1);
}

Boundaries::Boundaries(const FlowConfig& cfg) : cfg_(cfg), nx_(cfg.nx), ny_(cfg.ny) {
  solid_.assign(std::size_t(nx_) * ny_, 0);
  if (cfg.has_cylinder()) {
    const double r2 = 0.25 * cfg.diameter * cfg.diameter;
    for (int y = 0; y < ny_; ++y) {
      for (int x = 0; x < nx_; ++x) {
        const double dx = x - cfg.cylinder_center.x;
        const double dy = y - cfg.cylinder_center.y;
        if (dx * dx + dy * dy <= r2) {
          solid_[std::size_t(y) * nx_ + x] = 1;
          solid_cells_.push_back(std::uint32_t(std::size_t(y) * nx_ + x));
        }
      }
    }
    for (int y = 0; y < ny_; ++y) {
      for (int x = 0; x < nx_; ++x) {
        if (is_solid(x, y)) continue;
        for (int i = 1; i < kQ; ++i) {
          const int xn = x + L::cx[i];
          const int yn = y + L::cy[i];
          if (xn < 0 || xn >= nx_ || yn < 0 || yn >= ny_) continue;
          if (is_solid(xn, yn))
            links_.push_back({std::uint32_t(std::size_t(y) * nx_ + x), std::uint8_t(i)});
        }
      }
    }
  }
}

void Boundaries::apply(DistributionField& field) const {
  const int nx = nx_;
  const int ny = ny_;
  const std::size_t n = field.cells();
  auto F = [&](int q) { return field.plane(q).data(); };
  auto P = [&](int q) { return field.post_plane(q).data(); };
  const bool x_periodic = cfg_.west == Boundary::Periodic;
  auto xwrap = [&](int x) {
    if (x_periodic) return (x + nx) % nx;
    return std::clamp(x, 0, nx - 1);
  };

  // North / south walls.
  const std::size_t top = std::size_t(ny - 1) * nx;
  if (cfg_.north == Boundary::NoSlip) {
    for (int x = 0; x < nx; ++x) {
      F(4)[top + x] = P(2)[top + x];
      F(7)[top + x] = P(5)[top + x];
      F(8)[top + x] = P(6)[top + x];
    }
  } else if (cfg_.north == Boundary::FreeSlip) {
    for (int x = 0; x < nx; ++x) {
      F(4)[top + x] = P(2)[top + x];
      F(7)[top + x] = P(6)[top + xwrap(x + 1)];
      F(8)[top + x] = P(5)[top + xwrap(x - 1)];
    }
  }
  if (cfg_.south == Boundary::NoSlip) {
    for (int x = 0; x < nx; ++x) {
      F(2)[x] = P(4)[x];
      F(5)[x] = P(7)[x];
      F(6)[x] = P(8)[x];
    }
  } else if (cfg_.south == Boundary::FreeSlip) {
    for (int x = 0; x < nx; ++x) {
      F(2)[x] = P(4)[x];
      F(5)[x] = P(8)[xwrap(x - 1)];
      F(6)[x] = P(7)[xwrap(x + 1)];
    }
  }

  if (cfg_.west == Boundary::VelocityInlet) {
    const double u = cfg_.inlet_speed(field.tick());
    for (int y = 0; y < ny; ++y) {
      const std::size_t k = std::size_t(y) * nx;
      const double f0 = F(0)[k], f2 = F(2)[k], f3 = F(3)[k], f4 = F(4)[k], f6 = F(6)[k],
                   f7 = F(7)[k];
      const double rho = (f0 + f2 + f4 + 2.0 * (f3 + f6 + f7)) / (1.0 - u);
      Populations pop{};
      for (int q = 0; q < kQ; ++q) pop[q] = F(q)[k];
      pop[1] = f3 + (2.0 / 3.0) * rho * u;
      pop[5] = f7 - 0.5 * (f2 - f4) + (1.0 / 6.0) * rho * u;
      pop[8] = f6 + 0.5 * (f2 - f4) + (1.0 / 6.0) * rho * u;
      // Keep only the second-moment part of the non-equilibrium populations;
      // plain non-equilibrium bounce-back is unstable near tau = 1/2.
      const Populations eq = equilibrium(rho, {u, 0.0});
      double pxx = 0.0, pyy = 0.0, pxy = 0.0;
      for (int q = 0; q < kQ; ++q) {
        const double neq = pop[q] - eq[q];
        pxx += L::cx[q] * L::cx[q] * neq;
        pyy += L::cy[q] * L::cy[q] * neq;
        pxy += L::cx[q] * L::cy[q] * neq;
      }
      for (int q = 0; q < kQ; ++q) {
        const double qxx = L::cx[q] * L::cx[q] - L::cs2;
        const double qyy = L::cy[q] * L::cy[q] - L::cs2;
        const double qxy = L::cx[q] * L::cy[q];
        F(q)[k] = eq[q] + 4.5 * L::w[q] * (qxx * pxx + qyy * pyy + 2.0 * qxy * pxy);
      }
    }
  }
  if (cfg_.east == Boundary::Outflow) {
    // Zero-gradient velocity at reference density. Copying populations
    // (zero-gradient density too) lets transverse acoustic modes grow.
    for (int y = 0; y < ny; ++y) {
      const std::size_t k = std::size_t(y) * nx + nx - 1;
      double rho = 0.0, jx = 0.0, jy = 0.0;
      for (int q = 0; q < kQ; ++q) {
        const double v = F(q)[k - 1];
        rho += v;
        jx += L::cx[q] * v;
        jy += L::cy[q] * v;
      }
      const Populations eq = equilibrium(1.0, {jx / rho, jy / rho});
      for (int q = 0; q < kQ; ++q) F(q)[k] = eq[q];
    }
  }

  for (const Link& link : links_) {
    const int i = link.dir;
    F(L::opposite[i])[link.cell] = P(i)[link.cell];
  }
  for (std::uint32_t c : solid_cells_) {
    for (int i = 0; i < kQ; ++i) F(i)[c] = L::w[i];
  }
  (void)n;
}

Vec2 Boundaries::obstacle_force(const DistributionField& field) const {
  Vec2 total{};
  for (const Link& link : links_) {
    const int i = link.dir;
    const double post = field.post_plane(i)[link.cell];
    total.x += 2.0 * post * L::cx[i];
    total.y += 2.0 * post * L::cy[i];
  }
  return total;
}

std::vector<double> vorticity(const MacroField& m) {
  const int nx = m.nx;
  const int ny = m.ny;
  std::vector<double> w(std::size_t(nx) * ny, 0.0);
  if (nx < 3 || ny < 3) return w;
  for (int y = 1; y < ny - 1; ++y) {
    for (int x = 1; x < nx - 1; ++x) {
      const double duy_dx = 0.5 * (m.uy[m.index(x + 1, y)] - m.uy[m.index(x - 1, y)]);
      const double dux_dy = 0.5 * (m.ux[m.index(x, y + 1)] - m.ux[m.index(x, y - 1)]);
      w[m.index(x, y)] = duy_dx - dux_dy;
    }
  }
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      if (x > 0 && x < nx - 1 && y > 0 && y < ny - 1) continue;
      const int xi = std::clamp(x, 1, nx - 2);
      const int yi = std::clamp(y, 1, ny - 2);
      w[m.index(x, y)] = w[m.index(xi, yi)];
    }
  }
  return w;
}

Solver::Solver(const FlowConfig& cfg)
    : cfg_(cfg),
      field_((cfg.validate(), cfg.nx), cfg.ny, cfg.tau()),
      boundaries_(cfg),
      macro_(cfg.nx, cfg.ny),
      force_(cfg.nx, cfg.ny) {}

void Solver::initialize_uniform(double rho, Vec2 u) {
  field_.fill_equilibrium(rho, u);
  for (int y = 0; y < cfg_.ny; ++y) {
    for (int x = 0; x < cfg_.nx; ++x) {
      if (boundaries_.is_solid(x, y)) field_.set_cell(x, y, equilibrium(1.0, {0.0, 0.0}));
    }
  }
  field_.set_tick(0);
  update_macro();
}

void Solver::load_populations(std::span<const double> populations, std::int64_t tick) {
  if (populations.size() != field_.data().size())
    throw IoError("population buffer does not match the grid");
  std::copy(populations.begin(), populations.end(), field_.data().begin());
  field_.set_tick(tick);
  update_macro();
}

void Solver::update_macro() { macroscopics(field_, nullptr, macro_); }

void Solver::step() {
  macroscopics(field_, &force_, macro_);
  finish_tick();
}

void Solver::step_with_local_force(int x0, int x1, int y0, int y1) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, cfg_.nx);
  y1 = std::min(y1, cfg_.ny);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const std::size_t k = macro_.index(x, y);
      const double gx = force_.x[k];
      const double gy = force_.y[k];
      macro_.gx[k] = gx;
      macro_.gy[k] = gy;
      macro_.ux[k] += 0.5 * gx / macro_.rho[k];
      macro_.uy[k] += 0.5 * gy / macro_.rho[k];
    }
  }
  finish_tick();
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const std::size_t k = macro_.index(x, y);
      macro_.gx[k] = 0.0;
      macro_.gy[k] = 0.0;
    }
  }
}

void Solver::finish_tick() {
  collide_and_stream(field_, macro_);
  boundaries_.apply(field_);
}

}  // namespace vortexswim::lbm
