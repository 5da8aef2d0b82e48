#include "vortexswim/ibm.hpp"

#include <algorithm>
#include <cmath>

namespace vortexswim::fsi {

double kernel(double r) {
  const double a = std::abs(r);
  if (a <= 1.0) return (3.0 - 2.0 * a + std::sqrt(1.0 + 4.0 * a - 4.0 * a * a)) / 8.0;
  if (a < 2.0) return (5.0 - 2.0 * a - std::sqrt(std::max(0.0, -7.0 + 12.0 * a - 4.0 * a * a))) / 8.0;
  return 0.0;
}

namespace {

// Kernel stencil of one marker: base cell and 4 weights per axis.
struct Stencil {
  int x0 = 0;
  int y0 = 0;
  double wx[4];
  double wy[4];
};

Stencil stencil(Vec2 p, int nx, int ny) {
  Stencil s;
  const double fx = std::floor(p.x);
  const double fy = std::floor(p.y);
  if (!(std::isfinite(p.x) && std::isfinite(p.y)) || fx - 1 < 0 || fy - 1 < 0 ||
      fx + 2 >= nx || fy + 2 >= ny)
    throw MarkerEscapeError("immersed-boundary marker left the grid interior");
  s.x0 = int(fx) - 1;
  s.y0 = int(fy) - 1;
  for (int a = 0; a < 4; ++a) {
    s.wx[a] = kernel(p.x - (s.x0 + a));
    s.wy[a] = kernel(p.y - (s.y0 + a));
  }
  return s;
}

// Velocity patch covering the markers' kernel support, so that forcing
// sub-iterations do not touch the global field.
struct Patch {
  int x0 = 0, y0 = 0, nx = 0, ny = 0;
  std::vector<double> ux, uy, rho;

  std::size_t at(int x, int y) const { return std::size_t(y - y0) * nx + (x - x0); }
};

Patch make_patch(std::span<const Vec2> markers, const lbm::MacroField& m) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (Vec2 p : markers) {
    (void)stencil(p, m.nx, m.ny);
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  Patch patch;
  patch.x0 = int(std::floor(xmin)) - 1;
  patch.y0 = int(std::floor(ymin)) - 1;
  patch.nx = int(std::floor(xmax)) + 3 - patch.x0;
  patch.ny = int(std::floor(ymax)) + 3 - patch.y0;
  const std::size_t n = std::size_t(patch.nx) * patch.ny;
  patch.ux.resize(n);
  patch.uy.resize(n);
  patch.rho.resize(n);
  for (int y = patch.y0; y < patch.y0 + patch.ny; ++y) {
    for (int x = patch.x0; x < patch.x0 + patch.nx; ++x) {
      const std::size_t k = m.index(x, y);
      const std::size_t j = patch.at(x, y);
      patch.ux[j] = m.ux[k];
      patch.uy[j] = m.uy[k];
      patch.rho[j] = m.rho[k];
    }
  }
  return patch;
}

}  // namespace

std::vector<Vec2> interpolate(std::span<const Vec2> markers, int nx, int ny,
                              std::span<const double> fx, std::span<const double> fy) {
  std::vector<Vec2> out(markers.size());
  for (std::size_t k = 0; k < markers.size(); ++k) {
    const Stencil s = stencil(markers[k], nx, ny);
    Vec2 u{};
    for (int b = 0; b < 4; ++b) {
      const std::size_t row = std::size_t(s.y0 + b) * nx + s.x0;
      for (int a = 0; a < 4; ++a) {
        const double w = s.wx[a] * s.wy[b];
        u.x += w * fx[row + a];
        u.y += w * fy[row + a];
      }
    }
    out[k] = u;
  }
  return out;
}

std::vector<Vec2> interpolate_velocity(std::span<const Vec2> markers, const lbm::MacroField& macro) {
  return interpolate(markers, macro.nx, macro.ny, macro.ux, macro.uy);
}

std::vector<double> interpolate_scalar(std::span<const Vec2> markers, int nx, int ny,
                                       std::span<const double> f) {
  std::vector<double> out(markers.size());
  for (std::size_t k = 0; k < markers.size(); ++k) {
    const Stencil s = stencil(markers[k], nx, ny);
    double v = 0.0;
    for (int b = 0; b < 4; ++b) {
      const std::size_t row = std::size_t(s.y0 + b) * nx + s.x0;
      for (int a = 0; a < 4; ++a) v += s.wx[a] * s.wy[b] * f[row + a];
    }
    out[k] = v;
  }
  return out;
}

void spread_force(std::span<const Vec2> markers, std::span<const Vec2> forces,
                  std::span<const double> weights, lbm::VectorField& g) {
  for (std::size_t k = 0; k < markers.size(); ++k) {
    const Stencil s = stencil(markers[k], g.nx, g.ny);
    const Vec2 f = forces[k] * weights[k];
    for (int b = 0; b < 4; ++b) {
      const std::size_t row = g.index(s.x0, s.y0 + b);
      for (int a = 0; a < 4; ++a) {
        const double w = s.wx[a] * s.wy[b];
        g.x[row + a] += w * f.x;
        g.y[row + a] += w * f.y;
      }
    }
  }
}

std::vector<Vec2> penalty_forcing(std::span<const Vec2> desired, std::span<const Vec2> interpolated,
                                  double rho, double dt) {
  if (desired.size() != interpolated.size())
    throw Error("penalty_forcing: marker arrays differ in length");
  std::vector<Vec2> f(desired.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = rho * (desired[k] - interpolated[k]) / dt;
  return f;
}

BodyLoads compute_loads(std::span<const Vec2> markers, std::span<const Vec2> forces,
                        std::span<const Vec2> velocities, std::span<const double> weights, Vec2 d) {
  BodyLoads l;
  for (std::size_t k = 0; k < markers.size(); ++k) {
    const Vec2 f = forces[k] * weights[k];
    l.force -= f;
    l.torque -= cross(markers[k] - d, f);
    l.power -= dot(f, velocities[k]);
  }
  return l;
}

RigidBody rigid_dynamics_step(RigidBody b, const BodyLoads& loads, double dt) {
  b.v += loads.force / b.mass * dt;
  b.d += b.v * dt;
  b.omega += loads.torque / b.inertia * dt;
  b.theta += b.omega * dt;
  return b;
}

// ---------------------------------------------------------------------------
// Geometry

std::vector<Vec2> midline_points(const fish::MidlineState& m) {
  std::vector<Vec2> q(m.arc.size());
  for (std::size_t k = 0; k < q.size(); ++k) q[k] = {-m.axial[k], m.lateral[k]};
  return q;
}

std::vector<Vec2> outline_polygon(std::span<const Vec2> mid, std::span<const double> w) {
  const std::size_t n = mid.size();
  std::vector<Vec2> upper(n), lower(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 a = mid[k == 0 ? 0 : k - 1];
    const Vec2 b = mid[k + 1 == n ? n - 1 : k + 1];
    Vec2 t = b - a;  // head -> tail
    t = t / norm(t);
    const Vec2 nrm{-t.y, t.x};
    upper[k] = mid[k] + w[k] * nrm;
    lower[k] = mid[k] - w[k] * nrm;
  }
  std::vector<Vec2> poly(upper.begin(), upper.end());
  // Head and tail stations are shared by both sides.
  for (std::size_t k = n - 2; k >= 1; --k) poly.push_back(lower[k]);
  return poly;
}

std::vector<double> polygon_weights(std::span<const Vec2> p) {
  const std::size_t n = p.size();
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 prev = p[(k + n - 1) % n];
    const Vec2 next = p[(k + 1) % n];
    w[k] = 0.5 * (norm(p[k] - prev) + norm(next - p[k]));
  }
  return w;
}

double polygon_area(std::span<const Vec2> p) {
  double a = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) a += cross(p[k], p[(k + 1) % p.size()]);
  return 0.5 * std::abs(a);
}

Vec2 polygon_centroid(std::span<const Vec2> p) {
  double a = 0.0;
  Vec2 c{};
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Vec2 p0 = p[k];
    const Vec2 p1 = p[(k + 1) % p.size()];
    const double cr = cross(p0, p1);
    a += cr;
    c += cr * (p0 + p1);
  }
  return c / (3.0 * a);
}

double polygon_polar_moment(std::span<const Vec2> p) {
  const Vec2 c = polygon_centroid(p);
  double a = 0.0, j = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Vec2 p0 = p[k] - c;
    const Vec2 p1 = p[(k + 1) % p.size()] - c;
    const double cr = cross(p0, p1);
    a += cr;
    j += cr * (dot(p0, p0) + dot(p0, p1) + dot(p1, p1));
  }
  return std::abs(j) / 12.0;
}

bool point_in_polygon(std::span<const Vec2> p, Vec2 q) {
  bool inside = false;
  for (std::size_t i = 0, j = p.size() - 1; i < p.size(); j = i++) {
    if ((p[i].y > q.y) != (p[j].y > q.y) &&
        q.x < (p[j].x - p[i].x) * (q.y - p[i].y) / (p[j].y - p[i].y) + p[i].x)
      inside = !inside;
  }
  return inside;
}

BodyFrame neutralize(const fish::BodyShape& shape, const fish::MidlineState& m,
                     const BodyFrame* previous) {
  BodyFrame f;
  f.midline = midline_points(m);
  const std::size_t n = f.midline.size();
  std::vector<double> w(n);
  f.mass.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = shape.width_at(m.arc[k]);
    const double dl = 0.5 * ((k + 1 < n ? m.arc[k + 1] : m.arc[k]) - (k > 0 ? m.arc[k - 1] : m.arc[k]));
    f.mass[k] = 2.0 * w[k] * dl;
  }
  double mt = 0.0;
  Vec2 c{};
  for (std::size_t k = 0; k < n; ++k) {
    mt += f.mass[k];
    c += f.mass[k] * f.midline[k];
  }
  c = c / mt;
  for (Vec2& q : f.midline) q -= c;

  if (previous != nullptr) {
    double sc = 0.0, sd = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      sc += f.mass[k] * cross(previous->midline[k], f.midline[k]);
      sd += f.mass[k] * dot(previous->midline[k], f.midline[k]);
    }
    const double alpha = std::atan2(-sc, sd);
    for (Vec2& q : f.midline) q = rotate(q, alpha);
    f.counter_rotation = alpha;  // absolute: Q is rotated from the raw frame
  }
  f.outline = outline_polygon(f.midline, w);
  return f;
}

Markers place_markers(const BodyFrame& frame, const RigidBody& b, const BodyFrame* next,
                      double dt) {
  Markers mk;
  const std::size_t n = frame.outline.size();
  mk.position.resize(n);
  mk.velocity.resize(n);
  mk.weight = polygon_weights(frame.outline);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 r = rotate(frame.outline[k], b.theta);
    mk.position[k] = b.d + r;
    Vec2 u = b.v + cross(b.omega, r);
    if (next != nullptr) u += rotate(next->outline[k] - frame.outline[k], b.theta) / dt;
    mk.velocity[k] = u;
  }
  return mk;
}

Markers build_markers(const fish::BodyShape& shape, const fish::MidlineState& m, Vec2 d,
                      double theta) {
  const BodyFrame f = neutralize(shape, m, nullptr);
  RigidBody b;
  b.d = d;
  b.theta = theta;
  return place_markers(f, b, nullptr);
}

// ---------------------------------------------------------------------------
// Coupling

ForcingResult direct_forcing(const Markers& mk, const lbm::MacroField& macro, lbm::VectorField& g,
                             int sub_iterations) {
  ForcingResult res;
  const std::size_t n = mk.position.size();
  res.force.assign(n, Vec2{});
  Patch patch = make_patch(mk.position, macro);
  std::vector<Stencil> st(n);
  for (std::size_t k = 0; k < n; ++k) st[k] = stencil(mk.position[k], macro.nx, macro.ny);

  auto interp = [&](std::size_t k, const std::vector<double>& f) {
    double v = 0.0;
    for (int b = 0; b < 4; ++b) {
      const std::size_t row = patch.at(st[k].x0, st[k].y0 + b);
      for (int a = 0; a < 4; ++a) v += st[k].wx[a] * st[k].wy[b] * f[row + a];
    }
    return v;
  };
  auto max_slip = [&] {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      s = std::max(s, norm(mk.velocity[k] - Vec2{interp(k, patch.ux), interp(k, patch.uy)}));
    return s;
  };

  std::vector<Vec2> f(n);
  for (int it = 0; it < sub_iterations; ++it) {
    for (std::size_t k = 0; k < n; ++k) {
      const Vec2 u{interp(k, patch.ux), interp(k, patch.uy)};
      if (it == 0) res.slip_before = std::max(res.slip_before, norm(mk.velocity[k] - u));
      f[k] = interp(k, patch.rho) * (mk.velocity[k] - u);
      res.force[k] += f[k];
    }
    for (std::size_t k = 0; k < n; ++k) {
      const Vec2 fk = f[k] * mk.weight[k];
      for (int b = 0; b < 4; ++b) {
        const std::size_t row = patch.at(st[k].x0, st[k].y0 + b);
        const std::size_t grow = g.index(st[k].x0, st[k].y0 + b);
        for (int a = 0; a < 4; ++a) {
          const double w = st[k].wx[a] * st[k].wy[b];
          patch.ux[row + a] += w * fk.x / patch.rho[row + a];
          patch.uy[row + a] += w * fk.y / patch.rho[row + a];
          g.x[grow + a] += w * fk.x;
          g.y[grow + a] += w * fk.y;
        }
      }
    }
  }
  res.slip_after = sub_iterations > 0 ? max_slip() : res.slip_before;
  return res;
}

Swimmer::Swimmer(const fish::BodyShape& shape, double wavelength, double period,
                 const CouplingConfig& coupling)
    : shape_(shape),
      arc_(shape.arc_stations()),
      undulation_(shape.length, wavelength, period),
      coupling_(coupling) {
  if (coupling.sub_iterations < 1) throw ConfigError("fsi.sub_iterations must be >= 1");
  if (!(coupling.density_ratio > 0.0)) throw ConfigError("fsi.density_ratio must be positive");
  if (!(coupling.added_mass >= 0.0)) throw ConfigError("fsi.added_mass must be >= 0");
  // Rest geometry fixes mass and inertia.
  std::vector<double> zero(arc_.size(), 0.0);
  const BodyFrame rest = neutralize(shape_, fish::integrate_midline(arc_, zero), nullptr);
  body_.mass = coupling.density_ratio * polygon_area(rest.outline);
  body_.inertia = coupling.density_ratio * polygon_polar_moment(rest.outline);
}

BodyFrame Swimmer::frame_at(double t, const BodyFrame* previous) const {
  return neutralize(shape_, undulation_.midline(t, arc_), previous);
}

void Swimmer::place(Vec2 tip, double theta) {
  undulation_ = fish::Undulation(shape_.length, undulation_.wavelength(), undulation_.period());
  time_ = 0.0;
  frame_ = frame_at(0.0, nullptr);
  const double mass = body_.mass;
  const double inertia = body_.inertia;
  body_ = RigidBody{};
  body_.mass = mass;
  body_.inertia = inertia;
  body_.theta = theta;
  body_.d = tip - rotate(frame_.midline.front(), theta);
  markers_ = place_markers(frame_, body_, nullptr);
  loads_ = {};
  accel_ = {};
  alpha_ = 0.0;
}

void Swimmer::begin_half_cycle(double theta_max) { undulation_.begin_half_cycle(theta_max); }

Vec2 Swimmer::tip() const { return body_.d + rotate(frame_.midline.front(), body_.theta); }

std::vector<Vec2> Swimmer::outline() const {
  std::vector<Vec2> out(frame_.outline.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = body_.d + rotate(frame_.outline[k], body_.theta);
  return out;
}

void Swimmer::tick(lbm::Solver& solver) {
  if (undulation_.half_cycles() == 0 || time_ + 1.0 > undulation_.current().t_end() + 1e-9)
    throw Error("Swimmer::tick past the end of the current half cycle");
  const BodyFrame next = frame_at(time_ + 1.0, &frame_);
  markers_ = place_markers(frame_, body_, &next);

  lbm::VectorField& g = solver.force();
  const ForcingResult fr = direct_forcing(markers_, solver.macro(), g, coupling_.sub_iterations);
  slip_before_ = fr.slip_before;
  slip_after_ = fr.slip_after;

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (Vec2 p : markers_.position) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int x0 = int(std::floor(xmin)) - 1, x1 = int(std::floor(xmax)) + 3;
  const int y0 = int(std::floor(ymin)) - 1, y1 = int(std::floor(ymax)) + 3;
  solver.step_with_local_force(x0, x1, y0, y1);
  for (int y = std::max(0, y0); y < std::min(y1, g.ny); ++y)
    for (int x = std::max(0, x0); x < std::min(x1, g.nx); ++x) {
      g.x[g.index(x, y)] = 0.0;
      g.y[g.index(x, y)] = 0.0;
    }
  solver.update_macro();

  loads_ = compute_loads(markers_.position, fr.force, markers_.velocity, markers_.weight, body_.d);
  BodyLoads dyn = loads_;
  // Stabilized explicit update; rigid_dynamics_step with effective loads.
  const double ma = coupling_.added_mass;
  const Vec2 accel = (dyn.force + ma * body_.mass * accel_) / ((1.0 + ma) * body_.mass);
  const double alpha = (dyn.torque + ma * body_.inertia * alpha_) / ((1.0 + ma) * body_.inertia);
  accel_ = accel;
  alpha_ = alpha;
  dyn.force = accel * body_.mass;
  dyn.torque = alpha * body_.inertia;
  body_ = rigid_dynamics_step(body_, dyn);
  frame_ = next;
  time_ += 1.0;
}

}  // namespace vortexswim::fsi
