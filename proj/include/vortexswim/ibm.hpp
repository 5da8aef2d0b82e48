#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vortexswim/common.hpp"
#include "vortexswim/fish.hpp"
#include "vortexswim/lbm.hpp"

// Diffusive immersed-boundary coupling between a deforming swimmer and the
// lattice, and the swimmer's rigid-body dynamics. Grid cells sit at integer
// coordinates with unit spacing; Lagrangian markers anywhere in between.
namespace vortexswim::fsi {

// A marker came within reach of the domain edge.
class MarkerEscapeError : public Error {
 public:
  using Error::Error;
};

// 4-point regularized delta (Peskin). Support |r| < 2, sums to one over any
// integer-shifted stencil and reproduces linear fields.
double kernel(double r);

inline constexpr int kKernelReach = 2;

// u(X) = sum_cells u phi(x - X) phi(y - Y). Throws MarkerEscapeError for a
// marker closer than the kernel reach to the edge.
std::vector<Vec2> interpolate_velocity(std::span<const Vec2> markers, const lbm::MacroField& macro);
std::vector<Vec2> interpolate(std::span<const Vec2> markers, int nx, int ny,
                              std::span<const double> fx, std::span<const double> fy);
std::vector<double> interpolate_scalar(std::span<const Vec2> markers, int nx, int ny,
                                       std::span<const double> f);

// g(x) += sum_k F_k phi(x - X_k) ds_k.
void spread_force(std::span<const Vec2> markers, std::span<const Vec2> forces,
                  std::span<const double> weights, lbm::VectorField& g);

// Direct forcing F_k = rho (U_desired - U_interp) / dt.
std::vector<Vec2> penalty_forcing(std::span<const Vec2> desired, std::span<const Vec2> interpolated,
                                  double rho = 1.0, double dt = 1.0);

struct BodyLoads {
  Vec2 force{};
  double torque = 0.0;
  double power = 0.0;
};

// Reaction of the Lagrangian forcing on the body:
// F = -sum F_k ds_k, M = -sum (X_k - d) x F_k ds_k, P = -sum F_k . U_k ds_k.
BodyLoads compute_loads(std::span<const Vec2> markers, std::span<const Vec2> forces,
                        std::span<const Vec2> velocities, std::span<const double> weights, Vec2 d);

struct RigidBody {
  Vec2 d{};             // centre of mass (cells)
  double theta = 0.0;   // orientation; the head points along (cos theta, sin theta)
  Vec2 v{};
  double omega = 0.0;
  double mass = 1.0;
  double inertia = 1.0;
};

// Symplectic Euler: v += F/m dt, d += v dt, omega += M/I dt, theta += omega dt.
RigidBody rigid_dynamics_step(RigidBody body, const BodyLoads& loads, double dt = 1.0);

// Body-frame geometry of the deformed swimmer, re-centred and counter-rotated
// so that the deformation carries no linear or angular momentum.
struct BodyFrame {
  std::vector<Vec2> midline;    // stations, head first
  std::vector<double> mass;     // station mass weights, proportional to 2 w dl
  std::vector<Vec2> outline;    // closed polygon, upper side head->tail then lower side back
  double counter_rotation = 0.0;  // rotation applied to the raw midline
};

struct Markers {
  std::vector<Vec2> position;
  std::vector<Vec2> velocity;  // desired
  std::vector<double> weight;  // arc-length share of the outline perimeter
};

// Outline around a midline given in the body frame (head at l = 0 pointing
// to +x): stations offset by +-w(l) along the local normal. Head and tail
// stations appear once.
std::vector<Vec2> outline_polygon(std::span<const Vec2> midline, std::span<const double> half_widths);
std::vector<double> polygon_weights(std::span<const Vec2> polygon);
double polygon_area(std::span<const Vec2> polygon);
// Second moment of area about the centroid.
double polygon_polar_moment(std::span<const Vec2> polygon);
Vec2 polygon_centroid(std::span<const Vec2> polygon);
bool point_in_polygon(std::span<const Vec2> polygon, Vec2 p);

// Body-frame points of a midline: x = -axial, y = lateral.
std::vector<Vec2> midline_points(const fish::MidlineState& m);

// Re-centres on the mass-weighted centroid and rotates by the angle that
// zeroes sum m Q_prev x Q (exactly). Without `previous` only re-centres.
BodyFrame neutralize(const fish::BodyShape& shape, const fish::MidlineState& m,
                     const BodyFrame* previous);

// Global markers at d + R(theta) Q for the outline Q. Without deformation
// velocities the desired velocities are rigid.
Markers build_markers(const fish::BodyShape& shape, const fish::MidlineState& m, Vec2 d,
                      double theta);
Markers place_markers(const BodyFrame& frame, const RigidBody& body,
                      const BodyFrame* next_frame, double dt = 1.0);

struct CouplingConfig {
  int sub_iterations = 3;
  double density_ratio = 1.0;
  // Artificial added mass (multiple of the body mass and inertia) for the
  // explicit update (m + m_a) a_{n+1} = F_n + m_a a_n. Same steady dynamics,
  // but damps the lagged reaction of the fluid dragged along by the kernel.
  double added_mass = 4.0;
};

// A self-propelled undulating swimmer coupled to a flow solver.
class Swimmer {
 public:
  Swimmer(const fish::BodyShape& shape, double wavelength, double period,
          const CouplingConfig& coupling);

  // Places the swimmer with its head tip at `tip`, heading `theta`, at rest,
  // with a straight midline and no half cycle scheduled.
  void place(Vec2 tip, double theta);
  // Starts the next half cycle with the given signed amplitude.
  void begin_half_cycle(double theta_max);

  // One explicit coupling tick: kinematics, forcing, flow tick, loads, body
  // update. The solver's macro() must hold the current g = 0 moments on entry
  // and does again on exit.
  void tick(lbm::Solver& solver);

  const RigidBody& body() const { return body_; }
  RigidBody& body() { return body_; }
  const Markers& markers() const { return markers_; }
  const BodyLoads& loads() const { return loads_; }
  const fish::Undulation& undulation() const { return undulation_; }
  const fish::BodyShape& shape() const { return shape_; }
  const BodyFrame& frame() const { return frame_; }
  double time() const { return time_; }
  // Head tip (midline station 0) in grid coordinates.
  Vec2 tip() const;
  // Orientation of the deformed body: rigid angle plus the neutralizing
  // counter-rotation of the body frame.
  double heading() const { return body_.theta + frame_.counter_rotation; }
  // Outline in grid coordinates.
  std::vector<Vec2> outline() const;
  // Max slip |U_desired - U_interp| over markers before and after the
  // forcing sub-iterations of the last tick.
  double slip_before() const { return slip_before_; }
  double slip_after() const { return slip_after_; }
  // Body momentum including the added-mass filter state, m v + m_a m a:
  // with the stabilized update this (plus the fluid momentum) is what the
  // coupling conserves exactly.
  Vec2 coupled_momentum() const {
    return body_.mass * body_.v + coupling_.added_mass * body_.mass * accel_;
  }

 private:
  BodyFrame frame_at(double t, const BodyFrame* previous) const;

  fish::BodyShape shape_;
  std::vector<double> arc_;
  fish::Undulation undulation_;
  CouplingConfig coupling_;
  RigidBody body_;
  BodyFrame frame_;
  Markers markers_;
  BodyLoads loads_;
  double time_ = 0.0;
  double slip_before_ = 0.0;
  double slip_after_ = 0.0;
  Vec2 accel_{};
  double alpha_ = 0.0;
};

// Runs the direct-forcing loop for one tick on a copy of the velocity field
// and returns the accumulated marker forces; spreads them into g.
struct ForcingResult {
  std::vector<Vec2> force;     // summed over sub-iterations
  double slip_before = 0.0;    // max |U - u| before forcing
  double slip_after = 0.0;     // max |U - u| after the last sub-iteration
};
ForcingResult direct_forcing(const Markers& markers, const lbm::MacroField& macro,
                             lbm::VectorField& g, int sub_iterations);

}  // namespace vortexswim::fsi
