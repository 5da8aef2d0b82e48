#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vortexswim/common.hpp"

// Uniform-grid D2Q9 lattice Boltzmann solver: BGK collision with Guo body
// forcing, pull streaming into a second buffer, and a small set of domain
// boundary conditions. Lattice units throughout (dx = dt = 1).
namespace vortexswim::lbm {

// D2Q9 velocity set, ordered rest, E, N, W, S, NE, NW, SW, SE.
struct Lattice {
  static constexpr int Q = 9;
  static constexpr std::array<int, Q> cx{0, 1, 0, -1, 0, 1, -1, -1, 1};
  static constexpr std::array<int, Q> cy{0, 0, 1, 0, -1, 1, 1, -1, -1};
  // Weights as exact rationals over kWeightDenominator.
  static constexpr std::array<int, Q> weight_numerator{16, 4, 4, 4, 4, 1, 1, 1, 1};
  static constexpr int kWeightDenominator = 36;
  static constexpr std::array<double, Q> w{
      4.0 / 9.0,  1.0 / 9.0,  1.0 / 9.0,  1.0 / 9.0, 1.0 / 9.0,
      1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0};
  static constexpr std::array<int, Q> opposite{0, 3, 4, 1, 2, 7, 8, 5, 6};
  // c_s^2 = 1/3 as a rational.
  static constexpr int kCs2Numerator = 1;
  static constexpr int kCs2Denominator = 3;
  static constexpr double cs2 = 1.0 / 3.0;
};

using Populations = std::array<double, Lattice::Q>;

// Second-order BGK equilibrium.
Populations equilibrium(double rho, Vec2 u);

enum class Boundary {
  Periodic,
  VelocityInlet,  // west side only: non-equilibrium bounce-back at u_in
  Outflow,        // east side only: zero-gradient extrapolation
  FreeSlip,       // north/south: specular reflection
  NoSlip,         // north/south: half-way bounce-back
};

struct FlowConfig {
  int nx = 0;
  int ny = 0;
  double u_in = 0.05;
  double reynolds = 200.0;
  // Cylinder diameter in cells; zero disables the cylinder.
  double diameter = 0.0;
  Vec2 cylinder_center{};
  // Relaxation time used instead of the Reynolds-derived one when > 0.
  double tau_override = 0.0;
  // Inlet speed is raised smoothly from zero over this many ticks; an
  // impulsive start excites long-lived acoustic modes between the walls.
  int inlet_ramp = 0;
  Boundary west = Boundary::VelocityInlet;
  Boundary east = Boundary::Outflow;
  Boundary north = Boundary::FreeSlip;
  Boundary south = Boundary::FreeSlip;

  bool has_cylinder() const { return diameter > 0.0; }
  // tau = 3 U D / Re + 1/2 unless overridden.
  double tau() const;
  double viscosity() const { return Lattice::cs2 * (tau() - 0.5); }
  double inlet_speed(std::int64_t tick) const;
  // Throws ConfigError on tau <= 1/2, bad sizes, or a cylinder that
  // touches the domain edge.
  void validate() const;
};

// Per-cell 2-vector field, row-major (index = y * nx + x).
struct VectorField {
  int nx = 0;
  int ny = 0;
  std::vector<double> x;
  std::vector<double> y;

  VectorField() = default;
  VectorField(int nx_, int ny_)
      : nx(nx_), ny(ny_), x(std::size_t(nx_) * ny_, 0.0), y(std::size_t(nx_) * ny_, 0.0) {}
  std::size_t index(int i, int j) const { return std::size_t(j) * nx + i; }
  void clear();
};

struct MacroField {
  int nx = 0;
  int ny = 0;
  std::vector<double> rho;
  std::vector<double> ux;
  std::vector<double> uy;
  std::vector<double> p;
  std::vector<double> gx;
  std::vector<double> gy;

  MacroField() = default;
  MacroField(int nx_, int ny_);
  std::size_t index(int i, int j) const { return std::size_t(j) * nx + i; }
  Vec2 velocity(int i, int j) const { return {ux[index(i, j)], uy[index(i, j)]}; }
};

// Populations stored as nine row-major planes, plus the post-collision
// buffer that streaming reads from.
class DistributionField {
 public:
  DistributionField() = default;
  DistributionField(int nx, int ny, double tau);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t cells() const { return std::size_t(nx_) * ny_; }
  double tau() const { return tau_; }
  std::int64_t tick() const { return tick_; }
  void set_tick(std::int64_t t) { tick_ = t; }

  std::size_t index(int x, int y) const { return std::size_t(y) * nx_ + x; }
  double& f(int q, int x, int y) { return f_[q * cells() + index(x, y)]; }
  double f(int q, int x, int y) const { return f_[q * cells() + index(x, y)]; }
  std::span<double> plane(int q) { return {f_.data() + q * cells(), cells()}; }
  std::span<const double> plane(int q) const { return {f_.data() + q * cells(), cells()}; }
  std::span<double> post_plane(int q) { return {post_.data() + q * cells(), cells()}; }
  std::span<const double> post_plane(int q) const {
    return {post_.data() + q * cells(), cells()};
  }
  std::span<const double> data() const { return f_; }
  std::span<double> data() { return f_; }

  Populations cell(int x, int y) const;
  void set_cell(int x, int y, const Populations& pop);
  void fill_equilibrium(double rho, Vec2 u);

 private:
  friend void collide_rows(DistributionField&, const MacroField&, int, int);
  friend void stream_rows(DistributionField&, int, int);

  int nx_ = 0;
  int ny_ = 0;
  double tau_ = 1.0;
  std::int64_t tick_ = 0;
  std::vector<double> f_;
  std::vector<double> post_;
};

// rho = sum f, p = rho cs^2, u = (sum f c + dt g / 2) / rho. `force` may be
// null for g = 0. Throws DivergedError on rho <= 0 or non-finite rho.
void macroscopics(const DistributionField& field, const VectorField* force, MacroField& out);
MacroField macroscopics(const DistributionField& field, const VectorField* force);
// Row-range form for data-parallel callers; rows [y_begin, y_end).
void macroscopics_rows(const DistributionField& field, const VectorField* force,
                       MacroField& out, int y_begin, int y_end);

// BGK collision with the Guo source term into the post-collision buffer.
void collide_rows(DistributionField& field, const MacroField& macro, int y_begin, int y_end);
// Pull streaming from the post-collision buffer, periodic wrap on both axes.
// Boundary conditions overwrite the wrapped values afterwards.
void stream_rows(DistributionField& field, int y_begin, int y_end);

// One collision + streaming tick. Throws DivergedError if any
// post-collision population is non-finite. Advances field.tick().
void collide_and_stream(DistributionField& field, const MacroField& macro);

// Precomputed boundary data (solid mask, bounce-back links) for one config.
class Boundaries {
 public:
  Boundaries() = default;
  explicit Boundaries(const FlowConfig& cfg);

  // Must be called once per tick, after streaming.
  void apply(DistributionField& field) const;

  bool is_solid(int x, int y) const { return solid_[std::size_t(y) * nx_ + x] != 0; }
  const std::vector<std::uint8_t>& solid_mask() const { return solid_; }
  // Force exerted by the fluid on the obstacle during the last streaming
  // step (momentum exchange over bounce-back links).
  Vec2 obstacle_force(const DistributionField& field) const;

 private:
  struct Link {
    std::uint32_t cell;
    std::uint8_t dir;  // post-collision direction pointing into the solid
  };
  FlowConfig cfg_;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::uint8_t> solid_;
  std::vector<std::uint32_t> solid_cells_;
  std::vector<Link> links_;
};

inline void apply_boundaries(DistributionField& field, const Boundaries& b) { b.apply(field); }

// Central-difference z-vorticity; the outer ring copies its nearest
// interior neighbour.
std::vector<double> vorticity(const MacroField& macro);

// Flow solver owning the field, boundaries, macroscopic state and the body
// force applied in the next tick.
class Solver {
 public:
  explicit Solver(const FlowConfig& cfg);

  const FlowConfig& config() const { return cfg_; }
  const Boundaries& boundaries() const { return boundaries_; }
  DistributionField& field() { return field_; }
  const DistributionField& field() const { return field_; }
  const MacroField& macro() const { return macro_; }
  VectorField& force() { return force_; }
  std::int64_t tick() const { return field_.tick(); }

  void initialize_uniform(double rho, Vec2 u);
  // Replaces the populations (e.g. from a warm-start file).
  void load_populations(std::span<const double> populations, std::int64_t tick);

  // Recomputes macro() from the current populations with g = 0.
  void update_macro();
  // Full tick using force(): macroscopics, collision, streaming, boundaries.
  void step();
  // Tick that reuses macro() (which must hold the g = 0 moments of the
  // current populations) and adds the half-force correction only inside the
  // cell box [x0, x1) x [y0, y1) where force() may be nonzero.
  void step_with_local_force(int x0, int x1, int y0, int y1);

  Vec2 obstacle_force() const { return boundaries_.obstacle_force(field_); }

 private:
  void finish_tick();

  FlowConfig cfg_;
  DistributionField field_;
  Boundaries boundaries_;
  MacroField macro_;
  VectorField force_;
};

}  // namespace vortexswim::lbm
