#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vortexswim/common.hpp"
#include "vortexswim/ibm.hpp"
#include "vortexswim/lbm.hpp"

// Navigation task: the swimmer starts in a Kármán street behind a cylinder
// and must bring its head tip to a target. Positions in the task are in body
// lengths relative to the cylinder centre; the flow travels towards +x.
namespace vortexswim::env {

inline constexpr int kObsDim = 6;      // x, y, theta, u_bar_x, u_bar_y, omega_bar
inline constexpr int kHistory = 9;     // observations per window
inline constexpr int kStateDim = kObsDim * kHistory + 1;  // + previous action

struct Observation {
  double x = 0, y = 0, theta = 0, u_bar_x = 0, u_bar_y = 0, omega_bar = 0;
  std::array<double, kObsDim> array() const { return {x, y, theta, u_bar_x, u_bar_y, omega_bar}; }
  friend bool operator==(const Observation&, const Observation&) = default;
};

// s_t, s_{t-1}, ..., s_{t-8} flattened (newest first), then the previous
// action index mapped to [-1, 1].
using StateWindow = std::array<double, kStateDim>;

struct EnvConfig {
  // Geometry, in body lengths unless noted.
  int cells_per_length = 40;          // L in cells
  double cylinder_diameter = 1.0;
  double margin_upstream = 1.0;       // grid beyond the box on the inlet side
  double margin_downstream = 1.0;
  double margin_side = 0.5;
  Rect omega{-1.0, 9.0, -2.0, 2.0};
  Vec2 target{6.0, 1.0};
  double init_x_min = 3.0;
  double init_x_max = 5.0;
  double init_y_min = 0.0;
  double init_y_max = 0.0;
  double capture_radius = 0.1;
  int max_steps = 450;
  std::vector<double> actions{-0.5, -0.25, 0.0, 0.25, 0.5};
  double amplitude_cap = 0.5;

  // Flow, lattice units.
  double u_in = 0.05;
  double reynolds = 200.0;  // based on the cylinder diameter
  double tau = 0.0;         // relaxation time; > 0 overrides the Reynolds number
  int inlet_ramp = 2000;
  int spinup_ticks = 20000;

  // Swimmer.
  double wavelength = 1.0;  // body lengths
  double period = 0.0;      // ticks; 0 means 0.5 L / u_in
  int stations = 0;         // midline stations; 0 means L + 1
  fsi::CouplingConfig coupling;

  std::optional<std::filesystem::path> warm_start;  // VSWF1 file

  int period_ticks() const;
  int half_period_ticks() const { return period_ticks() / 2; }
  lbm::FlowConfig flow() const;
  // Cell coordinates of the cylinder centre.
  Vec2 cylinder_cell() const;
  Vec2 to_cells(Vec2 p) const;
  Vec2 to_lengths(Vec2 cells) const;
  int zero_action() const;
  // Throws ConfigError for an inconsistent setup.
  void validate() const;
};

enum class Outcome { Running, Captured, Exited, Timeout, Diverged };
std::string to_string(Outcome o);

// Reward for a head-tip position (body lengths): -100 outside omega, else
// minus the distance to the target.
double reward(Vec2 tip, const EnvConfig& cfg);
double distance_to_target(Vec2 tip, const EnvConfig& cfg);

// Observation from the tip position, heading and the change of centre of
// mass and heading over the last half cycle (already in body lengths).
Observation observe(Vec2 tip, double theta, Vec2 com_shift, double heading_shift, const EnvConfig& cfg);

double normalize_action(int index, int count);
StateWindow fill_window(const Observation& o, int action_index, int action_count);
StateWindow shift_window(const StateWindow& w, const Observation& o, int action_index, int action_count);

struct StepResult {
  StateWindow state{};
  double reward = 0.0;
  bool done = false;
  Outcome outcome = Outcome::Running;
};

struct TrajectoryRow {
  int control_step = 0;
  std::int64_t t_ticks = 0;
  double x_tip = 0, y_tip = 0, theta = 0;
  double u_bar_x = 0, u_bar_y = 0, omega_bar = 0;
  int action_index = -1;
  double reward = 0.0;
  bool done = false;
};

void write_trajectory_csv(const std::filesystem::path& path, std::span<const TrajectoryRow> rows);

// Interface shared with test surrogates.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int action_count() const = 0;
  virtual StateWindow reset(std::uint64_t seed) = 0;
  virtual StepResult step(int action) = 0;
};

class FishEnv : public Environment {
 public:
  explicit FishEnv(const EnvConfig& cfg);

  const EnvConfig& config() const { return cfg_; }
  int action_count() const override { return int(cfg_.actions.size()); }

  // Restores the shedding flow, places the fish at a random point of the
  // init region heading upstream.
  StateWindow reset(std::uint64_t seed) override;
  // Same, at a given start point (body lengths).
  StateWindow reset_at(Vec2 tip);
  StepResult step(int action) override;

  const std::vector<TrajectoryRow>& trajectory() const { return trajectory_; }
  const lbm::Solver& solver() const { return *solver_; }
  const fsi::Swimmer& swimmer() const { return *swimmer_; }
  Vec2 tip() const;  // body lengths
  int steps() const { return steps_; }
  Outcome outcome() const { return outcome_; }
  std::span<const double> warm_populations() const { return warm_; }
  std::int64_t warm_tick() const { return warm_tick_; }

  // Runs the cylinder flow from rest for `ticks`; returns the solver.
  static std::unique_ptr<lbm::Solver> spin_up(const EnvConfig& cfg, int ticks);

  // Called after every coupled tick inside step(), e.g. for field output.
  std::function<void(const FishEnv&)> on_tick;

 private:
  bool fish_outside() const;
  StateWindow start(Vec2 tip);

  EnvConfig cfg_;
  std::unique_ptr<lbm::Solver> solver_;
  std::unique_ptr<fsi::Swimmer> swimmer_;
  std::vector<double> warm_;
  std::int64_t warm_tick_ = 0;
  StateWindow window_{};
  int steps_ = 0;
  int last_action_ = 0;
  Outcome outcome_ = Outcome::Running;
  std::vector<TrajectoryRow> trajectory_;
};

}  // namespace vortexswim::env
