#include "vortexswim/env.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "vortexswim/io.hpp"

namespace vortexswim::env {

namespace {

Vec2 grid_origin(const EnvConfig& c) {
  return {c.omega.x_min - c.margin_upstream, c.omega.y_min - c.margin_side};
}

int grid_cells(double lengths, int per_length) { return int(std::lround(lengths * per_length)); }

}  // namespace

int EnvConfig::period_ticks() const {
  if (period > 0.0) return 2 * int(std::lround(period / 2.0));
  return 2 * int(std::lround(0.25 * cells_per_length / u_in));
}

lbm::FlowConfig EnvConfig::flow() const {
  lbm::FlowConfig f;
  f.nx = grid_cells(omega.x_max - omega.x_min + margin_upstream + margin_downstream, cells_per_length);
  f.ny = grid_cells(omega.y_max - omega.y_min + 2.0 * margin_side, cells_per_length);
  f.u_in = u_in;
  f.reynolds = reynolds;
  f.diameter = cylinder_diameter * cells_per_length;
  f.cylinder_center = cylinder_cell();
  f.inlet_ramp = inlet_ramp;
  f.tau_override = tau;
  return f;
}

Vec2 EnvConfig::to_cells(Vec2 p) const { return (p - grid_origin(*this)) * double(cells_per_length); }
Vec2 EnvConfig::to_lengths(Vec2 c) const { return c / double(cells_per_length) + grid_origin(*this); }
Vec2 EnvConfig::cylinder_cell() const { return to_cells({0.0, 0.0}); }

int EnvConfig::zero_action() const {
  int best = 0;
  for (int i = 1; i < int(actions.size()); ++i)
    if (std::abs(actions[i]) < std::abs(actions[best])) best = i;
  return best;
}

void EnvConfig::validate() const {
  if (cells_per_length < 8) throw ConfigError("grid.cells_per_length must be >= 8");
  if (!(omega.x_min < omega.x_max && omega.y_min < omega.y_max))
    throw ConfigError("env.omega is empty");
  if (!omega.contains(target)) throw ConfigError("env.target lies outside omega");
  if (!(capture_radius > 0.0)) throw ConfigError("env.capture_radius must be positive");
  if (max_steps < 1) throw ConfigError("env.max_steps must be >= 1");
  if (init_x_min > init_x_max || init_y_min > init_y_max)
    throw ConfigError("env.init region is empty");
  if (!omega.contains({init_x_min, init_y_min}) || !omega.contains({init_x_max, init_y_max}))
    throw ConfigError("env.init region lies outside omega");
  if (actions.size() < 2) throw ConfigError("env.actions needs at least two values");
  for (double a : actions)
    if (!(std::abs(a) <= amplitude_cap)) throw ConfigError("env.actions exceed the amplitude cap");
  if (margin_upstream < cylinder_diameter || margin_side < 0.0 || margin_downstream < 0.0)
    throw ConfigError("grid margins too small");
  if (-0.5 * cylinder_diameter < omega.y_min || 0.5 * cylinder_diameter > omega.y_max)
    throw ConfigError("cylinder does not fit in omega");
  if (!(wavelength > 0.0)) throw ConfigError("fish.wavelength must be positive");
  if (period_ticks() < 4) throw ConfigError("fish.period too short");
  if (spinup_ticks < 0) throw ConfigError("flow.spinup_ticks must be >= 0");
  flow().validate();
  // BGK with a near-inviscid tau blows up long before 1/2 at these speeds.
  if (flow().tau() < 0.505)
    throw ConfigError("relaxation time " + std::to_string(flow().tau()) +
                      " is below the 0.505 stability floor; lower flow.reynolds or raise the resolution");
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Running: return "running";
    case Outcome::Captured: return "captured";
    case Outcome::Exited: return "washed_away";
    case Outcome::Timeout: return "timeout";
    case Outcome::Diverged: return "diverged";
  }
  return "unknown";
}

double distance_to_target(Vec2 tip, const EnvConfig& cfg) { return norm(tip - cfg.target); }

double reward(Vec2 tip, const EnvConfig& cfg) {
  if (!cfg.omega.contains(tip)) return -100.0;
  return -distance_to_target(tip, cfg);
}

Observation observe(Vec2 tip, double theta, Vec2 com_shift, double heading_shift,
                    const EnvConfig& cfg) {
  return {tip.x - cfg.target.x, tip.y - cfg.target.y, theta, com_shift.x, com_shift.y,
          heading_shift};
}

double normalize_action(int index, int count) {
  return count > 1 ? 2.0 * index / (count - 1) - 1.0 : 0.0;
}

StateWindow fill_window(const Observation& o, int action_index, int action_count) {
  StateWindow w{};
  const auto a = o.array();
  for (int k = 0; k < kHistory; ++k)
    for (int j = 0; j < kObsDim; ++j) w[k * kObsDim + j] = a[j];
  w[kStateDim - 1] = normalize_action(action_index, action_count);
  return w;
}

StateWindow shift_window(const StateWindow& w, const Observation& o, int action_index,
                         int action_count) {
  StateWindow out{};
  const auto a = o.array();
  for (int j = 0; j < kObsDim; ++j) out[j] = a[j];
  for (int i = kObsDim; i < kObsDim * kHistory; ++i) out[i] = w[i - kObsDim];
  out[kStateDim - 1] = normalize_action(action_index, action_count);
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, std::span<const TrajectoryRow> rows) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "control_step,t_ticks,x_tip,y_tip,theta,u_bar_x,u_bar_y,omega_bar,action_index,reward,done\n";
  for (const auto& r : rows) {
    os << r.control_step << ',' << r.t_ticks << ',' << r.x_tip << ',' << r.y_tip << ',' << r.theta
       << ',' << r.u_bar_x << ',' << r.u_bar_y << ',' << r.omega_bar << ',' << r.action_index
       << ',' << r.reward << ',' << (r.done ? 1 : 0) << '\n';
  }
  io::write_text_atomic(path, os.str());
}

std::unique_ptr<lbm::Solver> FishEnv::spin_up(const EnvConfig& cfg, int ticks) {
  auto solver = std::make_unique<lbm::Solver>(cfg.flow());
  solver->initialize_uniform(1.0, {0.0, 0.0});
  // A small antisymmetric kick behind the cylinder so shedding starts
  // without waiting for round-off to break the symmetry.
  const auto& fc = solver->config();
  auto& field = solver->field();
  const double r = 0.5 * fc.diameter;
  for (int y = 0; y < fc.ny; ++y) {
    for (int x = 0; x < fc.nx; ++x) {
      const double dx = x - fc.cylinder_center.x;
      const double dy = y - fc.cylinder_center.y;
      if (dx > r && dx < 4 * r && std::abs(dy) < 2 * r && !solver->boundaries().is_solid(x, y))
        field.set_cell(x, y, lbm::equilibrium(1.0, {0.0, 0.02 * cfg.u_in}));
    }
  }
  solver->update_macro();
  solver->force().clear();
  for (int t = 0; t < ticks; ++t) solver->step();
  solver->update_macro();
  return solver;
}

FishEnv::FishEnv(const EnvConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.warm_start) {
    auto file = io::read_populations(*cfg_.warm_start);
    const auto fc = cfg_.flow();
    if (int(file.nx) != fc.nx || int(file.ny) != fc.ny)
      throw ConfigError("warm-start file grid " + std::to_string(file.nx) + "x" +
                        std::to_string(file.ny) + " does not match the config grid " +
                        std::to_string(fc.nx) + "x" + std::to_string(fc.ny));
    if (std::abs(file.tau - fc.tau()) > 1e-12)
      throw ConfigError("warm-start file was produced with a different relaxation time");
    solver_ = std::make_unique<lbm::Solver>(fc);
    warm_ = std::move(file.populations);
    warm_tick_ = std::int64_t(file.tick);
  } else {
    solver_ = spin_up(cfg_, cfg_.spinup_ticks);
    const auto d = solver_->field().data();
    warm_.assign(d.begin(), d.end());
    warm_tick_ = solver_->tick();
  }
  fish::BodyShape shape;
  shape.length = cfg_.cells_per_length;
  shape.stations = cfg_.stations > 0 ? cfg_.stations : cfg_.cells_per_length + 1;
  swimmer_ = std::make_unique<fsi::Swimmer>(shape, cfg_.wavelength, double(cfg_.period_ticks()),
                                            cfg_.coupling);
}

Vec2 FishEnv::tip() const { return cfg_.to_lengths(swimmer_->tip()); }

StateWindow FishEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  const double x = cfg_.init_x_min + (cfg_.init_x_max - cfg_.init_x_min) * ux(rng);
  const double y = cfg_.init_y_min + (cfg_.init_y_max - cfg_.init_y_min) * ux(rng);
  return start({x, y});
}

StateWindow FishEnv::reset_at(Vec2 p) {
  if (!cfg_.omega.contains(p)) throw ConfigError("initial position lies outside omega");
  return start(p);
}

StateWindow FishEnv::start(Vec2 p) {
  solver_->load_populations(warm_, warm_tick_);
  solver_->force().clear();
  swimmer_->place(cfg_.to_cells(p), kPi);
  steps_ = 0;
  last_action_ = cfg_.zero_action();
  outcome_ = Outcome::Running;
  const Vec2 t = tip();
  const Observation o = observe(t, swimmer_->heading(), {}, 0.0, cfg_);
  window_ = fill_window(o, last_action_, action_count());
  trajectory_.clear();
  trajectory_.push_back({0, 0, t.x, t.y, o.theta, 0, 0, 0, -1, 0.0, false});
  return window_;
}

bool FishEnv::fish_outside() const {
  if (!cfg_.omega.contains(tip())) return true;
  const Vec2 c = cfg_.cylinder_cell();
  const double r = 0.5 * cfg_.cylinder_diameter * cfg_.cells_per_length;
  for (const Vec2& m : swimmer_->markers().position)
    if (norm(m - c) < r) return true;
  return false;
}

StepResult FishEnv::step(int action) {
  if (action < 0 || action >= action_count())
    throw std::out_of_range("action index " + std::to_string(action) + " out of range [0, " +
                            std::to_string(action_count()) + ")");
  if (outcome_ != Outcome::Running) throw std::logic_error("step() on a finished episode; call reset()");

  StepResult res;
  if (distance_to_target(tip(), cfg_) <= cfg_.capture_radius) {
    outcome_ = Outcome::Captured;
    res.state = window_;
    res.done = true;
    res.outcome = outcome_;
    return res;
  }

  const Vec2 com0 = swimmer_->body().d;
  const double heading0 = swimmer_->heading();
  swimmer_->begin_half_cycle(cfg_.actions[action]);
  bool left = false;
  try {
    for (int t = 0; t < cfg_.half_period_ticks(); ++t) {
      swimmer_->tick(*solver_);
      if (on_tick) on_tick(*this);
      if (fish_outside()) {
        left = true;
        break;
      }
    }
  } catch (const DivergedError&) {
    outcome_ = Outcome::Diverged;
  } catch (const fsi::MarkerEscapeError&) {
    left = true;
  }
  ++steps_;
  last_action_ = action;

  const Vec2 t = tip();
  const double len = cfg_.cells_per_length;
  Observation o;
  if (outcome_ == Outcome::Diverged) {
    // The state is meaningless after a blow-up; keep the last one.
    o.x = window_[0]; o.y = window_[1]; o.theta = window_[2];
  } else {
    o = observe(t, swimmer_->heading(), (swimmer_->body().d - com0) / len,
                swimmer_->heading() - heading0, cfg_);
  }
  window_ = shift_window(window_, o, action, action_count());

  if (outcome_ == Outcome::Diverged || left) {
    if (left) outcome_ = Outcome::Exited;
    res.reward = -100.0;
  } else {
    res.reward = reward(t, cfg_);
    if (distance_to_target(t, cfg_) <= cfg_.capture_radius)
      outcome_ = Outcome::Captured;
    else if (steps_ >= cfg_.max_steps)
      outcome_ = Outcome::Timeout;
  }
  res.done = outcome_ != Outcome::Running;
  res.outcome = outcome_;
  res.state = window_;
  trajectory_.push_back({steps_, std::int64_t(std::llround(swimmer_->time())), o.x + cfg_.target.x,
                         o.y + cfg_.target.y, o.theta, o.u_bar_x, o.u_bar_y, o.omega_bar, action,
                         res.reward, res.done});
  return res;
}

}  // namespace vortexswim::env
