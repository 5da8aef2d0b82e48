#include "vortexswim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vortexswim/dqn.hpp"
#include "vortexswim/env.hpp"
#include "vortexswim/io.hpp"
#include "vortexswim/validation.hpp"

#ifndef VORTEXSWIM_VERSION
#define VORTEXSWIM_VERSION "0.0.0"
#endif
#ifndef VORTEXSWIM_BUILD_TYPE
#define VORTEXSWIM_BUILD_TYPE "unknown"
#endif

namespace vortexswim::harness {

namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

// Measured on the development box: one coupled tick costs about this much
// per lattice cell (flow + immersed boundary at L = 16..40).
constexpr double kSecondsPerCellTick = 3.1e-8;
// Effective throughput of the batched LSTM forward/backward pass.
constexpr double kFlopsPerSecond = 2.0e9;

struct Run {
  RunConfig cfg;
  fs::path dir;
  std::string hash;
  std::string started;
};

Run prepare(const Options& o, const std::string& command, std::ostream& log) {
  Run r;
  r.started = utc_now();
  if (o.config) {
    if (!fs::is_regular_file(*o.config)) throw UsageError("config file not found: " + o.config->string());
    r.cfg = load_config(*o.config);
  }
  if (o.seed) {
    r.cfg.seed = *o.seed;
    r.cfg.agent.seed = *o.seed;
  }
  if (o.episodes) r.cfg.episodes = *o.episodes;
  if (o.ticks) r.cfg.fields_ticks = *o.ticks;
  if (o.cadence) r.cfg.cadence = *o.cadence;
  if (o.sweep) r.cfg.sweep = parse_sweep(*o.sweep);
  if (r.cfg.episodes < 1) throw UsageError("train.episodes must be >= 1");
  if (r.cfg.checkpoint_every < 1) throw UsageError("train.checkpoint_every must be >= 1");
  if (r.cfg.trajectory_every < 0) throw UsageError("train.trajectory_every must be >= 0");
  if (r.cfg.cadence < 1) throw UsageError("cadence must be >= 1");
  if (r.cfg.fields_ticks < 0) throw UsageError("fields.ticks must be >= 0");
  r.dir = o.out ? *o.out : fs::path("runs") / (command + "-seed" + std::to_string(r.cfg.seed));
  fs::create_directories(r.dir);
  io::write_text_atomic(r.dir / "config.cfg", r.cfg.source);
  const auto resolved = resolved_config(r.cfg);
  io::write_text_atomic(r.dir / "config.resolved.cfg", resolved);
  r.hash = hex64(fnv1a(resolved));
  if (!o.quiet) log << command << ": run directory " << r.dir.string() << ", config " << r.hash << '\n';
  return r;
}

void finish(const Run& r, const std::string& command) {
  write_manifest(r.dir, {command, r.hash, r.cfg.seed, build_id(), r.started, utc_now(), {}});
}

template <class F>
int guarded(const std::string& command, std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    log << command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    log << command << ": configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    log << command << ": I/O error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    log << command << ": " << e.what() << '\n';
    return kExitFailure;
  }
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string padded(long long v, int width) {
  std::ostringstream os;
  os << std::setw(width) << std::setfill('0') << v;
  return os.str();
}

std::string duration(double s) {
  if (s < 120) return fixed(s, 0) + " s";
  if (s < 7200) return fixed(s / 60, 1) + " min";
  return fixed(s / 3600, 1) + " h";
}

// Keeps the header and the first `rows` data rows.
void truncate_log(const fs::path& p, int rows) {
  if (!fs::exists(p)) return;
  std::istringstream in(io::read_text(p));
  std::string line, out;
  for (int k = 0; k <= rows && std::getline(in, line); ++k) out += line + '\n';
  io::write_text_atomic(p, out);
}

std::optional<dqn::Network> policy_network(const Options& o, const RunConfig& c) {
  if (o.checkpoint) {
    if (!fs::is_regular_file(*o.checkpoint))
      throw UsageError("checkpoint not found: " + o.checkpoint->string());
    const auto have = dqn::checkpoint_shape(*o.checkpoint);
    const auto& want = c.agent.net;
    if (have.hidden != want.hidden || have.layers != want.layers || have.actions != want.actions ||
        have.input != want.input)
      throw IoError("checkpoint " + o.checkpoint->string() + " holds a " + std::to_string(have.layers) +
                    "x" + std::to_string(have.hidden) + " network with " + std::to_string(have.actions) +
                    " actions; the config asks for " + std::to_string(want.layers) + "x" +
                    std::to_string(want.hidden) + " with " + std::to_string(want.actions));
    return dqn::load_network(*o.checkpoint, want);
  }
  if (o.untrained) {
    dqn::Network n(c.agent.net);
    n.initialize(c.seed);
    return n;
  }
  return std::nullopt;
}

void check_actions(const RunConfig& c) {
  if (int(c.env.actions.size()) != c.agent.net.actions)
    throw ConfigError("env.actions has " + std::to_string(c.env.actions.size()) +
                      " entries but the network has " + std::to_string(c.agent.net.actions) + " outputs");
}

}  // namespace

std::string build_id() {
  return std::string("vortexswim ") + VORTEXSWIM_VERSION + " (" + VORTEXSWIM_BUILD_TYPE + ", " +
#if defined(__clang__)
         "clang " + __clang_version__ +
#elif defined(__GNUC__)
         "gcc " + __VERSION__ +
#else
         "unknown compiler" +
#endif
         ")";
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_manifest(const fs::path& dir, Manifest m) {
  m.files.clear();
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir);
    if (rel == "manifest.json" || rel.extension() == ".tmp") continue;
    m.files.push_back(rel);
  }
  std::sort(m.files.begin(), m.files.end());
  nlohmann::json j;
  j["command"] = m.command;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["build"] = m.build;
  j["started"] = m.started;
  j["finished"] = m.finished;
  auto& files = j["files"] = nlohmann::json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.generic_string()}, {"bytes", fs::file_size(dir / f)}});
  io::write_text_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

CostEstimate estimate_training_cost(const RunConfig& c) {
  const auto fc = c.env.flow();
  const double cells = double(fc.nx) * fc.ny;
  const auto& n = c.agent.net;
  const double flops_per_update = 6.0 * c.agent.batch * n.steps *
                                  (double(4 * n.hidden) * (n.hidden + n.input) +
                                   double(n.layers - 1) * 4 * n.hidden * 2 * n.hidden);
  CostEstimate e;
  e.seconds_per_step = cells * c.env.half_period_ticks() * kSecondsPerCellTick + flops_per_update / kFlopsPerSecond;
  e.spinup_seconds = c.env.warm_start ? 0.0 : cells * c.env.spinup_ticks * kSecondsPerCellTick * 0.7;
  e.total_seconds = e.spinup_seconds + e.seconds_per_step * c.env.max_steps * c.episodes;
  return e;
}

const std::vector<std::string>& validation_suites() {
  static const std::vector<std::string> s{"stability", "poiseuille", "taylor_green", "strouhal",
                                          "ibm",       "waveform",   "body_shape",   "self_propulsion"};
  return s;
}

int cmd_validate(const Options& o, std::ostream& log) {
  return guarded("validate", log, [&] {
    for (const auto& name : o.only)
      if (std::find(validation_suites().begin(), validation_suites().end(), name) == validation_suites().end())
        throw UsageError("unknown suite '" + name + "'");
    const Run run = prepare(o, "validate", log);
    auto wanted = [&](const std::string& n) {
      return o.only.empty() || std::find(o.only.begin(), o.only.end(), n) != o.only.end();
    };
    std::vector<validation::Row> rows;
    auto report = [&](const validation::Row& r) {
      rows.push_back(r);
      log << (r.pass ? "PASS " : "FAIL ") << r.test << ' ' << r.metric << " = " << r.value << " (bound "
          << r.bound << ", " << fixed(r.seconds, 1) << " s)";
      if (!r.note.empty()) log << "  " << r.note;
      log << std::endl;
    };
    auto many = [&](const std::vector<validation::Row>& v) {
      for (const auto& r : v) report(r);
    };
    if (wanted("stability")) report(validation::stability_gate(run.cfg.env.flow()));
    if (wanted("poiseuille")) report(validation::poiseuille());
    if (wanted("taylor_green")) report(validation::taylor_green());
    if (wanted("ibm")) many(validation::ibm_operators(run.cfg.seed));
    if (wanted("waveform")) many(validation::waveform(run.cfg.seed));
    if (wanted("body_shape")) report(validation::body_shape());
    if (wanted("strouhal")) many(validation::strouhal());
    if (wanted("self_propulsion")) report(validation::self_propulsion());

    std::string csv = validation::csv_header();
    for (const auto& r : rows) csv += validation::csv_row(r);
    io::write_text_atomic(run.dir / "validate.csv", csv);
    finish(run, "validate");
    const auto failed = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.pass; });
    log << "validate: " << rows.size() - failed << "/" << rows.size() << " passed\n";
    return failed ? kExitFailure : kExitOk;
  });
}

int cmd_train(const Options& o, std::ostream& log) {
  return guarded("train", log, [&] {
    Run run = prepare(o, "train", log);
    const auto& c = run.cfg;
    c.env.validate();
    check_actions(c);

    const auto cost = estimate_training_cost(c);
    log << "train: " << c.episodes << " episodes x up to " << c.env.max_steps << " steps, grid "
        << c.env.flow().nx << "x" << c.env.flow().ny << ", T/2 = " << c.env.half_period_ticks()
        << " ticks\n"
        << "train: estimated cost up to " << duration(cost.total_seconds) << " (~"
        << fixed(cost.seconds_per_step, 3) << " s per control step";
    if (cost.spinup_seconds > 0) log << ", spin-up " << duration(cost.spinup_seconds);
    log << ")\n";
    if (cost.total_seconds > 3600)
      log << "train: LONG-RUNNING configuration; use --resume to continue after an interruption\n";
    log.flush();

    env::FishEnv env(c.env);
    dqn::Agent agent(c.agent);
    const fs::path ckdir = run.dir / "checkpoints";
    const fs::path trdir = run.dir / "trajectories";
    const fs::path rewards = run.dir / "rewards.csv";
    const fs::path latest = ckdir / "latest.vswq";
    fs::create_directories(ckdir);
    if (c.trajectory_every > 0) fs::create_directories(trdir);

    if (o.resume) {
      if (!fs::exists(latest)) throw UsageError("--resume: no checkpoint at " + latest.string());
      agent.load(latest);
      truncate_log(rewards, agent.episodes_done());
      log << "train: resumed after episode " << agent.episodes_done() << '\n';
    } else {
      io::write_text_atomic(rewards, dqn::reward_log_header());
    }

    std::ofstream out(rewards, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to " + rewards.string());
    while (agent.episodes_done() < c.episodes) {
      const int ep = agent.episodes_done();
      const auto e = agent.run_episode(env);
      out << dqn::reward_log_row(e);
      out.flush();
      if (!out) throw IoError("write failed: " + rewards.string());
      if (c.trajectory_every > 0 && ep % c.trajectory_every == 0)
        env::write_trajectory_csv(trdir / ("episode_" + padded(ep, 6) + ".csv"), env.trajectory());
      const int done = agent.episodes_done();
      if (done % c.checkpoint_every == 0 || done == c.episodes) {
        agent.save(ckdir / ("ckpt_" + padded(done, 6) + ".vswq"));
        agent.save(latest);
      }
      if (!o.quiet)
        log << "episode " << ep << "  steps " << e.steps << "  reward " << fixed(e.cumulative_reward, 3)
            << "  " << env::to_string(e.outcome) << "  eps " << fixed(agent.epsilon(), 3) << std::endl;
    }
    out.close();
    finish(run, "train");
    return kExitOk;
  });
}

int cmd_eval(const Options& o, std::ostream& log) {
  return guarded("eval", log, [&] {
    if (!o.checkpoint && !o.untrained) throw UsageError("eval needs --checkpoint PATH or --untrained");
    Run run = prepare(o, "eval", log);
    const auto& c = run.cfg;
    c.env.validate();
    check_actions(c);
    const auto net = policy_network(o, c);
    env::FishEnv env(c.env);
    const auto xs = dqn::sweep_points(c.sweep.a, c.sweep.b, c.sweep.n);
    const fs::path dir = run.dir / "eval";
    fs::create_directories(dir);
    std::ostringstream summary;
    summary << std::setprecision(17) << "start_x,outcome,steps_to_outcome,final_distance\n";
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const Vec2 p{xs[k], c.eval_y};
      const auto ro = dqn::evaluate(env, *net, std::span<const Vec2>(&p, 1)).front();
      env::write_trajectory_csv(dir / ("rollout_" + padded(long(k), 2) + "_x" + fixed(p.x, 3) + ".csv"),
                                ro.trajectory);
      summary << ro.start_x << ',' << env::to_string(ro.outcome) << ',' << ro.steps << ','
              << ro.final_distance << '\n';
      if (!o.quiet)
        log << "start x = " << fixed(p.x, 3) << ": " << env::to_string(ro.outcome) << " after " << ro.steps
            << " steps, final distance " << fixed(ro.final_distance, 3) << " L" << std::endl;
    }
    io::write_text_atomic(run.dir / "summary.csv", summary.str());
    finish(run, "eval");
    return kExitOk;
  });
}

int cmd_fields(const Options& o, std::ostream& log) {
  return guarded("fields", log, [&] {
    Run run = prepare(o, "fields", log);
    const auto& c = run.cfg;
    c.env.validate();
    const double dx = 1.0 / c.env.cells_per_length;

    if (o.spinup) {
      auto solver = env::FishEnv::spin_up(c.env, c.env.spinup_ticks);
      io::write_populations(run.dir / "warm_start.vswf", solver->field());
      io::write_snapshot(run.dir / "spinup.vswm",
                         io::make_snapshot(solver->macro(), double(solver->tick()), dx));
      log << "fields: spun up " << c.env.spinup_ticks << " ticks -> " << (run.dir / "warm_start.vswf").string()
          << '\n';
      finish(run, "fields");
      return kExitOk;
    }

    check_actions(c);
    const auto net = policy_network(o, c);
    // The step cap is a training notion; field output runs for its ticks.
    auto ec = c.env;
    ec.max_steps = std::max(ec.max_steps, c.fields_ticks / ec.half_period_ticks() + 1);
    env::FishEnv env(ec);
    const fs::path dir = run.dir / "fields";
    fs::create_directories(dir);
    int tick = 0, written = 0;
    env.on_tick = [&](const env::FishEnv& e) {
      ++tick;
      if (tick > c.fields_ticks || tick % c.cadence != 0) return;
      auto snap = io::make_snapshot(e.solver().macro(), double(e.solver().tick()), dx);
      snap.polyline = e.swimmer().outline();
      io::write_snapshot(dir / ("snap_" + padded(tick, 7) + ".vswm"), snap);
      ++written;
    };
    auto s = env.reset_at({c.fields_x, c.fields_y});
    // Without a policy: steady swimming, alternating the extreme amplitudes.
    const auto& a = c.env.actions;
    const int hi = int(std::max_element(a.begin(), a.end()) - a.begin());
    const int lo = int(std::min_element(a.begin(), a.end()) - a.begin());
    bool up = true;
    while (tick < c.fields_ticks) {
      const int act = net ? dqn::argmax(dqn::q_forward(*net, s)) : (up ? hi : lo);
      up = !up;
      const auto r = env.step(act);
      s = r.state;
      if (r.done) {
        log << "fields: episode ended (" << env::to_string(r.outcome) << ") after " << tick << " ticks\n";
        break;
      }
    }
    env::write_trajectory_csv(run.dir / "trajectory.csv", env.trajectory());
    log << "fields: wrote " << written << " snapshots to " << dir.string() << '\n';
    finish(run, "fields");
    return kExitOk;
  });
}

}  // namespace vortexswim::harness
