#include "vortexswim/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "vortexswim/io.hpp"

namespace vortexswim::harness {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(sep, start);
    out.push_back(trim(s.substr(start, p == std::string_view::npos ? s.size() - start : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

double to_double(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("not a number: '" + std::string(s) + "'");
  return v;
}

template <class Int>
Int to_int(std::string_view s) {
  Int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("not an integer: '" + std::string(s) + "'");
  return v;
}

std::vector<double> to_list(std::string_view s, std::size_t n = 0) {
  std::vector<double> v;
  for (auto part : split(s, ',')) v.push_back(to_double(part));
  if (n && v.size() != n)
    throw ConfigError("expected " + std::to_string(n) + " comma-separated numbers, got '" + std::string(s) + "'");
  return v;
}

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string list(std::initializer_list<double> v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + num(x);
  return s;
}

struct Key {
  std::string name;
  std::string doc;
  std::function<void(RunConfig&, std::string_view, const std::filesystem::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Shorthands for plain numeric fields reached through a projection.
template <class F>
Key real(std::string name, std::string doc, F field) {
  return {std::move(name), std::move(doc),
          [field](RunConfig& c, std::string_view v, const std::filesystem::path&) { field(c) = to_double(v); },
          [field](const RunConfig& c) { return num(field(const_cast<RunConfig&>(c))); }};
}

template <class Int, class F>
Key integer(std::string name, std::string doc, F field) {
  return {std::move(name), std::move(doc),
          [field](RunConfig& c, std::string_view v, const std::filesystem::path&) { field(c) = to_int<Int>(v); },
          [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

const std::vector<Key>& table() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    // grid
    k.push_back(integer<int>("grid.cells_per_length", "body length L in lattice cells",
                             [](RunConfig& c) -> int& { return c.env.cells_per_length; }));
    k.push_back(real("grid.margin_upstream", "grid beyond omega on the inlet side, L",
                     [](RunConfig& c) -> double& { return c.env.margin_upstream; }));
    k.push_back(real("grid.margin_downstream", "grid beyond omega on the outlet side, L",
                     [](RunConfig& c) -> double& { return c.env.margin_downstream; }));
    k.push_back(real("grid.margin_side", "grid beyond omega above and below, L",
                     [](RunConfig& c) -> double& { return c.env.margin_side; }));
    // flow
    k.push_back(real("flow.u_in", "inlet speed, lattice units",
                     [](RunConfig& c) -> double& { return c.env.u_in; }));
    k.push_back(real("flow.reynolds", "Reynolds number on the cylinder diameter",
                     [](RunConfig& c) -> double& { return c.env.reynolds; }));
    k.push_back(real("flow.tau", "relaxation time; > 0 overrides flow.reynolds",
                     [](RunConfig& c) -> double& { return c.env.tau; }));
    k.push_back(real("flow.cylinder_diameter", "cylinder diameter, L",
                     [](RunConfig& c) -> double& { return c.env.cylinder_diameter; }));
    k.push_back(integer<int>("flow.inlet_ramp", "ticks over which the inlet speed rises from zero",
                             [](RunConfig& c) -> int& { return c.env.inlet_ramp; }));
    k.push_back(integer<int>("flow.spinup_ticks", "ticks of cylinder flow before the first episode",
                             [](RunConfig& c) -> int& { return c.env.spinup_ticks; }));
    k.push_back({"flow.warm_start", "VSWF1 population file replacing the spin-up (empty: none)",
                 [](RunConfig& c, std::string_view v, const std::filesystem::path& base) {
                   if (v.empty()) {
                     c.env.warm_start.reset();
                     return;
                   }
                   std::filesystem::path p{std::string(v)};
                   c.env.warm_start = p.is_relative() && !base.empty() ? base / p : p;
                 },
                 [](const RunConfig& c) { return c.env.warm_start ? c.env.warm_start->string() : ""; }});
    // fish
    k.push_back(real("fish.wavelength", "body-wave wavelength, L",
                     [](RunConfig& c) -> double& { return c.env.wavelength; }));
    k.push_back(real("fish.period", "undulation period in ticks; 0 means 0.5 L / u_in",
                     [](RunConfig& c) -> double& { return c.env.period; }));
    k.push_back(integer<int>("fish.stations", "midline stations; 0 means L + 1",
                             [](RunConfig& c) -> int& { return c.env.stations; }));
    k.push_back(integer<int>("fish.sub_iterations", "direct-forcing iterations per tick",
                             [](RunConfig& c) -> int& { return c.env.coupling.sub_iterations; }));
    k.push_back(real("fish.density_ratio", "body density over fluid density",
                     [](RunConfig& c) -> double& { return c.env.coupling.density_ratio; }));
    k.push_back(real("fish.added_mass", "artificial added mass, multiple of the body mass",
                     [](RunConfig& c) -> double& { return c.env.coupling.added_mass; }));
    // env
    k.push_back({"env.omega", "task box x_min,x_max,y_min,y_max, L (cylinder at the origin)",
                 [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
                   const auto r = to_list(v, 4);
                   c.env.omega = {r[0], r[1], r[2], r[3]};
                 },
                 [](const RunConfig& c) {
                   const auto& o = c.env.omega;
                   return list({o.x_min, o.x_max, o.y_min, o.y_max});
                 }});
    k.push_back({"env.target", "target x,y, L",
                 [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
                   const auto r = to_list(v, 2);
                   c.env.target = {r[0], r[1]};
                 },
                 [](const RunConfig& c) { return list({c.env.target.x, c.env.target.y}); }});
    k.push_back({"env.init_x", "range min,max of the random start x, L",
                 [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
                   const auto r = to_list(v, 2);
                   c.env.init_x_min = r[0];
                   c.env.init_x_max = r[1];
                 },
                 [](const RunConfig& c) { return list({c.env.init_x_min, c.env.init_x_max}); }});
    k.push_back({"env.init_y", "range min,max of the random start y, L",
                 [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
                   const auto r = to_list(v, 2);
                   c.env.init_y_min = r[0];
                   c.env.init_y_max = r[1];
                 },
                 [](const RunConfig& c) { return list({c.env.init_y_min, c.env.init_y_max}); }});
    k.push_back(real("env.capture_radius", "head-tip distance to the target that ends an episode, L",
                     [](RunConfig& c) -> double& { return c.env.capture_radius; }));
    k.push_back(integer<int>("env.max_steps", "control steps (half cycles) per episode",
                             [](RunConfig& c) -> int& { return c.env.max_steps; }));
    k.push_back({"env.actions", "signed head amplitudes, rad, one per action",
                 [](RunConfig& c, std::string_view v, const std::filesystem::path&) { c.env.actions = to_list(v); },
                 [](const RunConfig& c) {
                   std::string s;
                   for (double a : c.env.actions) s += (s.empty() ? "" : ",") + num(a);
                   return s;
                 }});
    k.push_back(real("env.amplitude_cap", "largest allowed |amplitude|, rad",
                     [](RunConfig& c) -> double& { return c.env.amplitude_cap; }));
    // agent
    k.push_back(integer<int>("agent.hidden", "LSTM units per layer",
                             [](RunConfig& c) -> int& { return c.agent.net.hidden; }));
    k.push_back(integer<int>("agent.layers", "stacked LSTM layers",
                             [](RunConfig& c) -> int& { return c.agent.net.layers; }));
    k.push_back(integer<int>("agent.batch", "replay minibatch size",
                             [](RunConfig& c) -> int& { return c.agent.batch; }));
    k.push_back(integer<int>("agent.replay", "replay capacity, transitions",
                             [](RunConfig& c) -> int& { return c.agent.replay; }));
    k.push_back(real("agent.gamma", "discount factor",
                     [](RunConfig& c) -> double& { return c.agent.schedule.gamma; }));
    k.push_back(real("agent.lr", "Adam learning rate",
                     [](RunConfig& c) -> double& { return c.agent.schedule.lr; }));
    k.push_back(real("agent.eps_max", "initial exploration rate",
                     [](RunConfig& c) -> double& { return c.agent.schedule.eps_max; }));
    k.push_back(real("agent.eps_min", "exploration floor",
                     [](RunConfig& c) -> double& { return c.agent.schedule.eps_min; }));
    k.push_back(real("agent.eps_decay", "exploration decrease per control step",
                     [](RunConfig& c) -> double& { return c.agent.schedule.eps_decay; }));
    k.push_back(integer<int>("agent.target_sync", "gradient steps between target-network copies",
                             [](RunConfig& c) -> int& { return c.agent.schedule.target_sync; }));
    // train
    k.push_back(integer<int>("train.episodes", "episodes to train",
                             [](RunConfig& c) -> int& { return c.episodes; }));
    k.push_back(integer<int>("train.checkpoint_every", "episodes between checkpoints",
                             [](RunConfig& c) -> int& { return c.checkpoint_every; }));
    k.push_back(integer<int>("train.trajectory_every", "episodes between saved trajectories; 0 disables",
                             [](RunConfig& c) -> int& { return c.trajectory_every; }));
    k.push_back(integer<std::uint64_t>("run.seed", "master seed (agent init, exploration, resets)",
                                       [](RunConfig& c) -> std::uint64_t& { return c.seed; }));
    // fields / eval
    k.push_back(integer<int>("fields.ticks", "ticks of field output",
                             [](RunConfig& c) -> int& { return c.fields_ticks; }));
    k.push_back(integer<int>("fields.cadence", "ticks between snapshots",
                             [](RunConfig& c) -> int& { return c.cadence; }));
    k.push_back({"fields.start", "fish start x,y for field output, L",
                 [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
                   const auto r = to_list(v, 2);
                   c.fields_x = r[0];
                   c.fields_y = r[1];
                 },
                 [](const RunConfig& c) { return list({c.fields_x, c.fields_y}); }});
    k.push_back({"eval.sweep", "start x sweep A:B:N, L",
                 [](RunConfig& c, std::string_view v, const std::filesystem::path&) { c.sweep = parse_sweep(v); },
                 [](const RunConfig& c) { return to_string(c.sweep); }});
    k.push_back(real("eval.y", "start y of the sweep, L", [](RunConfig& c) -> double& { return c.eval_y; }));
    return k;
  }();
  return keys;
}

}  // namespace

Sweep parse_sweep(std::string_view spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 3) throw ConfigError("sweep must look like A:B:N, got '" + std::string(spec) + "'");
  Sweep s{to_double(parts[0]), to_double(parts[1]), to_int<int>(parts[2])};
  if (s.n < 1) throw ConfigError("sweep needs N >= 1");
  if (s.n > 1 && s.a > s.b) throw ConfigError("sweep needs A <= B");
  return s;
}

std::string to_string(const Sweep& s) { return num(s.a) + ":" + num(s.b) + ":" + std::to_string(s.n); }

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> info = [] {
    const RunConfig d;
    std::vector<KeyInfo> v;
    for (const auto& k : table()) v.push_back({k.name, k.doc, k.get(d)});
    return v;
  }();
  return info;
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base) {
  std::map<std::string_view, const Key*> index;
  for (const auto& k : table()) index[k.name] = &k;
  RunConfig c;
  c.source = std::string(text);
  std::set<std::string> seen;
  int line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "repeated key '" + key + "'");
    try {
      it->second->set(c, value, base);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  c.agent.seed = c.seed;
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("config file not found: " + path.string());
  return parse_config(io::read_text(path), path.parent_path());
}

std::string resolved_config(const RunConfig& c) {
  std::ostringstream os;
  for (const auto& k : table()) os << k.name << " = " << k.get(c) << '\n';
  return os.str();
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace vortexswim::harness
