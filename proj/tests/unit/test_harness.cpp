#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "vortexswim/config.hpp"
#include "vortexswim/dqn.hpp"
#include "vortexswim/harness.hpp"
#include "vortexswim/io.hpp"

using namespace vortexswim;
using namespace vortexswim::harness;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"(# small and fast
grid.cells_per_length = 10
flow.reynolds = 50
flow.spinup_ticks = 300
flow.inlet_ramp = 200
env.max_steps = 6
agent.hidden = 8
agent.layers = 1
agent.batch = 4
agent.replay = 200
train.episodes = 4
train.checkpoint_every = 2
train.trajectory_every = 1
fields.start = 2,0
)";

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("vortexswim-harness-" + std::to_string(::rand()) + "-" +
                                       std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path file(const std::string& name, const std::string& text) const {
    io::write_text_atomic(dir / name, text);
    return dir / name;
  }
};

Options opts(const fs::path& cfg, const fs::path& out) {
  Options o;
  o.config = cfg;
  o.out = out;
  o.quiet = true;
  return o;
}

}  // namespace

TEST_CASE("config: defaults, overrides and the resolved echo") {
  const auto d = parse_config("");
  CHECK(d.env.cells_per_length == 40);
  CHECK(d.agent.schedule.gamma == 0.99);
  CHECK(d.agent.net.hidden == 64);
  CHECK(d.agent.net.layers == 3);
  CHECK(d.episodes == 3000);

  const auto c = parse_config("agent.gamma = 0.9   # comment\n\n  env.target=2.5, -1\nenv.actions = -0.5,0,0.5\nagent.layers = 1\n");
  CHECK(c.agent.schedule.gamma == 0.9);
  CHECK(c.env.target.x == 2.5);
  CHECK(c.env.target.y == -1.0);
  CHECK(c.env.actions.size() == 3);
  // Resolved text parses back to itself.
  const auto again = parse_config(resolved_config(c));
  CHECK(resolved_config(again) == resolved_config(c));
  CHECK(c.source.find("# comment") != std::string::npos);

  for (const auto& k : config_keys()) {
    CHECK(!k.doc.empty());
    CHECK(resolved_config(d).find(k.key + " = " + k.default_value + "\n") != std::string::npos);
  }
}

TEST_CASE("config: rejects unknown, repeated and malformed entries") {
  CHECK_THROWS_WITH_AS(parse_config("agent.gama = 1\n"), doctest::Contains("unknown key 'agent.gama'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("a\n"), doctest::Contains("line 1"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("agent.lr = 1\nagent.lr = 2\n"), doctest::Contains("repeated"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("\nagent.lr = fast\n"), doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_AS(parse_config("agent.hidden = 6.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("env.target = 1\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/x.cfg"), IoError);
}

TEST_CASE("sweep specs") {
  const auto s = parse_sweep("3:5:11");
  const auto xs = dqn::sweep_points(s.a, s.b, s.n);
  REQUIRE(xs.size() == 11);
  for (std::size_t k = 1; k < xs.size(); ++k) CHECK(xs[k] - xs[k - 1] == doctest::Approx(0.2));
  CHECK(parse_sweep("5:7:11").a == 5.0);
  CHECK(dqn::sweep_points(4, 4, parse_sweep("4:4:1").n).size() == 1);
  CHECK_THROWS_AS(parse_sweep("3:5"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("3:5:0"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("5:3:4"), ConfigError);
  CHECK(to_string(s) == "3:5:11");
}

TEST_CASE("fnv1a reference vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
  CHECK(hex64(0xabcull) == "0000000000000abc");
}

TEST_CASE("validate: stability gate and usage errors") {
  Scratch s;
  std::ostringstream log;
  auto o = opts(s.file("t.cfg", "flow.tau = 0.4\n"), s.dir / "v");
  o.only = {"stability", "body_shape"};
  CHECK(cmd_validate(o, log) == kExitFailure);
  CHECK(log.str().find("stability gate") != std::string::npos);
  const auto csv = io::read_text(s.dir / "v" / "validate.csv");
  CHECK(csv.rfind("test,metric,value,bound,pass\n", 0) == 0);
  CHECK(csv.find("stability,tau,0.4,\"> 0.5\",false") != std::string::npos);
  CHECK(csv.find("body_shape,") != std::string::npos);

  o.config = s.dir / "missing.cfg";
  CHECK(cmd_validate(o, log) == kExitUsage);
  o.config = s.file("bad.cfg", "nope = 1\n");
  CHECK(cmd_validate(o, log) == kExitUsage);
  o.config.reset();
  o.only = {"ibm"};
  CHECK(cmd_validate(o, log) == kExitOk);
}

TEST_CASE("train: row count, determinism, resume and artifacts") {
  Scratch s;
  const auto cfg = s.file("tiny.cfg", kTiny);
  std::ostringstream log;

  auto a = opts(cfg, s.dir / "a");
  a.seed = 7;
  REQUIRE(cmd_train(a, log) == kExitOk);
  const auto rewards = io::read_text(s.dir / "a" / "rewards.csv");
  CHECK(std::count(rewards.begin(), rewards.end(), '\n') == 5);
  CHECK(rewards.rfind("episode,steps,cumulative_reward,outcome\n", 0) == 0);
  CHECK(io::read_text(s.dir / "a" / "config.cfg") == kTiny);
  CHECK(fs::exists(s.dir / "a" / "checkpoints" / "ckpt_000002.vswq"));
  CHECK(fs::exists(s.dir / "a" / "checkpoints" / "ckpt_000004.vswq"));
  for (int k = 0; k < 4; ++k)
    CHECK(fs::exists(s.dir / "a" / "trajectories" / ("episode_00000" + std::to_string(k) + ".csv")));

  const auto manifest = nlohmann::json::parse(io::read_text(s.dir / "a" / "manifest.json"));
  CHECK(manifest["command"] == "train");
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);
  CHECK(manifest["files"].size() >= 9);

  // Same seed: bitwise identical logs and trajectories.
  auto b = opts(cfg, s.dir / "b");
  b.seed = 7;
  REQUIRE(cmd_train(b, log) == kExitOk);
  CHECK(io::read_text(s.dir / "b" / "rewards.csv") == rewards);
  for (int k = 0; k < 4; ++k) {
    const auto name = fs::path("trajectories") / ("episode_00000" + std::to_string(k) + ".csv");
    CHECK(io::read_text(s.dir / "a" / name) == io::read_text(s.dir / "b" / name));
  }

  // Interrupted after 2 episodes, resumed to 4: same log.
  auto c = opts(cfg, s.dir / "c");
  c.seed = 7;
  c.episodes = 2;
  REQUIRE(cmd_train(c, log) == kExitOk);
  c.episodes.reset();
  c.resume = true;
  REQUIRE(cmd_train(c, log) == kExitOk);
  CHECK(io::read_text(s.dir / "c" / "rewards.csv") == rewards);

  auto d = opts(cfg, s.dir / "d");
  d.resume = true;
  CHECK(cmd_train(d, log) == kExitUsage);

  // Episode-count override (the row-count contract).
  auto e = opts(cfg, s.dir / "e");
  e.episodes = 3;
  REQUIRE(cmd_train(e, log) == kExitOk);
  const auto r3 = io::read_text(s.dir / "e" / "rewards.csv");
  CHECK(std::count(r3.begin(), r3.end(), '\n') == 4);

  SUBCASE("eval over a sweep, and a shape mismatch") {
    auto v = opts(cfg, s.dir / "ev");
    v.checkpoint = s.dir / "a" / "checkpoints" / "latest.vswq";
    v.sweep = "4:4:1";
    REQUIRE(cmd_eval(v, log) == kExitOk);
    const auto summary = io::read_text(s.dir / "ev" / "summary.csv");
    CHECK(summary.rfind("start_x,outcome,steps_to_outcome,final_distance\n", 0) == 0);
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 2);

    auto w = opts(s.file("wide.cfg", std::string(kTiny) + "agent.hidden = 9\n"), s.dir / "ew");
    // agent.hidden is repeated in that file: a config error.
    w.checkpoint = v.checkpoint;
    CHECK(cmd_eval(w, log) == kExitUsage);
    std::string text = kTiny;
    text.replace(text.find("agent.hidden = 8"), 16, "agent.hidden = 9");
    w.config = s.file("wide2.cfg", text);
    std::ostringstream elog;
    CHECK(cmd_eval(w, elog) == kExitFailure);
    CHECK(elog.str().find("1x8 network") != std::string::npos);

    auto none = opts(cfg, s.dir / "en");
    CHECK(cmd_eval(none, log) == kExitUsage);
  }
}

TEST_CASE("fields: cadence, polyline and spin-up file") {
  Scratch s;
  const auto cfg = s.file("tiny.cfg", kTiny);
  std::ostringstream log;
  auto o = opts(cfg, s.dir / "f");
  o.cadence = 100;
  o.ticks = 1000;
  REQUIRE(cmd_fields(o, log) == kExitOk);
  int n = 0;
  for (const auto& e : fs::directory_iterator(s.dir / "f" / "fields")) {
    ++n;
    const auto snap = io::read_snapshot(e.path());
    REQUIRE(snap.polyline);
    CHECK(snap.polyline->size() > 10);
    CHECK(snap.dx == doctest::Approx(0.1));
  }
  CHECK(n == 10);

  auto sp = opts(cfg, s.dir / "w");
  sp.spinup = true;
  REQUIRE(cmd_fields(sp, log) == kExitOk);
  const auto pf = io::read_populations(s.dir / "w" / "warm_start.vswf");
  CHECK(pf.tick == 300);
  // The warm start reproduces the spun-up environment.
  const auto warm = s.file("warm.cfg", std::string(kTiny) + "flow.warm_start = w/warm_start.vswf\n");
  const auto c = load_config(warm);
  REQUIRE(c.env.warm_start);
  CHECK(fs::exists(*c.env.warm_start));
  auto t1 = opts(cfg, s.dir / "t1");
  t1.episodes = 2;
  auto t2 = opts(warm, s.dir / "t2");
  t2.episodes = 2;
  REQUIRE(cmd_train(t1, log) == kExitOk);
  REQUIRE(cmd_train(t2, log) == kExitOk);
  CHECK(io::read_text(s.dir / "t1" / "rewards.csv") == io::read_text(s.dir / "t2" / "rewards.csv"));
}
