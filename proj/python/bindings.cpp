#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "vortexswim/config.hpp"
#include "vortexswim/dqn.hpp"
#include "vortexswim/env.hpp"
#include "vortexswim/fish.hpp"
#include "vortexswim/harness.hpp"
#include "vortexswim/ibm.hpp"
#include "vortexswim/io.hpp"
#include "vortexswim/lbm.hpp"
#include "vortexswim/validation.hpp"

namespace py = pybind11;
using namespace vortexswim;

namespace {

py::array_t<double> plane(const std::vector<double>& v, int nx, int ny) {
  py::array_t<double> a({ny, nx});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<double> points(const std::vector<Vec2>& v) {
  py::array_t<double> a({py::ssize_t(v.size()), py::ssize_t(2)});
  auto m = a.mutable_unchecked<2>();
  for (std::size_t k = 0; k < v.size(); ++k) {
    m(k, 0) = v[k].x;
    m(k, 1) = v[k].y;
  }
  return a;
}

std::vector<Vec2> to_points(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw std::invalid_argument("expected an (n, 2) array");
  std::vector<Vec2> v(a.shape(0));
  auto r = a.unchecked<2>();
  for (py::ssize_t k = 0; k < a.shape(0); ++k) v[k] = {r(k, 0), r(k, 1)};
  return v;
}

py::array_t<double> window(const env::StateWindow& w) {
  py::array_t<double> a(env::kStateDim);
  std::copy(w.begin(), w.end(), a.mutable_data());
  return a;
}

env::StateWindow to_window(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.size() != env::kStateDim) throw std::invalid_argument("state window must have 55 entries");
  env::StateWindow w;
  std::copy(a.data(), a.data() + env::kStateDim, w.begin());
  return w;
}

py::dict snapshot_dict(const io::Snapshot& s) {
  py::dict d;
  d["nx"] = s.nx;
  d["ny"] = s.ny;
  d["dx"] = s.dx;
  d["t"] = s.t;
  d["rho"] = plane(s.rho, int(s.nx), int(s.ny));
  d["ux"] = plane(s.ux, int(s.nx), int(s.ny));
  d["uy"] = plane(s.uy, int(s.nx), int(s.ny));
  d["wz"] = plane(s.wz, int(s.nx), int(s.ny));
  d["polyline"] = s.polyline ? py::object(points(*s.polyline)) : py::none();
  return d;
}

// Runs a CLI command in-process; returns (exit code, log text).
std::pair<int, std::string> run_command(const std::string& command, const harness::Options& o) {
  std::ostringstream log;
  int rc = harness::kExitUsage;
  if (command == "validate") rc = harness::cmd_validate(o, log);
  else if (command == "train") rc = harness::cmd_train(o, log);
  else if (command == "eval") rc = harness::cmd_eval(o, log);
  else if (command == "fields") rc = harness::cmd_fields(o, log);
  else log << "unknown command " << command << '\n';
  return {rc, log.str()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lattice Boltzmann fish-in-a-wake simulator and LSTM-DQN agent";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DivergedError>(m, "DivergedError", PyExc_RuntimeError);

  // fish kinematics
  m.def("half_width", &fish::half_width, py::arg("l_over_L"));
  m.def("solve_wave_coeffs", &fish::solve_wave_coeffs, py::arg("theta_prev"), py::arg("theta_next"),
        py::arg("lambda_prev"), py::arg("lambda_next"));
  m.def("waveform", &fish::waveform, py::arg("coeffs"), py::arg("zeta"));
  m.def("constraint_residuals", &fish::constraint_residuals, py::arg("coeffs"), py::arg("theta_prev"),
        py::arg("theta_next"), py::arg("lambda_prev"), py::arg("lambda_next"));

  // immersed boundary
  m.def("kernel", &fsi::kernel, py::arg("r"));
  m.def(
      "spread_force",
      [](const py::array_t<double>& markers, const py::array_t<double>& forces, std::vector<double> weights,
         int nx, int ny) {
        lbm::VectorField g(nx, ny);
        fsi::spread_force(to_points(markers), to_points(forces), weights, g);
        return py::make_tuple(plane(g.x, nx, ny), plane(g.y, nx, ny));
      },
      py::arg("markers"), py::arg("forces"), py::arg("weights"), py::arg("nx"), py::arg("ny"),
      "Spread marker forces onto an nx x ny grid; returns (gx, gy) as (ny, nx) arrays.");
  m.def(
      "interpolate",
      [](const py::array_t<double>& markers,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& fx,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& fy) {
        if (fx.ndim() != 2 || fy.ndim() != 2) throw std::invalid_argument("fields must be (ny, nx)");
        const int ny = int(fx.shape(0)), nx = int(fx.shape(1));
        return points(fsi::interpolate(to_points(markers), nx, ny,
                                       std::span<const double>(fx.data(), fx.size()),
                                       std::span<const double>(fy.data(), fy.size())));
      },
      py::arg("markers"), py::arg("fx"), py::arg("fy"));

  // flow solver
  py::class_<lbm::Solver>(m, "Solver", "D2Q9 solver in a periodic or channel box")
      .def(py::init([](int nx, int ny, double tau, bool periodic) {
             lbm::FlowConfig c;
             c.nx = nx;
             c.ny = ny;
             c.u_in = 0.0;
             c.tau_override = tau;
             if (periodic) c.west = c.east = c.north = c.south = lbm::Boundary::Periodic;
             return std::make_unique<lbm::Solver>(c);
           }),
           py::arg("nx"), py::arg("ny"), py::arg("tau"), py::arg("periodic") = true)
      .def("initialize_uniform",
           [](lbm::Solver& s, double rho, double ux, double uy) { s.initialize_uniform(rho, {ux, uy}); },
           py::arg("rho") = 1.0, py::arg("ux") = 0.0, py::arg("uy") = 0.0)
      .def(
          "set_body_force",
          [](lbm::Solver& s, double gx, double gy) {
            std::fill(s.force().x.begin(), s.force().x.end(), gx);
            std::fill(s.force().y.begin(), s.force().y.end(), gy);
          },
          py::arg("gx"), py::arg("gy"))
      .def(
          "step",
          [](lbm::Solver& s, int n) {
            py::gil_scoped_release release;
            for (int k = 0; k < n; ++k) s.step();
            s.update_macro();
          },
          py::arg("n") = 1)
      .def_property_readonly("tick", &lbm::Solver::tick)
      .def_property_readonly("tau", [](const lbm::Solver& s) { return s.config().tau(); })
      .def("fields", [](const lbm::Solver& s) {
        return snapshot_dict(io::make_snapshot(s.macro(), double(s.tick())));
      });

  // task
  py::class_<harness::RunConfig>(m, "RunConfig")
      .def_static("parse", [](const std::string& text) { return harness::parse_config(text); }, py::arg("text"))
      .def_static("load", &harness::load_config, py::arg("path"))
      .def("resolved", &harness::resolved_config)
      .def_property_readonly("seed", [](const harness::RunConfig& c) { return c.seed; })
      .def_property_readonly("episodes", [](const harness::RunConfig& c) { return c.episodes; });
  m.def("config_keys", [] {
    std::vector<std::tuple<std::string, std::string, std::string>> v;
    for (const auto& k : harness::config_keys()) v.emplace_back(k.key, k.default_value, k.doc);
    return v;
  });

  m.def(
      "reward",
      [](double x, double y, const harness::RunConfig& c) { return env::reward({x, y}, c.env); },
      py::arg("x"), py::arg("y"), py::arg("config"));

  py::class_<env::FishEnv>(m, "FishEnv", "Navigation environment (spins the flow up on construction)")
      .def(py::init([](const harness::RunConfig& c) {
             py::gil_scoped_release release;
             return std::make_unique<env::FishEnv>(c.env);
           }),
           py::arg("config"))
      .def("reset", [](env::FishEnv& e, std::uint64_t seed) { return window(e.reset(seed)); }, py::arg("seed"))
      .def(
          "reset_at", [](env::FishEnv& e, double x, double y) { return window(e.reset_at({x, y})); },
          py::arg("x"), py::arg("y"))
      .def(
          "step",
          [](env::FishEnv& e, int a) {
            env::StepResult r;
            {
              py::gil_scoped_release release;
              r = e.step(a);
            }
            return py::make_tuple(window(r.state), r.reward, r.done, env::to_string(r.outcome));
          },
          py::arg("action"))
      .def_property_readonly("action_count", &env::FishEnv::action_count)
      .def_property_readonly("tip", [](const env::FishEnv& e) { return std::make_pair(e.tip().x, e.tip().y); })
      .def_property_readonly("steps", &env::FishEnv::steps)
      .def_property_readonly("outcome", [](const env::FishEnv& e) { return env::to_string(e.outcome()); })
      .def("outline", [](const env::FishEnv& e) { return points(e.swimmer().outline()); })
      .def("fields", [](const env::FishEnv& e) {
        return snapshot_dict(io::make_snapshot(e.solver().macro(), double(e.solver().tick()),
                                               1.0 / e.config().cells_per_length));
      });

  // agent
  py::class_<dqn::Network>(m, "Network")
      .def(py::init([](int hidden, int layers, int actions, std::uint64_t seed) {
             dqn::NetShape s;
             s.hidden = hidden;
             s.layers = layers;
             s.actions = actions;
             dqn::Network n(s);
             n.initialize(seed);
             return n;
           }),
           py::arg("hidden") = 64, py::arg("layers") = 3, py::arg("actions") = 5, py::arg("seed") = 1)
      .def_static("load",
                  [](const std::filesystem::path& p) { return dqn::load_network(p, dqn::checkpoint_shape(p)); },
                  py::arg("path"))
      .def_property_readonly("size", &dqn::Network::size)
      .def("q_values",
           [](const dqn::Network& n, const py::array_t<double>& s) {
             const Eigen::VectorXd q = dqn::q_forward(n, to_window(s));
             return std::vector<double>(q.data(), q.data() + q.size());
           },
           py::arg("state"))
      .def("act", [](const dqn::Network& n, const py::array_t<double>& s) {
        return dqn::argmax(dqn::q_forward(n, to_window(s)));
      });
  m.def("epsilon_at", [](std::uint64_t step, double eps_max, double eps_min, double decay) {
    dqn::Schedule s;
    s.eps_max = eps_max;
    s.eps_min = eps_min;
    s.eps_decay = decay;
    return dqn::epsilon_at(step, s);
  }, py::arg("step"), py::arg("eps_max") = 1.0, py::arg("eps_min") = 0.05, py::arg("eps_decay") = 4.75e-5);

  // files
  m.def("read_snapshot", [](const std::filesystem::path& p) { return snapshot_dict(io::read_snapshot(p)); },
        py::arg("path"));
  m.def(
      "write_snapshot",
      [](const std::filesystem::path& p, const py::dict& d) {
        io::Snapshot s;
        auto arr = [&](const char* k) {
          auto a = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(d[k]);
          if (!a) throw std::invalid_argument(std::string("missing plane ") + k);
          return std::vector<double>(a.data(), a.data() + a.size());
        };
        s.rho = arr("rho");
        s.ux = arr("ux");
        s.uy = arr("uy");
        s.wz = arr("wz");
        auto rho = py::array::ensure(d["rho"]);
        s.ny = std::uint32_t(rho.shape(0));
        s.nx = std::uint32_t(rho.shape(1));
        s.dx = d.contains("dx") ? d["dx"].cast<double>() : 1.0;
        s.t = d.contains("t") ? d["t"].cast<double>() : 0.0;
        if (d.contains("polyline") && !d["polyline"].is_none())
          s.polyline = to_points(d["polyline"].cast<py::array_t<double>>());
        io::write_snapshot(p, s);
      },
      py::arg("path"), py::arg("snapshot"));

  // validation and commands
  m.def("validate", [](const std::string& suite) {
    std::vector<validation::Row> rows;
    auto add = [&](auto r) { rows.push_back(r); };
    auto many = [&](const std::vector<validation::Row>& v) { rows.insert(rows.end(), v.begin(), v.end()); };
    py::gil_scoped_release release;
    if (suite == "poiseuille") add(validation::poiseuille());
    else if (suite == "taylor_green") add(validation::taylor_green());
    else if (suite == "ibm") many(validation::ibm_operators());
    else if (suite == "waveform") many(validation::waveform());
    else if (suite == "body_shape") add(validation::body_shape());
    else if (suite == "strouhal") many(validation::strouhal());
    else if (suite == "self_propulsion") add(validation::self_propulsion());
    else throw ConfigError("unknown suite " + suite);
    py::gil_scoped_acquire acquire;
    py::list out;
    for (const auto& r : rows)
      out.append(py::dict(py::arg("test") = r.test, py::arg("metric") = r.metric, py::arg("value") = r.value,
                          py::arg("bound") = r.bound, py::arg("passed") = r.pass));
    return out;
  }, py::arg("suite"));

  m.def(
      "run",
      [](const std::string& command, std::optional<std::filesystem::path> config, std::optional<std::uint64_t> seed,
         std::optional<std::filesystem::path> out, std::optional<std::string> sweep, std::optional<int> cadence,
         std::optional<int> episodes, std::optional<int> ticks, std::optional<std::filesystem::path> checkpoint,
         bool resume, bool untrained, bool spinup, std::vector<std::string> only) {
        harness::Options o{config, seed, out, sweep, cadence, episodes, ticks, checkpoint, resume, untrained,
                           spinup, false, only};
        py::gil_scoped_release release;
        return run_command(command, o);
      },
      py::arg("command"), py::arg("config") = py::none(), py::arg("seed") = py::none(),
      py::arg("out") = py::none(), py::arg("sweep") = py::none(), py::arg("cadence") = py::none(),
      py::arg("episodes") = py::none(), py::arg("ticks") = py::none(), py::arg("checkpoint") = py::none(),
      py::arg("resume") = false, py::arg("untrained") = false, py::arg("spinup") = false,
      py::arg("only") = std::vector<std::string>{},
      "Run a CLI command in-process. Returns (exit_code, log).");
}
