#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vortexswim/config.hpp"

// Command implementations behind the CLI. Each command writes only inside
// its run directory and returns a process exit code.
namespace vortexswim::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct Options {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> sweep;
  std::optional<int> cadence;
  std::optional<int> episodes;  // overrides train.episodes
  std::optional<int> ticks;     // overrides fields.ticks
  std::optional<std::filesystem::path> checkpoint;
  bool resume = false;
  bool untrained = false;  // eval/fields with a freshly initialized network
  bool spinup = false;     // fields: write the warm-start population file
  bool quiet = false;
  std::vector<std::string> only;  // validate: subset of suites
};

int cmd_validate(const Options& o, std::ostream& log);
int cmd_train(const Options& o, std::ostream& log);
int cmd_eval(const Options& o, std::ostream& log);
int cmd_fields(const Options& o, std::ostream& log);

// Names accepted by `validate --only`.
const std::vector<std::string>& validation_suites();

// Rough wall-clock cost of training, from a per-cell-tick constant.
struct CostEstimate {
  double seconds_per_step = 0.0;
  double spinup_seconds = 0.0;
  double total_seconds = 0.0;
};
CostEstimate estimate_training_cost(const RunConfig& c);

struct Manifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string build;
  std::string started;
  std::string finished;
  std::vector<std::filesystem::path> files;  // relative to the run directory
};
// Writes manifest.json atomically; lists every regular file under `dir`.
void write_manifest(const std::filesystem::path& dir, Manifest m);

std::string build_id();
std::string utc_now();

}  // namespace vortexswim::harness
