#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vortexswim/dqn.hpp"
#include "vortexswim/env.hpp"

// Run configuration: flat `section.key = value` text, '#' comments. Every
// key has a default; unknown or repeated keys are errors.
namespace vortexswim::harness {

struct Sweep {
  double a = 3.0;
  double b = 5.0;
  int n = 11;
};
// "A:B:N" with N >= 1 and, for N > 1, A <= B.
Sweep parse_sweep(std::string_view spec);
std::string to_string(const Sweep& s);

struct RunConfig {
  env::EnvConfig env;
  dqn::AgentConfig agent;

  int episodes = 3000;
  int checkpoint_every = 100;
  int trajectory_every = 100;
  std::uint64_t seed = 1;

  int fields_ticks = 1000;
  int cadence = 100;
  double fields_x = 4.0;  // fish start for field output, body lengths
  double fields_y = 0.0;

  Sweep sweep;
  double eval_y = 0.0;

  std::string source;  // the text this was parsed from, verbatim
};

struct KeyInfo {
  std::string key;
  std::string doc;
  std::string default_value;
};
const std::vector<KeyInfo>& config_keys();

// Throws ConfigError naming the line for malformed lines, unknown or
// repeated keys and unparsable values. Relative paths are resolved against
// `base`.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base = {});
// Throws IoError when the file cannot be read.
RunConfig load_config(const std::filesystem::path& path);

// Every key with its effective value, in table order.
std::string resolved_config(const RunConfig& c);

std::uint64_t fnv1a(std::string_view s);
std::string hex64(std::uint64_t v);

}  // namespace vortexswim::harness
