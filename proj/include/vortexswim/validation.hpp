#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vortexswim/lbm.hpp"

// Solver benchmarks against analytic or literature oracles. Each returns
// one or more rows of (test, metric, value, bound, pass).
namespace vortexswim::validation {

struct Row {
  std::string test;
  std::string metric;
  double value = 0.0;
  std::string bound;  // human-readable, e.g. "< 0.01" or "[0.18, 0.21]"
  bool pass = false;
  double seconds = 0.0;
  std::string note;
};

// Force-driven channel, 64 x 32, no-slip walls: centreline velocity error.
Row poiseuille();
// Kinetic-energy decay rate of the 64^2 Taylor-Green vortex vs 2 nu |k|^2.
Row taylor_green();

struct StrouhalSetup {
  double diameter = 16.0;  // cells
  double u_in = 0.1;
  double reynolds = 200.0;
  double length = 25.0;    // domain, in diameters
  double width = 10.0;
  double centre = 5.0;     // cylinder x, in diameters
  int ramp = 8000;
  int ticks = 30000;
};
// Shedding frequency from the spectral peak of the lift signal over the
// second half of the run. Two rows: Strouhal number and lift oscillation.
std::vector<Row> strouhal(const StrouhalSetup& s = {});

// <spread(F), u> vs <F, interp(u)>, and exactness on a linear field.
std::vector<Row> ibm_operators(std::uint64_t seed = 1);
// Six waveform constraints on random draws; C2 joins between half cycles.
std::vector<Row> waveform(std::uint64_t seed = 1, int draws = 1000);
// half_width(0) and half_width(1).
Row body_shape();
// tau of the flow setup must exceed 1/2.
Row stability_gate(const lbm::FlowConfig& cfg);

struct PropulsionSetup {
  double length = 32.0;  // body length in cells
  double period = 640.0; // ticks
  double tau = 0.52;
  double amplitude = 0.5;
  int cycles = 10;
};
// Free swimmer in a quiescent periodic channel: forward COM speed, in body
// lengths per cycle, averaged over the cycles after the first.
Row self_propulsion(const PropulsionSetup& s = {});

// Dominant frequency (cycles per sample) of a real signal: Hann window,
// dense DFT scan, parabolic peak refinement.
double dominant_frequency(const std::vector<double>& signal);

std::string csv_header();
std::string csv_row(const Row& r);

}  // namespace vortexswim::validation
