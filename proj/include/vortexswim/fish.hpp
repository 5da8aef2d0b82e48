#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <span>
#include <vector>

#include "vortexswim/common.hpp"

// Body shape and prescribed midline undulation of the swimmer.
//
// The deflection angle along the midline is theta(l, t) = (l/L) p(zeta),
// where p is a quintic waveform rebuilt at the start of every half cycle
// and zeta = (lambda/T)(t - t0) - l/L is the traveling-wave phase, so the
// tail replays the waveform the head saw (l/L) T / lambda ticks earlier.
// The waveform is the function called h in some write-ups of this model.
namespace vortexswim::fish {

// Half-width w/L at arc-length fraction l/L, clamped below at zero.
// Throws DomainError outside [0, 1].
double half_width(double l_over_L);

using WaveCoefficients = std::array<double, 6>;

// The unique quintic with
//   p(0) = theta_prev,       p(lambda/2) = theta_next,
//   p'(0) = 0,               p'(lambda/2) = 0,
//   p''(0) = -theta_prev (2 pi / lambda_prev)^2,
//   p''(lambda/2) = -theta_next (2 pi / lambda)^2.
// Throws DomainError for non-positive wavelengths.
WaveCoefficients solve_wave_coeffs(double theta_prev, double theta_next, double lambda_prev,
                                   double lambda);

double waveform(const WaveCoefficients& c, double zeta);
double waveform_d1(const WaveCoefficients& c, double zeta);
double waveform_d2(const WaveCoefficients& c, double zeta);

// Residuals of the six waveform constraints, scaled by
// max(1, |theta_prev|, |theta_next|).
std::array<double, 6> constraint_residuals(const WaveCoefficients& c, double theta_prev,
                                           double theta_next, double lambda_prev,
                                           double lambda);

// Kinematic plan for one half cycle.
struct WavePlan {
  int n = 1;                  // half-cycle index, 1-based
  double theta_prev = 0.0;    // max deflection of half cycle n-1 (rad, signed)
  double theta_next = 0.0;    // max deflection of half cycle n (rad, signed)
  double lambda_prev = 1.0;   // wavelengths in body lengths
  double lambda = 1.0;
  double period = 1.0;        // T_n in ticks
  double t_start = 0.0;       // t_n^0 in ticks
  WaveCoefficients coeffs{};

  double t_end() const { return t_start + 0.5 * period; }
  // Phase in the waveform's domain.
  double phase(double l_over_L, double t) const {
    return lambda / period * (t - t_start) - l_over_L;
  }
  // Fills coeffs from the other fields.
  void solve();
};

// (l/L) p(zeta) for a single plan; the caller guarantees that the phase
// lies in [0, lambda/2], which for l = 0 means t in [t0, t0 + T/2].
double deflection_angle(double l_over_L, double t, const WavePlan& plan);

struct BodyShape {
  double length = 40.0;  // L in grid cells
  int stations = 101;    // midline stations, head (l = 0) to tail (l = L)

  std::vector<double> arc_stations() const;
  double width_at(double l) const { return length * half_width(std::clamp(l / length, 0.0, 1.0)); }
};

struct MidlineState {
  std::vector<double> arc;      // l_k
  std::vector<double> theta;    // deflection angle per station
  std::vector<double> lateral;  // p_l(l_k)
  std::vector<double> axial;    // x_l(l_k)
};

// Cumulative trapezoid of (cos theta, sin theta) with each segment rescaled
// to its arc-length increment, which makes segment lengths exact; the
// segment direction is then the mean station angle. Exact for constant theta.
MidlineState integrate_midline(std::span<const double> arc, std::span<const double> theta);

// Sequence of half-cycle plans with a fixed wavelength and period.
// Retains enough history to evaluate the tail, whose phase lags the head by
// up to T / lambda ticks.
class Undulation {
 public:
  Undulation(double length, double wavelength, double period);

  double length() const { return length_; }
  double wavelength() const { return wavelength_; }
  double period() const { return period_; }
  int half_cycles() const { return plans_.empty() ? 0 : plans_.back().n; }
  const WavePlan& current() const { return plans_.back(); }
  const std::deque<WavePlan>& plans() const { return plans_; }

  // Appends the next half-cycle plan starting where the current one ends
  // (t = 0 for the first plan, with theta_prev = 0).
  const WavePlan& begin_half_cycle(double theta_max);

  // Deflection at arc length l (cells) and time t (ticks), looked up in the
  // plan whose window contains the retarded phase. Before the first plan the
  // body is straight.
  double deflection(double l, double t) const;
  double deflection_rate(double l, double t) const;
  double deflection_accel(double l, double t) const;

  MidlineState midline(double t, std::span<const double> arc) const;

 private:
  const WavePlan* plan_for(double l_over_L, double t, double& zeta) const;

  double length_;
  double wavelength_;
  double period_;
  std::deque<WavePlan> plans_;
};

}  // namespace vortexswim::fish
