#include "vortexswim/fish.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace vortexswim::fish {

double half_width(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("half_width: l/L outside [0, 1]");
  const double w = 0.2610 * std::sqrt(s) - 0.3112 * s + 0.1371 * s * s - 0.0791 * s * s * s -
                   0.0078 * s * s * s * s;
  return std::max(w, 0.0);
}

WaveCoefficients solve_wave_coeffs(double theta_prev, double theta_next, double lambda_prev,
                                   double lambda) {
  if (!(lambda_prev > 0.0) || !(lambda > 0.0))
    throw DomainError("solve_wave_coeffs: wavelengths must be positive");
  const double z = 0.5 * lambda;
  Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> b;
  for (int k = 0; k < 6; ++k) {
    a(1, k) = std::pow(z, k);
    if (k >= 1) a(3, k) = k * std::pow(z, k - 1);
    if (k >= 2) a(5, k) = k * (k - 1) * std::pow(z, k - 2);
  }
  a(0, 0) = 1.0;
  a(2, 1) = 1.0;
  a(4, 2) = 2.0;
  const double kp = 2.0 * kPi / lambda_prev;
  const double kn = 2.0 * kPi / lambda;
  b << theta_prev, theta_next, 0.0, 0.0, -theta_prev * kp * kp, -theta_next * kn * kn;
  Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(a);
  if (!lu.isInvertible()) throw Error("solve_wave_coeffs: singular constraint system");
  const Eigen::Matrix<double, 6, 1> c = lu.solve(b);
  WaveCoefficients out;
  for (int k = 0; k < 6; ++k) out[k] = c[k];
  return out;
}

double waveform(const WaveCoefficients& c, double z) {
  return c[0] + z * (c[1] + z * (c[2] + z * (c[3] + z * (c[4] + z * c[5]))));
}

double waveform_d1(const WaveCoefficients& c, double z) {
  return c[1] + z * (2 * c[2] + z * (3 * c[3] + z * (4 * c[4] + z * 5 * c[5])));
}

double waveform_d2(const WaveCoefficients& c, double z) {
  return 2 * c[2] + z * (6 * c[3] + z * (12 * c[4] + z * 20 * c[5]));
}

std::array<double, 6> constraint_residuals(const WaveCoefficients& c, double theta_prev,
                                           double theta_next, double lambda_prev,
                                           double lambda) {
  const double z = 0.5 * lambda;
  const double kp = 2.0 * kPi / lambda_prev;
  const double kn = 2.0 * kPi / lambda;
  const double scale = std::max({1.0, std::abs(theta_prev), std::abs(theta_next)});
  // Curvature constraints carry a (2 pi / lambda)^2 factor; normalise it out.
  return {std::abs(waveform(c, 0.0) - theta_prev) / scale,
          std::abs(waveform(c, z) - theta_next) / scale,
          std::abs(waveform_d1(c, 0.0)) / scale,
          std::abs(waveform_d1(c, z)) / scale,
          std::abs(waveform_d2(c, 0.0) + theta_prev * kp * kp) / (scale * kp * kp),
          std::abs(waveform_d2(c, z) + theta_next * kn * kn) / (scale * kn * kn)};
}

void WavePlan::solve() {
  if (!(period > 0.0)) throw DomainError("WavePlan: period must be positive");
  coeffs = solve_wave_coeffs(theta_prev, theta_next, lambda_prev, lambda);
}

double deflection_angle(double l_over_L, double t, const WavePlan& plan) {
  return l_over_L * waveform(plan.coeffs, plan.phase(l_over_L, t));
}

std::vector<double> BodyShape::arc_stations() const {
  if (stations < 2) throw ConfigError("body needs at least 2 midline stations");
  std::vector<double> s(stations);
  for (int k = 0; k < stations; ++k) s[k] = length * k / (stations - 1);
  s.back() = length;
  return s;
}

MidlineState integrate_midline(std::span<const double> arc, std::span<const double> theta) {
  MidlineState m;
  const std::size_t n = arc.size();
  m.arc.assign(arc.begin(), arc.end());
  m.theta.assign(theta.begin(), theta.end());
  m.lateral.assign(n, 0.0);
  m.axial.assign(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    const double dl = arc[k] - arc[k - 1];
    const double c = 0.5 * (std::cos(theta[k]) + std::cos(theta[k - 1]));
    const double s = 0.5 * (std::sin(theta[k]) + std::sin(theta[k - 1]));
    const double r = std::hypot(c, s);
    // r = |cos((theta_k - theta_{k-1}) / 2)|, close to 1 for resolved midlines.
    const double scale = r > 0.0 ? dl / r : 0.0;
    m.axial[k] = m.axial[k - 1] + c * scale;
    m.lateral[k] = m.lateral[k - 1] + s * scale;
  }
  return m;
}

Undulation::Undulation(double length, double wavelength, double period)
    : length_(length), wavelength_(wavelength), period_(period) {
  if (!(length > 0.0)) throw ConfigError("body length must be positive");
  if (!(wavelength > 0.0)) throw ConfigError("wavelength must be positive");
  if (!(period > 0.0)) throw ConfigError("undulation period must be positive");
}

const WavePlan& Undulation::begin_half_cycle(double theta_max) {
  WavePlan p;
  p.lambda = wavelength_;
  p.period = period_;
  if (plans_.empty()) {
    p.n = 1;
    p.lambda_prev = wavelength_;
  } else {
    const WavePlan& last = plans_.back();
    p.n = last.n + 1;
    p.theta_prev = last.theta_next;
    p.lambda_prev = last.lambda;
    p.t_start = last.t_end();
  }
  p.theta_next = theta_max;
  p.solve();
  plans_.push_back(p);
  // The tail lags by T / lambda ticks; keep that many half cycles plus slack.
  const auto keep = std::size_t(std::ceil(2.0 / wavelength_)) + 2;
  while (plans_.size() > keep) plans_.pop_front();
  return plans_.back();
}

const WavePlan* Undulation::plan_for(double s, double t, double& zeta) const {
  for (auto it = plans_.rbegin(); it != plans_.rend(); ++it) {
    zeta = it->phase(s, t);
    if (zeta >= 0.0) {
      zeta = std::min(zeta, 0.5 * it->lambda);
      return &*it;
    }
  }
  return nullptr;
}

double Undulation::deflection(double l, double t) const {
  const double s = l / length_;
  double zeta = 0.0;
  const WavePlan* p = plan_for(s, t, zeta);
  if (p == nullptr) return plans_.empty() ? 0.0 : s * plans_.front().theta_prev;
  return s * waveform(p->coeffs, zeta);
}

double Undulation::deflection_rate(double l, double t) const {
  const double s = l / length_;
  double zeta = 0.0;
  const WavePlan* p = plan_for(s, t, zeta);
  if (p == nullptr) return 0.0;
  return s * waveform_d1(p->coeffs, zeta) * p->lambda / p->period;
}

double Undulation::deflection_accel(double l, double t) const {
  const double s = l / length_;
  double zeta = 0.0;
  const WavePlan* p = plan_for(s, t, zeta);
  if (p == nullptr) return 0.0;
  const double k = p->lambda / p->period;
  return s * waveform_d2(p->coeffs, zeta) * k * k;
}

MidlineState Undulation::midline(double t, std::span<const double> arc) const {
  std::vector<double> theta(arc.size());
  for (std::size_t k = 0; k < arc.size(); ++k) theta[k] = deflection(arc[k], t);
  return integrate_midline(arc, theta);
}

}  // namespace vortexswim::fish
