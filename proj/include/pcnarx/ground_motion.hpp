#pragma once

#include <cstddef>
#include <random>

#include <Eigen/Dense>

namespace pcnarx {

/// Standard gravity (m/s^2); Arias intensities are given in g*s.
inline constexpr double kGravity = 9.81;
/// Filter frequencies are clamped from below to this value (rad/s).
inline constexpr double kMinFilterFrequency = 2.0 * 3.14159265358979323846 * 0.3;

/// Physical parameters of the modulated filtered white-noise model.
struct GroundMotionParams {
  double arias = 0.0;        // expected Arias intensity (g*s)
  double d595 = 0.0;         // 5-95% intensity duration (s)
  double t_mid = 0.0;        // 45% intensity instant (s)
  double omega_mid = 0.0;    // filter frequency at t_mid (rad/s)
  double omega_prime = 0.0;  // filter frequency slope (rad/s^2)
  double zeta_f = 0.0;       // filter damping ratio

  /// From frequencies in Hz and Hz/s, the usual way they are tabulated.
  static GroundMotionParams from_hz(double arias, double d595, double t_mid, double f_mid, double f_prime,
                                    double zeta_f);
  void validate() const;
  /// omega_mid + omega_prime (tau - t_mid), clamped to kMinFilterFrequency.
  double filter_frequency(double tau) const;
};

/// q(t) = a1 t^(a2 - 1) exp(-a3 t).
struct ModulationAlpha {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;

  double operator()(double t) const;
  /// Fraction of the total integral of q^2 reached at time t.
  double cumulative_fraction(double t) const;
  /// Instant at which the fraction p of the integral of q^2 is reached.
  double fraction_instant(double p) const;
};

/// Integral of x^2 over time (m^2/s^3) matching an Arias intensity in g*s.
double arias_energy(double arias);

/// Solve for the modulation reproducing the 45% instant t_mid, the 5-95%
/// duration and the Arias energy. Throws DomainError when no shape in the
/// bracket fits the duration ratio.
ModulationAlpha modulation_alpha(double arias, double d595, double t_mid);

/// Unit-variance filtered white noise (before modulation) on t_k = k dt,
/// k = 0..n-1, with one standard normal impulse per grid step. The value at
/// t_0 is 0 since no impulse has arrived yet.
Eigen::VectorXd normalized_filtered_noise(const GroundMotionParams& p, double dt, std::size_t n,
                                          std::mt19937_64& rng);

/// Modulated process q(t) times normalized_filtered_noise.
Eigen::VectorXd synthesize_ground_motion(const GroundMotionParams& p, double dt, std::size_t n,
                                         std::mt19937_64& rng);

}  // namespace pcnarx
