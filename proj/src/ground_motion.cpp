#include "pcnarx/ground_motion.hpp"

#include <cmath>
#include <complex>
#include <deque>
#include <string>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "pcnarx/errors.hpp"

namespace pcnarx {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
// Shape bracket for k = 2 a2 - 1 (q^2 is a gamma density with shape k).
constexpr double kShapeLo = 0.02;
constexpr double kShapeHi = 1e4;

double duration_ratio(double k) {
  using boost::math::gamma_p_inv;
  return (gamma_p_inv(k, 0.95) - gamma_p_inv(k, 0.05)) / gamma_p_inv(k, 0.45);
}

}  // namespace

GroundMotionParams GroundMotionParams::from_hz(double arias, double d595, double t_mid, double f_mid,
                                               double f_prime, double zeta_f) {
  return {arias, d595, t_mid, kTwoPi * f_mid, kTwoPi * f_prime, zeta_f};
}

void GroundMotionParams::validate() const {
  if (!(arias > 0.0)) throw ArgumentError("ground motion: Arias intensity must be positive");
  if (!(d595 > 0.0)) throw ArgumentError("ground motion: D5-95 must be positive");
  if (!(t_mid > 0.0)) throw ArgumentError("ground motion: t_mid must be positive");
  if (!(zeta_f > 0.0 && zeta_f < 1.0)) throw DomainError("ground motion: filter damping must lie in (0, 1)");
  if (!std::isfinite(omega_mid) || !std::isfinite(omega_prime))
    throw ArgumentError("ground motion: non-finite filter frequency");
}

double GroundMotionParams::filter_frequency(double tau) const {
  return std::max(kMinFilterFrequency, omega_mid + omega_prime * (tau - t_mid));
}

double ModulationAlpha::operator()(double t) const {
  if (t <= 0.0) return a2 > 1.0 ? 0.0 : (a2 == 1.0 ? a1 : std::numeric_limits<double>::infinity());
  return a1 * std::pow(t, a2 - 1.0) * std::exp(-a3 * t);
}

double ModulationAlpha::cumulative_fraction(double t) const {
  if (t <= 0.0) return 0.0;
  return boost::math::gamma_p(2.0 * a2 - 1.0, 2.0 * a3 * t);
}

double ModulationAlpha::fraction_instant(double p) const {
  return boost::math::gamma_p_inv(2.0 * a2 - 1.0, p) / (2.0 * a3);
}

double arias_energy(double arias) { return 2.0 * kGravity * kGravity * arias / 3.14159265358979323846; }

ModulationAlpha modulation_alpha(double arias, double d595, double t_mid) {
  if (!(arias > 0.0 && d595 > 0.0 && t_mid > 0.0))
    throw ArgumentError("modulation_alpha: Arias intensity, D5-95 and t_mid must be positive");
  const double target = d595 / t_mid;
  // The ratio decreases monotonically in the shape.
  auto f = [&](double logk) { return duration_ratio(std::exp(logk)) - target; };
  const double flo = f(std::log(kShapeLo));
  const double fhi = f(std::log(kShapeHi));
  if (!(flo >= 0.0 && fhi <= 0.0))
    throw DomainError("modulation_alpha: no envelope shape fits D5-95 / t_mid = " + std::to_string(target));
  std::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(
      f, std::log(kShapeLo), std::log(kShapeHi), flo, fhi,
      boost::math::tools::eps_tolerance<double>(52), iters);
  const double k = std::exp(0.5 * (lo + hi));
  ModulationAlpha a;
  a.a2 = 0.5 * (k + 1.0);
  a.a3 = boost::math::gamma_p_inv(k, 0.45) / (2.0 * t_mid);
  // integral of q^2 = a1^2 Gamma(k) / (2 a3)^k
  const double log_a1sq = std::log(arias_energy(arias)) + k * std::log(2.0 * a.a3) - boost::math::lgamma(k);
  a.a1 = std::exp(0.5 * log_a1sq);
  return a;
}

Eigen::VectorXd normalized_filtered_noise(const GroundMotionParams& p, double dt, std::size_t n,
                                          std::mt19937_64& rng) {
  p.validate();
  if (!(dt > 0.0)) throw ArgumentError("ground motion: dt must be positive");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sq = std::sqrt(1.0 - p.zeta_f * p.zeta_f);

  // Impulse i at t_i = i dt contributes a_i U_i Im(z_i(t)), z_i advanced by a
  // fixed complex factor per step.
  struct Impulse {
    std::complex<double> z;
    std::complex<double> step;
    double amp;
    double u;
  };
  std::deque<Impulse> active;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    double num = 0.0, den = 0.0;
    for (auto& imp : active) {
      imp.z *= imp.step;
      const double h = imp.amp * imp.z.imag();
      num += h * imp.u;
      den += h * h;
    }
    if (den > 0.0) out[static_cast<Eigen::Index>(k)] = num / std::sqrt(den);
    while (!active.empty() && std::norm(active.front().z) < 1e-18) active.pop_front();

    const double wf = p.filter_frequency(dt * static_cast<double>(k));
    Impulse imp;
    imp.z = 1.0;
    imp.step = std::exp(std::complex<double>(-p.zeta_f * wf, wf * sq) * dt);
    imp.amp = wf / sq;
    imp.u = gauss(rng);
    active.push_back(imp);
  }
  return out;
}

Eigen::VectorXd synthesize_ground_motion(const GroundMotionParams& p, double dt, std::size_t n,
                                         std::mt19937_64& rng) {
  const ModulationAlpha q = modulation_alpha(p.arias, p.d595, p.t_mid);
  Eigen::VectorXd x = normalized_filtered_noise(p, dt, n, rng);
  for (std::size_t k = 1; k < n; ++k) x[static_cast<Eigen::Index>(k)] *= q(dt * static_cast<double>(k));
  x[0] = 0.0;
  return x;
}

}  // namespace pcnarx
