#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "pcnarx/errors.hpp"

namespace pcnarx {

struct Rk45Options {
  double rtol = 1e-3;
  double atol = 1e-6;
  double h_max = std::numeric_limits<double>::infinity();
  double h_min = 1e-12;  // relative to the integration span
  /// Steps never cross a multiple of this spacing (0 disables). Set it to
  /// the sampling step when the excitation is interpolated between samples.
  double breakpoints = 0.0;
};

/// Piecewise-linear interpolation of a series sampled on t_k = k dt; held
/// constant beyond the ends.
inline double interpolate_series(const Eigen::VectorXd& s, double dt, double t) {
  if (s.size() == 0) return 0.0;
  const double u = t / dt;
  if (u <= 0.0) return s[0];
  const auto last = s.size() - 1;
  if (u >= static_cast<double>(last)) return s[last];
  const auto k = static_cast<Eigen::Index>(u);
  const double f = u - static_cast<double>(k);
  return (1.0 - f) * s[k] + f * s[k + 1];
}

/// Dormand-Prince 5(4) with the free 4th-order dense output. Integrates
/// dy/dt = f(t, y, x(t)) and returns the state at t_k = k dt, k = 0..n-1
/// (one row per instant).
template <int N>
Eigen::Matrix<double, Eigen::Dynamic, N> integrate_rk45(
    const std::function<Eigen::Matrix<double, N, 1>(double, const Eigen::Matrix<double, N, 1>&, double)>& rhs,
    const std::function<double(double)>& excitation, const Eigen::Matrix<double, N, 1>& y0, double dt,
    std::size_t n, const Rk45Options& opt = {}) {
  using State = Eigen::Matrix<double, N, 1>;
  if (!(opt.rtol > 0.0) || !(opt.atol >= 0.0)) throw ArgumentError("rk45: tolerances must be positive");
  if (!(dt > 0.0) || n == 0) throw ArgumentError("rk45: need dt > 0 and at least one output instant");

  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  // Continuous extension: weight of stage r is sum_m kDense[r][m] s^(m+1).
  static constexpr double kDense[7][4] = {
      {1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0},
      {0.0, 0.0, 0.0, 0.0},
      {0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0},
      {0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0},
      {0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0},
      {0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0},
      {0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0}};

  Eigen::Matrix<double, Eigen::Dynamic, N> out(static_cast<Eigen::Index>(n), y0.size());
  out.row(0) = y0.transpose();
  if (n == 1) return out;

  const double t_end = dt * static_cast<double>(n - 1);
  const double h_min = opt.h_min * t_end;
  const double h_max = std::min(opt.h_max, t_end);
  auto f = [&](double t, const State& y) { return rhs(t, y, excitation(t)); };

  double t = 0.0;
  State y = y0;
  State k1 = f(t, y);
  // Initial step from the usual scale heuristic.
  auto scale = [&](const State& a, const State& b) {
    return (opt.atol + opt.rtol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix().eval();
  };
  double h;
  {
    const State sc = scale(y, y);
    const double d0 = (y.array() / sc.array()).matrix().norm();
    const double d1 = (k1.array() / sc.array()).matrix().norm();
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::clamp(h, h_min, h_max);
  }

  std::size_t next = 1;
  const double dim_norm = std::sqrt(static_cast<double>(y0.size()));
  while (next < n) {
    if (t_end - t <= 1e-12 * dt) {
      for (; next < n; ++next) out.row(static_cast<Eigen::Index>(next)) = y.transpose();
      break;
    }
    double h_try = std::min(h, t_end - t);
    double t_stop = t + h_try;
    bool clipped = false;
    if (opt.breakpoints > 0.0) {
      const double next_bp = opt.breakpoints * (std::floor(t / opt.breakpoints * (1.0 + 1e-12) + 1e-9) + 1.0);
      if (next_bp < t_stop) {
        h_try = next_bp - t;
        t_stop = next_bp;
        clipped = true;
      }
    }
    const double h_prop = h;
    h = h_try;
    const State k2 = f(t + c2 * h, y + h * (a21 * k1));
    const State k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const State k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const State k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const State k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const State y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const State k7 = f(t + h, y_new);
    const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = (err.array() / scale(y, y_new).array()).matrix().norm() / dim_norm;

    if (!std::isfinite(en)) {
      if (h <= h_min) throw StiffnessError("rk45: non-finite state at t = " + std::to_string(t), t);
      h = std::max(h_min, 0.25 * h);
      continue;
    }
    if (en <= 1.0) {
      const double t_new = clipped ? t_stop : t + h;
      // Dense output on [t, t_new].
      while (next < n) {
        const double tk = dt * static_cast<double>(next);
        if (tk > t_new + 1e-12 * dt) break;
        const double s = std::clamp((tk - t) / h, 0.0, 1.0);
        double w[7];
        for (int r = 0; r < 7; ++r)
          w[r] = s * (kDense[r][0] + s * (kDense[r][1] + s * (kDense[r][2] + s * kDense[r][3])));
        out.row(static_cast<Eigen::Index>(next)) =
            (y + h * (w[0] * k1 + w[2] * k3 + w[3] * k4 + w[4] * k5 + w[5] * k6 + w[6] * k7)).transpose();
        ++next;
      }
      t = t_new;
      y = y_new;
      k1 = k7;
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      // a step shortened to hit a breakpoint says little about the next one
      h = std::clamp(clipped ? std::max(h * fac, h_prop) : h * fac, h_min, h_max);
    } else {
      if (h <= h_min) throw StiffnessError("rk45: step size underflow at t = " + std::to_string(t), t);
      h = std::max(h_min, h * std::clamp(0.9 * std::pow(en, -0.2), 0.1, 1.0));
    }
  }
  return out;
}

}  // namespace pcnarx
