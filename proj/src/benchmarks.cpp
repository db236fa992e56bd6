#include "pcnarx/benchmarks.hpp"

#include <cmath>
#include <numbers>

#include "pcnarx/errors.hpp"
#include "pcnarx/parallel.hpp"

namespace pcnarx {

std::string to_string(SystemId id) {
  switch (id) {
    case SystemId::quarter_car: return "quarter_car";
    case SystemId::duffing: return "duffing";
    case SystemId::boucwen: return "boucwen";
  }
  return "unknown";
}

SystemId system_from_string(const std::string& name) {
  if (name == "quarter_car") return SystemId::quarter_car;
  if (name == "duffing") return SystemId::duffing;
  if (name == "boucwen" || name == "bouc_wen") return SystemId::boucwen;
  throw ArgumentError("unknown system '" + name + "' (expected quarter_car, duffing or boucwen)");
}

Eigen::Vector4d quarter_car_rhs(double, const Eigen::Vector4d& s, const Eigen::VectorXd& xi, double z) {
  const double ks = xi[0], ku = xi[1], ms = xi[2], mu = xi[3], c = xi[4];
  const double d = s[0] - s[2];
  const double f = ks * d * d * d + c * (s[1] - s[3]);
  return {s[1], -f / ms, s[3], (f + ku * (z - s[2])) / mu};
}

Eigen::Vector2d duffing_rhs(double, const Eigen::Vector2d& s, const Eigen::VectorXd& xi, double x) {
  const double eps = xi[0];
  const double w = kDuffingOmega;
  return {s[1], -x - 2.0 * kDuffingZeta * w * s[1] - w * w * (s[0] + eps * s[0] * s[0] * s[0])};
}

Eigen::Vector3d boucwen_rhs(double, const Eigen::Vector3d& s, const Eigen::VectorXd& xi, double x) {
  const double w = xi[0], alpha = xi[1];
  const double v = s[1], z = s[2];
  const double az = std::abs(z);
  const double zn1 = kBoucWenN == 1.0 ? 1.0 : std::pow(az, kBoucWenN - 1.0);
  const double zn = kBoucWenN == 1.0 ? az : std::pow(az, kBoucWenN);
  const double acc = -x - 2.0 * kBoucWenZeta * w * v - w * w * (kBoucWenRho * s[0] + (1.0 - kBoucWenRho) * z);
  const double zdot = kBoucWenGamma * v - alpha * std::abs(v) * zn1 * z - kBoucWenBeta * v * zn;
  return {v, acc, zdot};
}

InputModel ground_motion_input_model() {
  std::vector<std::string> names{"Ia", "D5_95", "t_mid", "f_mid", "f_prime", "zeta_f"};
  std::vector<Marginal> m{Marginal::lognormal(0.0468, 0.164),
                          Marginal::beta(17.3, 9.31, 5.0, 45.0),
                          Marginal::beta(12.4, 7.44, 0.5, 40.0),
                          Marginal::gamma(5.87, 3.11),
                          Marginal::two_sided_exponential(-0.089, 0.185, -2.0, 0.5),
                          Marginal::beta(0.213, 0.143, 0.02, 1.0)};
  Eigen::MatrixXd r(6, 6);
  r << 1, -0.36, 0.01, -0.15, 0.13, -0.01,
      -0.36, 1, 0.67, -0.13, -0.16, -0.2,
      0.01, 0.67, 1, -0.28, -0.2, -0.22,
      -0.15, -0.13, -0.28, 1, -0.2, 0.28,
      0.13, -0.16, -0.2, -0.2, 1, -0.01,
      -0.01, -0.2, -0.22, 0.28, -0.01, 1;
  return InputModel(std::move(names), std::move(m), r);
}

namespace {

// Prepend independent parameters to the ground-motion model.
InputModel with_ground_motion(std::vector<std::string> names, std::vector<Marginal> marginals) {
  const InputModel gm = ground_motion_input_model();
  const auto k = static_cast<Eigen::Index>(names.size());
  for (std::size_t i = 0; i < gm.dim(); ++i) {
    names.push_back(gm.names()[i]);
    marginals.push_back(gm.marginal(i));
  }
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(k + 6, k + 6);
  r.bottomRightCorner(6, 6) = gm.correlation();
  return InputModel(std::move(names), std::move(marginals), r);
}

}  // namespace

InputModel default_input_model(SystemId id) {
  const double pi = std::numbers::pi;
  switch (id) {
    case SystemId::quarter_car:
      return InputModel({"ks", "ku", "ms", "mu", "c", "A", "omega"},
                        {Marginal::gaussian(2000, 200), Marginal::gaussian(2000, 200), Marginal::gaussian(20, 2),
                         Marginal::gaussian(40, 4), Marginal::gaussian(600, 60), Marginal::uniform(0.09, 0.11),
                         Marginal::uniform(1.8 * pi, 2.2 * pi)});
    case SystemId::duffing:
      return with_ground_motion({"epsilon"}, {Marginal::uniform(90, 110)});
    case SystemId::boucwen:
      return with_ground_motion({"omega", "alpha"}, {Marginal::uniform(5.373, 6.567), Marginal::uniform(45, 55)});
  }
  throw ArgumentError("unknown system");
}

DictionarySpec default_dictionary(SystemId id) {
  DictionarySpec s;
  switch (id) {
    case SystemId::quarter_car:
      s.input_lags = {0, 1, 2, 3, 4};
      s.output_lags = {1, 2, 3, 4};
      s.max_input_exp = 1;
      s.max_output_exp = 3;
      s.max_total_exp = 3;
      s.cross_products = true;
      break;
    case SystemId::duffing:
      s.input_lags = {0, 1, 2};
      s.output_lags = {1, 2};
      s.max_input_exp = 1;
      s.max_output_exp = 3;
      s.max_total_exp = 3;
      s.cross_products = false;
      break;
    case SystemId::boucwen:
      s.input_lags = {0, 1, 2, 3, 4};
      s.output_lags = {1, 2, 3, 4};
      s.abs_lags = {1};
      s.max_input_exp = 1;
      s.max_output_exp = 1;
      s.max_abs_exp = 1;
      s.max_total_exp = 1;
      s.cross_products = false;
      s.abs_requires_partner = true;
      break;
  }
  return s;
}

SystemDefaults system_defaults(SystemId id) {
  switch (id) {
    case SystemId::quarter_car: return {0.01, 30.0, 1.2, 100, "x1", "z"};
    case SystemId::duffing: return {0.005, 30.0, 0.07, 200, "y", "x"};
    case SystemId::boucwen: return {0.005, 30.0, 0.25, 200, "v", "x"};
  }
  throw ArgumentError("unknown system");
}

std::size_t grid_size(double dt, double duration) {
  if (!(dt > 0.0) || !(duration > 0.0)) throw ArgumentError("time step and duration must be positive");
  return static_cast<std::size_t>(std::llround(duration / dt)) + 1;
}

GroundMotionParams ground_motion_from_xi(const Eigen::VectorXd& xi) {
  if (xi.size() < 6) throw ArgumentError("ground-motion parameters need six entries");
  const auto g = xi.tail(6);
  return GroundMotionParams::from_hz(g[0], g[1], g[2], g[3], g[4], g[5]);
}

Eigen::VectorXd make_excitation(SystemId id, const Eigen::VectorXd& xi, double dt, std::size_t n,
                                std::mt19937_64& rng) {
  if (id == SystemId::quarter_car) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) z[static_cast<Eigen::Index>(k)] = xi[5] * std::sin(xi[6] * dt * static_cast<double>(k));
    return z;
  }
  return synthesize_ground_motion(ground_motion_from_xi(xi), dt, n, rng);
}

Experiment simulate_system(SystemId id, const Eigen::VectorXd& xi, const Eigen::VectorXd& x, double dt,
                           const Rk45Options& opt_in) {
  const auto n = static_cast<std::size_t>(x.size());
  Rk45Options opt = opt_in;
  // sampled excitation is piecewise linear: keep its kinks on step boundaries
  if (id != SystemId::quarter_car && opt.breakpoints == 0.0) opt.breakpoints = dt;
  Experiment e;
  e.xi = xi;
  e.x = x;
  e.dt = dt;
  switch (id) {
    case SystemId::quarter_car: {
      // Road profile is analytic; no interpolation needed.
      const double a = xi[5], w = xi[6];
      const auto sol = integrate_rk45<4>(
          [&](double t, const Eigen::Vector4d& s, double z) { return quarter_car_rhs(t, s, xi, z); },
          [&](double t) { return a * std::sin(w * t); }, Eigen::Vector4d::Zero(), dt, n, opt);
      e.y = sol.col(0);
      break;
    }
    case SystemId::duffing: {
      const auto sol = integrate_rk45<2>(
          [&](double t, const Eigen::Vector2d& s, double u) { return duffing_rhs(t, s, xi, u); },
          [&](double t) { return interpolate_series(x, dt, t); }, Eigen::Vector2d::Zero(), dt, n, opt);
      e.y = sol.col(0);
      break;
    }
    case SystemId::boucwen: {
      const auto sol = integrate_rk45<3>(
          [&](double t, const Eigen::Vector3d& s, double u) { return boucwen_rhs(t, s, xi, u); },
          [&](double t) { return interpolate_series(x, dt, t); }, Eigen::Vector3d::Zero(), dt, n, opt);
      e.y = sol.col(1);
      e.aux = sol.col(0);
      break;
    }
  }
  if (!e.y.allFinite()) throw StiffnessError("non-finite response", 0.0);
  return e;
}

std::size_t Campaign::failures() const {
  std::size_t f = 0;
  for (const auto& s : status) f += s.ok ? 0 : 1;
  return f;
}

std::vector<Experiment> Campaign::successful() const {
  std::vector<Experiment> out;
  for (std::size_t i = 0; i < experiments.size(); ++i)
    if (status[i].ok) out.push_back(experiments[i]);
  return out;
}

Campaign run_campaign(const CampaignSettings& s, const InputModel& input) {
  if (s.n == 0) throw ArgumentError("campaign size must be >= 1");
  if (s.sampling != "lhs" && s.sampling != "mc") throw ArgumentError("sampling must be 'lhs' or 'mc'");
  const std::size_t T = grid_size(s.dt, s.duration);
  const auto expected_dim = default_input_model(s.system).dim();
  if (input.dim() != expected_dim)
    throw ArgumentError("input model for " + to_string(s.system) + " must have " + std::to_string(expected_dim) +
                        " parameters, got " + std::to_string(input.dim()));

  Campaign c;
  c.settings = s;
  c.input = input;
  if (s.sampling == "lhs") {
    std::mt19937_64 rng(s.seed);
    c.xi = input.sample_lhs(s.n, rng);
  } else {
    c.xi.resize(static_cast<Eigen::Index>(s.n), static_cast<Eigen::Index>(input.dim()));
    for (std::size_t i = 0; i < s.n; ++i) {
      auto rng = run_stream(s.seed, i);
      c.xi.row(static_cast<Eigen::Index>(i)) = input.sample_mc(1, rng).row(0);
    }
  }
  c.experiments.resize(s.n);
  c.status.resize(s.n);
  Rk45Options opt;
  opt.rtol = s.rtol;
  opt.atol = s.atol;
  opt.h_max = s.h_max > 0.0 ? s.h_max : 0.1 * s.duration;
  parallel_for(s.n, s.workers, [&](std::size_t i) {
    const Eigen::VectorXd xi = c.xi.row(static_cast<Eigen::Index>(i)).transpose();
    try {
      auto rng = run_stream(s.seed + 1, i);
      const Eigen::VectorXd x = make_excitation(s.system, xi, s.dt, T, rng);
      c.experiments[i] = simulate_system(s.system, xi, x, s.dt, opt);
    } catch (const std::exception& e) {
      c.experiments[i].xi = xi;
      c.experiments[i].dt = s.dt;
      c.status[i] = {false, e.what()};
    }
  });
  return c;
}

nlohmann::json to_json(const CampaignSettings& s) {
  return {{"system", to_string(s.system)}, {"n", s.n},         {"dt", s.dt},         {"duration", s.duration},
          {"seed", s.seed},                {"sampling", s.sampling}, {"rtol", s.rtol}, {"atol", s.atol}, {"h_max", s.h_max}};
}

CampaignSettings campaign_settings_from_json(const nlohmann::json& j) {
  CampaignSettings s;
  s.system = system_from_string(j.at("system").get<std::string>());
  const auto d = system_defaults(s.system);
  s.n = j.value("n", d.ed_size);
  s.dt = j.value("dt", d.dt);
  s.duration = j.value("duration", d.duration);
  s.seed = j.value("seed", s.seed);
  s.sampling = j.value("sampling", s.sampling);
  s.rtol = j.value("rtol", s.rtol);
  s.atol = j.value("atol", s.atol);
  s.h_max = j.value("h_max", s.h_max);
  return s;
}

}  // namespace pcnarx
