#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pcnarx/ground_motion.hpp"
#include "pcnarx/narx.hpp"
#include "pcnarx/ode.hpp"
#include "pcnarx/probspace.hpp"
#include "pcnarx/rng.hpp"

namespace pcnarx {

enum class SystemId { quarter_car, duffing, boucwen };

std::string to_string(SystemId id);
SystemId system_from_string(const std::string& name);

// Fixed (non-random) parameters of the oscillators.
inline constexpr double kDuffingZeta = 0.02;
inline constexpr double kDuffingOmega = 5.97;
inline constexpr double kBoucWenZeta = 0.02;
inline constexpr double kBoucWenRho = 0.0;
inline constexpr double kBoucWenGamma = 1.0;
inline constexpr double kBoucWenN = 1.0;
inline constexpr double kBoucWenBeta = 0.0;

/// Quarter car, state (x1, v1, x2, v2), xi = (ks, ku, ms, mu, c, A, omega).
Eigen::Vector4d quarter_car_rhs(double t, const Eigen::Vector4d& s, const Eigen::VectorXd& xi, double z);
/// Duffing, state (y, v), xi(0) = epsilon.
Eigen::Vector2d duffing_rhs(double t, const Eigen::Vector2d& s, const Eigen::VectorXd& xi, double x);
/// Bouc-Wen, state (y, v, z), xi(0) = omega, xi(1) = alpha.
Eigen::Vector3d boucwen_rhs(double t, const Eigen::Vector3d& s, const Eigen::VectorXd& xi, double x);

/// Uncertain parameters of each case study with their reference
/// distributions (ground-motion frequencies in Hz and Hz/s).
InputModel default_input_model(SystemId id);
/// Ground-motion input model shared by the seismic cases.
InputModel ground_motion_input_model();

/// Default NARX dictionary for each case study.
DictionarySpec default_dictionary(SystemId id);

/// Case-study settings: time step, duration, nonlinearity threshold.
struct SystemDefaults {
  double dt;
  double duration;
  double threshold;
  std::size_t ed_size;
  std::string target;  // name of the modelled response channel
  std::string input;   // name of the excitation channel
};
SystemDefaults system_defaults(SystemId id);

std::size_t grid_size(double dt, double duration);

/// Ground-motion parameters from the last six entries of xi.
GroundMotionParams ground_motion_from_xi(const Eigen::VectorXd& xi);

/// Excitation for one sample on the grid; rng is only used by the seismic
/// cases.
Eigen::VectorXd make_excitation(SystemId id, const Eigen::VectorXd& xi, double dt, std::size_t n,
                                std::mt19937_64& rng);

/// Solve the system from rest under excitation x. y is the modelled channel
/// (x1, y, v respectively); aux holds the displacement for Bouc-Wen.
Experiment simulate_system(SystemId id, const Eigen::VectorXd& xi, const Eigen::VectorXd& x, double dt,
                           const Rk45Options& opt = {});

struct CampaignSettings {
  SystemId system = SystemId::quarter_car;
  std::size_t n = 100;
  double dt = 0.01;
  double duration = 30.0;
  std::uint64_t seed = 1;
  std::string sampling = "lhs";  // "lhs" or "mc"
  double rtol = 1e-3;
  double atol = 1e-6;
  double h_max = 0.0;  // largest solver step; 0 means duration/10
  unsigned workers = 1;
};

struct RunStatus {
  bool ok = true;
  std::string message;
};

struct Campaign {
  CampaignSettings settings;
  InputModel input;
  Eigen::MatrixXd xi;                  // n x d samples
  std::vector<Experiment> experiments; // one per run (empty y if failed)
  std::vector<RunStatus> status;

  std::size_t failures() const;
  /// Successful experiments only, in run order.
  std::vector<Experiment> successful() const;
};

/// Draw the design ("lhs": one Latin hypercube from the campaign seed; "mc":
/// sample i from run_stream(seed, i)), then synthesize excitations from
/// run_stream(seed + 1, i) and solve every run. Solver failures are
/// recorded per run.
Campaign run_campaign(const CampaignSettings& settings, const InputModel& input);

nlohmann::json to_json(const CampaignSettings& s);
CampaignSettings campaign_settings_from_json(const nlohmann::json& j);

}  // namespace pcnarx
