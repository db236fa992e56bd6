#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pcnarx/narx.hpp"
#include "pcnarx/pce.hpp"

namespace pcnarx {

/// How the coefficient PCEs get their degree. `loo`: each coefficient sweeps
/// its own degree by LOO. `cross_validation`: one common degree for all
/// coefficients, the one whose PC-NARX free-runs on held-out folds of the ED
/// have the smallest mean error.
enum class DegreeSelection { loo, cross_validation };

std::string to_string(DegreeSelection d);
DegreeSelection degree_selection_from_string(const std::string& s);

struct PcNarxSettings {
  SelectionRule rule;
  double tolerance = 1e-3;  // qualification bar on the mean free-run error
  PceSettings pce;
  DegreeSelection degree_selection = DegreeSelection::cross_validation;
  std::size_t cv_folds = 5;
  unsigned workers = 1;
};

struct DegreeSweep {
  int degree = 0;
  std::vector<int> degrees;
  std::vector<double> errors;     // mean held-out free-run error per degree
  std::vector<std::size_t> unstable;  // held-out runs that diverged
};

/// NARX structure whose coefficients are sparse PCEs of the input
/// parameters.
class PcNarxModel {
public:
  PcNarxModel() = default;
  PcNarxModel(NarxStructure structure, std::vector<PceModel> coefficient_pces, double divergence_bound,
              double dt, nlohmann::json provenance = {});

  const NarxStructure& structure() const { return structure_; }
  const std::vector<PceModel>& coefficient_pces() const { return pces_; }
  const InputModel& input_model() const { return pces_.front().input_model(); }
  double divergence_bound() const { return bound_; }
  double dt() const { return dt_; }
  const nlohmann::json& provenance() const { return provenance_; }

  /// NARX coefficients at one sample.
  Eigen::VectorXd coefficients(const Eigen::VectorXd& xi) const;
  /// Free-run trajectory for one sample and its excitation. `initial` holds
  /// the first max lag values (zeros when the system starts at rest).
  Eigen::VectorXd predict(const Eigen::VectorXd& xi, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& initial) const;
  Eigen::VectorXd predict(const Eigen::VectorXd& xi, const Eigen::VectorXd& x) const;

private:
  NarxStructure structure_;
  std::vector<PceModel> pces_;
  double bound_ = std::numeric_limits<double>::infinity();
  double dt_ = 0.0;
  nlohmann::json provenance_;
};

/// Everything produced by fit(): the model plus the diagnostics of both
/// phases.
struct PcNarxFit {
  PcNarxModel model;
  CandidateSearch search;
  NarxSelection selection;
  std::vector<std::size_t> phase2_experiments;  // experiments with finite coefficients
  DegreeSweep degree_sweep;  // empty under DegreeSelection::loo
};

/// Phase 1: candidate structures from the strongly nonlinear experiments and
/// selection of the sparsest adequate one. Phase 2: one adaptive sparse PCE
/// per NARX coefficient.
PcNarxFit fit_pc_narx(const std::vector<Experiment>& ed, const NarxDictionary& dict, const InputModel& input,
                      const PcNarxSettings& settings);

/// Phase 2 only, for a fixed structure with coefficients already estimated.
PcNarxModel fit_coefficient_pces(const NarxStructure& structure, const Eigen::MatrixXd& xi,
                                 const Eigen::MatrixXd& coefficients, const InputModel& input,
                                 const PceSettings& settings, double divergence_bound, double dt,
                                 unsigned workers = 1);

/// Common PCE degree by K-fold cross-validation of the free-run error.
/// Experiment k goes to fold k mod K. The sweep ascends from p_min and stops
/// after `degree_patience` consecutive increases; diverged held-out runs
/// rank a degree below any degree without them.
DegreeSweep select_common_degree(const NarxStructure& structure, const std::vector<Experiment>& ed,
                                 const Eigen::MatrixXd& coefficients, const InputModel& input,
                                 const PceSettings& settings, std::size_t folds, double divergence_bound,
                                 unsigned workers = 1);

/// sum_i (y_i - yhat_i)^2 / sum_i (y_i - mean(y))^2 over a set of scalars.
double scalar_relative_error(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

struct ValidationReport {
  Eigen::VectorXd errors;        // per run, inf when the prediction diverged
  double mean_error = 0.0;       // over finite runs
  std::size_t unstable = 0;
  std::size_t above_threshold = 0;  // runs with error > 0.1 (diverged runs included)
  double fraction_above = 0.0;
  Eigen::VectorXd max_actual;    // max |y| per run
  Eigen::VectorXd max_predicted;
  double max_error = 0.0;        // scalar relative error on max |y| (finite runs)
  Eigen::VectorXd mean_actual;   // pointwise statistics over finite runs
  Eigen::VectorXd mean_predicted;
  Eigen::VectorXd std_actual;
  Eigen::VectorXd std_predicted;
  double mean_traj_error = 0.0;  // relative error between mean trajectories
  double std_traj_error = 0.0;   // relative error between std trajectories
  std::vector<Eigen::VectorXd> predictions;  // kept only when requested
};

/// Predict every validation experiment from its own parameters and
/// excitation and compare with the recorded response.
ValidationReport validate(const PcNarxModel& model, const std::vector<Experiment>& validation,
                          unsigned workers = 1, bool keep_predictions = false);

/// Errors for externally computed predictions (same bookkeeping as validate).
ValidationReport compare_predictions(const std::vector<Experiment>& validation,
                                     const std::vector<Eigen::VectorXd>& predictions, bool keep_predictions = false);

struct McsStatistics {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  Eigen::VectorXd max_response;  // max |y| per finite run
  Eigen::VectorXd density_grid;
  Eigen::VectorXd density;
  double bandwidth = 0.0;
  std::size_t unstable = 0;
  bool warning = false;  // more than 1% of runs diverged
};

/// Produces the excitation for run i from its parameters and generator.
using ExcitationGenerator = std::function<Eigen::VectorXd(const Eigen::VectorXd& xi, std::mt19937_64& rng)>;

/// Monte Carlo on the surrogate (n >= 100): sample i uses run_stream(seed, i) for the
/// parameters and run_stream(seed + 1, i) for the excitation.
McsStatistics mcs_statistics(const PcNarxModel& model, const InputModel& input, const ExcitationGenerator& gen,
                             std::size_t n, std::uint64_t seed, unsigned workers = 1,
                             std::size_t density_points = 256);

/// Gaussian kernel density estimate with Silverman's rule bandwidth.
struct KernelDensity {
  Eigen::VectorXd grid;
  Eigen::VectorXd density;
  double bandwidth = 0.0;
};
KernelDensity gaussian_kde(const Eigen::VectorXd& samples, std::size_t points = 256);

/// Cumulative trapezoidal integral with zero initial value.
Eigen::VectorXd integrate_trapezoid(const Eigen::VectorXd& v, double dt);

nlohmann::json to_json(const PcNarxModel& model);
PcNarxModel pc_narx_from_json(const nlohmann::json& j);

}  // namespace pcnarx
