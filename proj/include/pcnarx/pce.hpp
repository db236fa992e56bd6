#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pcnarx/orthopoly.hpp"
#include "pcnarx/probspace.hpp"

namespace pcnarx {

/// Truncation and adaptivity settings for sparse PCE fitting.
struct PceSettings {
  int p_min = 1;
  int p_max = 20;
  double q = 1.0;
  int r = 2;
  /// Stop the degree sweep after this many consecutive LOO increases.
  int degree_patience = 2;
  /// LARS early-stopping patience; 0 picks max(10, path limit / 10).
  std::size_t lars_patience = 0;
};

/// Sparse polynomial chaos expansion y(xi) = sum_alpha c_alpha psi_alpha(xi).
class PceModel {
public:
  PceModel() = default;
  PceModel(InputModel input, BasisFamily basis, std::vector<MultiIndex> indices,
           Eigen::VectorXd coefficients, double relative_loo, int degree);

  const InputModel& input_model() const { return input_; }
  const BasisFamily& basis() const { return basis_; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  /// LOO error relative to the empirical variance of the training responses.
  double loo() const { return loo_; }
  /// Maximum total degree of the candidate set the model was selected from.
  int degree() const { return degree_; }

  double eval(const Eigen::VectorXd& xi) const;
  double eval_reduced(const Eigen::VectorXd& reduced) const;
  /// Evaluate at many reduced points (rows).
  Eigen::VectorXd eval_reduced(const Eigen::MatrixXd& reduced) const;

  double mean() const;
  double variance() const;

private:
  InputModel input_;
  BasisFamily basis_;
  std::vector<MultiIndex> indices_;
  Eigen::VectorXd coefficients_;
  double loo_ = 0.0;
  int degree_ = 0;
};

struct Moments {
  double mean;
  double variance;
};

inline Moments moments(const PceModel& model) { return {model.mean(), model.variance()}; }

/// Experimental design mapped to the reduced space, with univariate basis
/// values and per-degree information matrices cached for reuse across many
/// response vectors.
class PceDesign {
public:
  PceDesign(const InputModel& im, const Eigen::MatrixXd& samples, const PceSettings& settings);

  const InputModel& input_model() const { return input_; }
  const BasisFamily& basis() const { return basis_; }
  const Eigen::MatrixXd& reduced() const { return reduced_; }
  Eigen::Index size() const { return reduced_.rows(); }
  const PceSettings& settings() const { return settings_; }

  struct Candidates {
    std::vector<MultiIndex> indices;
    Eigen::MatrixXd matrix;
  };
  /// Candidate set and information matrix for total degree p (thread-safe).
  const Candidates& candidates(int p) const;

private:
  InputModel input_;
  BasisFamily basis_;
  Eigen::MatrixXd reduced_;
  PceSettings settings_;
  BasisCache cache_;
  mutable std::mutex mutex_;
  mutable std::map<int, Candidates> by_degree_;
};

/// Degree-adaptive LARS fit; returns the (degree, path step) pair with the
/// smallest LOO error.
PceModel fit_adaptive(const PceDesign& design, const Eigen::VectorXd& responses);
PceModel fit_adaptive(const InputModel& im, const Eigen::MatrixXd& samples,
                      const Eigen::VectorXd& responses, const PceSettings& settings = {});

/// Independent PCE per time instant.
struct TimeFrozenPce {
  double dt = 0.0;
  std::vector<std::size_t> instants;  // grid indices that carry a model
  std::vector<PceModel> models;

  /// Prediction of every modelled instant for one sample.
  Eigen::VectorXd predict(const Eigen::VectorXd& xi) const;
  const PceModel& at(std::size_t instant) const;
};

/// trajectories: N x T (row k = response of sample k on the common grid).
/// instants: grid indices to model (empty = all).
TimeFrozenPce fit_time_frozen(const InputModel& im, const Eigen::MatrixXd& samples,
                              const Eigen::MatrixXd& trajectories, double dt,
                              const PceSettings& settings = {},
                              std::vector<std::size_t> instants = {}, unsigned workers = 1);

nlohmann::json to_json(const PceModel& model, bool embed_input = true);
PceModel pce_from_json(const nlohmann::json& j, const std::optional<InputModel>& input = std::nullopt);
nlohmann::json to_json(const TimeFrozenPce& tf);
TimeFrozenPce time_frozen_from_json(const nlohmann::json& j);

}  // namespace pcnarx
