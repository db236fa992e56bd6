#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace pcnarx {

enum class MarginalKind {
  gaussian,
  uniform,
  lognormal,
  beta,
  gamma,
  two_sided_exponential,
  constant,
};

std::string to_string(MarginalKind kind);
MarginalKind marginal_kind_from_string(const std::string& name);

/// One-dimensional input distribution.
///
/// Moment-parameterized families (lognormal, beta, gamma, two-sided
/// exponential) are built from a target mean and standard deviation; the
/// native shape parameters are solved for at construction. Every marginal
/// maps to and from the standard normal line through `to_normal` and
/// `from_normal`, which pick the lower or upper tail so that both tails
/// keep full relative precision.
class Marginal {
public:
  static Marginal gaussian(double mean, double std);
  static Marginal uniform(double lower, double upper);
  static Marginal lognormal(double mean, double std);
  /// Beta on [lower, upper] with the given mean and standard deviation.
  static Marginal beta(double mean, double std, double lower, double upper);
  static Marginal gamma(double mean, double std);
  /// Laplace law truncated to [lower, upper]; location and scale are
  /// moment-matched to the given mean and standard deviation.
  static Marginal two_sided_exponential(double mean, double std, double lower,
                                        double upper);
  /// Point mass, used for deterministic parameters.
  static Marginal constant(double value);

  MarginalKind kind() const { return kind_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  /// Target moments the marginal was built from.
  double mean() const { return mean_; }
  double std() const { return std_; }

  bool in_support(double x) const;
  double cdf(double x) const;
  /// 1 - cdf(x), computed without cancellation.
  double ccdf(double x) const;
  double pdf(double x) const;
  /// Inverse cdf; u must lie in (0, 1).
  double quantile(double u) const;
  /// Inverse of ccdf: returns x with ccdf(x) = q, q in (0, 1).
  double quantile_upper(double q) const;

  /// Phi^-1(F(x)).
  double to_normal(double x) const;
  /// F^-1(Phi(z)).
  double from_normal(double z) const;

  /// Native parameters after moment matching (for diagnostics and tests).
  double shape_a() const { return a_; }
  double shape_b() const { return b_; }

private:
  Marginal() = default;
  double laplace_cdf(double x) const;
  double laplace_ccdf(double x) const;
  double laplace_quantile(double p) const;

  MarginalKind kind_ = MarginalKind::gaussian;
  double mean_ = 0.0;
  double std_ = 1.0;
  double lower_ = 0.0;
  double upper_ = 0.0;
  // Native parameters: gaussian (mu, sigma), lognormal (mu, sigma) of log,
  // beta (alpha, beta), gamma (shape, scale), laplace (location, scale).
  double a_ = 0.0;
  double b_ = 0.0;
  // Truncation masses of the Laplace law below lower_ and above upper_.
  double mass_below_ = 0.0;
  double mass_above_ = 0.0;
};

/// Joint input law: marginals tied by a Gaussian copula with correlation R.
class InputModel {
public:
  InputModel() = default;
  InputModel(std::vector<std::string> names, std::vector<Marginal> marginals,
             Eigen::MatrixXd correlation);
  /// Independent marginals (R = identity).
  InputModel(std::vector<std::string> names, std::vector<Marginal> marginals);

  std::size_t dim() const { return marginals_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Marginal>& marginals() const { return marginals_; }
  const Marginal& marginal(std::size_t i) const { return marginals_.at(i); }
  const Eigen::MatrixXd& correlation() const { return correlation_; }
  const Eigen::MatrixXd& cholesky() const { return cholesky_; }
  bool independent() const { return independent_; }
  /// Row i of R is the i-th unit vector.
  bool independent_component(std::size_t i) const;

  /// Physical sample -> independent standard-normal vector.
  Eigen::VectorXd to_standard(const Eigen::VectorXd& xi) const;
  /// Independent standard-normal vector -> physical sample.
  Eigen::VectorXd from_standard(const Eigen::VectorXd& u) const;
  void check_support(const Eigen::VectorXd& xi) const;

  /// Latin hypercube design of n points (rows) in physical space.
  Eigen::MatrixXd sample_lhs(std::size_t n, std::mt19937_64& rng) const;
  /// Plain Monte Carlo design of n points (rows) in physical space.
  Eigen::MatrixXd sample_mc(std::size_t n, std::mt19937_64& rng) const;

private:
  std::vector<std::string> names_;
  std::vector<Marginal> marginals_;
  Eigen::MatrixXd correlation_;
  Eigen::MatrixXd cholesky_;
  bool independent_ = true;
};

/// Probability p in (0, 1) -> standard normal quantile.
double normal_quantile(double p);
double normal_cdf(double z);

/// Latin hypercube design in the unit cube: n rows, dim columns, exactly one
/// point per stratum [(k-1)/n, k/n) in every column.
Eigen::MatrixXd latin_hypercube_unit(std::size_t n, std::size_t dim,
                                     std::mt19937_64& rng);

nlohmann::json to_json(const Marginal& m, const std::string& name);
Marginal marginal_from_json(const nlohmann::json& j);
nlohmann::json to_json(const InputModel& im);
InputModel input_model_from_json(const nlohmann::json& j);

}  // namespace pcnarx
