#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pcnarx/sparsereg.hpp"

namespace pcnarx {

/// Product term x(t-k)^m * y(t-j)^l * |y(t-a)|^e; exponent 0 drops a factor
/// (its lag is then normalized to 0). All exponents 0 is the constant term.
struct NarxTerm {
  int x_exp = 0;
  int x_lag = 0;
  int y_exp = 0;
  int y_lag = 0;
  int abs_exp = 0;
  int abs_lag = 0;

  static NarxTerm constant() { return {}; }
  static NarxTerm make(int x_exp, int x_lag, int y_exp, int y_lag, int abs_exp = 0, int abs_lag = 0);

  bool is_constant() const { return x_exp == 0 && y_exp == 0 && abs_exp == 0; }
  int total_exponent() const { return x_exp + y_exp + abs_exp; }
  int max_output_lag() const { return std::max(y_exp > 0 ? y_lag : 0, abs_exp > 0 ? abs_lag : 0); }
  auto key() const { return std::tie(x_exp, x_lag, y_exp, y_lag, abs_exp, abs_lag); }
  bool operator==(const NarxTerm& o) const { return key() == o.key(); }

  /// Value at grid index t from excitation x and response y (t >= lags).
  double eval(const double* x, const double* y, std::size_t t) const;
  /// Human readable form, e.g. "y(t-4)^2*x(t-4)".
  std::string name(const std::string& x_name = "x", const std::string& y_name = "y") const;
};

/// Admissible exponent/lag combinations for a dictionary.
struct DictionarySpec {
  std::vector<int> input_lags;   // lags k of x(t-k)
  std::vector<int> output_lags;  // lags j of y(t-j), all >= 1
  std::vector<int> abs_lags;     // lags of the |y(t-a)| factor
  int max_input_exp = 1;
  int max_output_exp = 3;
  int max_abs_exp = 0;
  int max_total_exp = 3;  // bound on x_exp + y_exp
  bool cross_products = true;  // allow x^m y^l products with m, l > 0
  bool abs_requires_partner = true;  // |y| never appears on its own
};

struct NarxDictionary {
  std::vector<NarxTerm> terms;
  int n_x = 0;
  int n_y = 0;

  int max_lag() const { return std::max(n_x, n_y); }
  std::size_t size() const { return terms.size(); }
};

/// Enumerate every admissible term: constant first, then by total exponent,
/// then by factor exponents and lags.
NarxDictionary build_dictionary(const DictionarySpec& spec);

/// Subset of dictionary terms; carries the dictionary's lag maxima so every
/// candidate uses the same regression rows.
struct NarxStructure {
  std::vector<NarxTerm> terms;
  int n_x = 0;
  int n_y = 0;

  int max_lag() const { return std::max(n_x, n_y); }
  std::size_t size() const { return terms.size(); }
  bool operator==(const NarxStructure& o) const { return terms == o.terms && n_x == o.n_x && n_y == o.n_y; }

  static NarxStructure from_dictionary(const NarxDictionary& dict, std::vector<std::size_t> selected);
  std::string describe(const std::string& x_name = "x", const std::string& y_name = "y") const;
};

/// One simulated input/output record on a uniform grid.
struct Experiment {
  Eigen::VectorXd xi;  // physical input parameters
  Eigen::VectorXd x;   // excitation
  Eigen::VectorXd y;   // NARX target response
  Eigen::VectorXd aux; // optional extra channel (e.g. displacement for a velocity target)
  double dt = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  void validate() const;
};

/// Rows t = L .. T-1 (L = max lag) of term evaluations on recorded data.
RegressionProblem assemble_regression(const Experiment& exp, const std::vector<NarxTerm>& terms,
                                      int max_lag);
RegressionProblem assemble_regression(const Experiment& exp, const NarxDictionary& dict);
RegressionProblem assemble_regression(const Experiment& exp, const NarxStructure& structure);

/// One-step-ahead prediction from recorded past outputs; the first L values
/// are copied from the record.
Eigen::VectorXd one_step_ahead(const Eigen::VectorXd& coefficients, const NarxStructure& structure,
                               const Experiment& exp);

/// Simulation mode: feeds back its own predictions. `initial` supplies the
/// first max(L, 1) values. Throws InstabilityError when |y| exceeds
/// divergence_bound or turns non-finite.
Eigen::VectorXd free_run(const NarxStructure& structure, const Eigen::VectorXd& coefficients,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& initial,
                         double divergence_bound = std::numeric_limits<double>::infinity());

/// sum (y - yhat)^2 / sum (y - mean(y))^2.
double relative_error(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

/// Which experiments count as strongly nonlinear for candidate generation.
struct SelectionRule {
  double threshold = 0.0;         // max |y| must exceed this
  std::size_t fallback_top_k = 10;  // used when nothing passes the threshold
  /// When only a few pass, the largest responses are added up to this count.
  std::size_t min_selected = 20;
  /// Besides the minimum-LOO cut, every path prefix ending in a step that
  /// divides the relative LOO by at least this factor becomes a candidate
  /// (0 disables).
  double knee_ratio = 10.0;
};

struct CandidateModel {
  NarxStructure structure;
  std::vector<std::size_t> source_experiments;  // experiments yielding this structure
};

struct CandidateSearch {
  std::vector<std::size_t> selected_experiments;
  bool used_fallback = false;
  bool topped_up = false;  // threshold passers padded to min_selected
  std::vector<CandidateModel> candidates;  // distinct, in discovery order
};

/// LARS on the full dictionary for each strongly nonlinear experiment. Each
/// path yields its minimum-LOO prefix and its knee prefixes (see
/// SelectionRule::knee_ratio); duplicates are merged and candidates are kept
/// in discovery order.
CandidateSearch select_candidates(const std::vector<Experiment>& ed, const NarxDictionary& dict,
                                  const SelectionRule& rule, unsigned workers = 1);

/// Relative free-run error factor beyond which a run counts as diverged.
inline constexpr double kDivergenceFactor = 1e6;

struct CandidateEvaluation {
  NarxStructure structure;
  Eigen::MatrixXd coefficients;  // K x n_terms, OLS per experiment
  Eigen::VectorXd errors;        // free-run relative error per experiment (inf if unstable)
  double mean_error = 0.0;       // mean over stable experiments
  std::size_t unstable = 0;
  bool qualifies = false;
};

struct NarxModel {
  NarxStructure structure;
  Eigen::MatrixXd coefficients;  // K x n_terms
  Eigen::VectorXd errors;
  double mean_error = 0.0;
  bool qualified = false;
};

struct NarxSelection {
  NarxModel model;
  std::size_t winner = 0;  // index into ledger
  std::vector<CandidateEvaluation> ledger;
};

/// OLS coefficients, free-run errors and their mean for one structure on
/// every experiment.
CandidateEvaluation evaluate_candidate(const NarxStructure& structure, const std::vector<Experiment>& ed,
                                       double divergence_bound, unsigned workers = 1);

/// Fewest-term candidate whose mean error is below `tolerance`; ties go to
/// the smaller error, then discovery order. If none qualifies the smallest
/// error wins and the model is flagged as not qualified.
NarxSelection select_best_structure(const std::vector<CandidateModel>& candidates,
                                    const std::vector<Experiment>& ed, double tolerance,
                                    unsigned workers = 1);

nlohmann::json to_json(const NarxTerm& term);
NarxTerm narx_term_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NarxStructure& s);
NarxStructure narx_structure_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DictionarySpec& s);
DictionarySpec dictionary_spec_from_json(const nlohmann::json& j);

}  // namespace pcnarx
