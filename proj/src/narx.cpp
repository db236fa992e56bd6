#include "pcnarx/narx.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "pcnarx/errors.hpp"
#include "pcnarx/parallel.hpp"

namespace pcnarx {

namespace {

double ipow(double v, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= v;
  return r;
}

std::string factor(const std::string& name, int lag, int exp, bool abs) {
  std::string s = abs ? "|" + name : name;
  s += lag == 0 ? "(t)" : "(t-" + std::to_string(lag) + ")";
  if (abs) s += "|";
  if (exp > 1) s += "^" + std::to_string(exp);
  return s;
}

// Sort key: constant, then total exponent, then the factors.
bool term_less(const NarxTerm& a, const NarxTerm& b) {
  const auto ka = std::make_tuple(a.total_exponent(), a.y_exp, a.y_lag, a.x_exp, a.x_lag, a.abs_exp, a.abs_lag);
  const auto kb = std::make_tuple(b.total_exponent(), b.y_exp, b.y_lag, b.x_exp, b.x_lag, b.abs_exp, b.abs_lag);
  return ka < kb;
}

}  // namespace

NarxTerm NarxTerm::make(int x_exp, int x_lag, int y_exp, int y_lag, int abs_exp, int abs_lag) {
  if (x_exp < 0 || y_exp < 0 || abs_exp < 0) throw ArgumentError("NARX term exponents must be >= 0");
  if (x_lag < 0 || y_lag < 0 || abs_lag < 0) throw ArgumentError("NARX term lags must be >= 0");
  if (y_exp > 0 && y_lag < 1) throw ArgumentError("output factors need a lag >= 1");
  if (abs_exp > 0 && abs_lag < 1) throw ArgumentError("|y| factors need a lag >= 1");
  NarxTerm t;
  t.x_exp = x_exp;
  t.x_lag = x_exp > 0 ? x_lag : 0;
  t.y_exp = y_exp;
  t.y_lag = y_exp > 0 ? y_lag : 0;
  t.abs_exp = abs_exp;
  t.abs_lag = abs_exp > 0 ? abs_lag : 0;
  return t;
}

double NarxTerm::eval(const double* x, const double* y, std::size_t t) const {
  double v = 1.0;
  if (x_exp > 0) v *= ipow(x[t - static_cast<std::size_t>(x_lag)], x_exp);
  if (y_exp > 0) v *= ipow(y[t - static_cast<std::size_t>(y_lag)], y_exp);
  if (abs_exp > 0) v *= ipow(std::abs(y[t - static_cast<std::size_t>(abs_lag)]), abs_exp);
  return v;
}

std::string NarxTerm::name(const std::string& x_name, const std::string& y_name) const {
  if (is_constant()) return "1";
  std::vector<std::string> parts;
  if (x_exp > 0) parts.push_back(factor(x_name, x_lag, x_exp, false));
  if (y_exp > 0) parts.push_back(factor(y_name, y_lag, y_exp, false));
  if (abs_exp > 0) parts.push_back(factor(y_name, abs_lag, abs_exp, true));
  std::string s = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) s += "*" + parts[i];
  return s;
}

NarxDictionary build_dictionary(const DictionarySpec& spec) {
  for (int k : spec.input_lags)
    if (k < 0) throw ArgumentError("input lags must be >= 0");
  for (int j : spec.output_lags)
    if (j < 1) throw ArgumentError("output lags must be >= 1");
  for (int a : spec.abs_lags)
    if (a < 1) throw ArgumentError("|y| lags must be >= 1");
  if (spec.max_input_exp < 0 || spec.max_output_exp < 0 || spec.max_abs_exp < 0 || spec.max_total_exp < 0)
    throw ArgumentError("dictionary exponents must be >= 0");

  // Options per factor: exponent 0 (absent) or (exp, lag).
  auto options = [](const std::vector<int>& lags, int max_exp) {
    std::vector<std::pair<int, int>> o{{0, 0}};
    for (int e = 1; e <= max_exp; ++e)
      for (int l : lags) o.emplace_back(e, l);
    return o;
  };
  const auto xo = options(spec.input_lags, spec.max_input_exp);
  const auto yo = options(spec.output_lags, spec.max_output_exp);
  const auto ao = options(spec.abs_lags, spec.max_abs_exp);

  NarxDictionary dict;
  for (const auto& [xe, xl] : xo)
    for (const auto& [ye, yl] : yo)
      for (const auto& [ae, al] : ao) {
        if (xe + ye > spec.max_total_exp) continue;
        if (!spec.cross_products && xe > 0 && ye > 0) continue;
        if (ae > 0 && spec.abs_requires_partner && xe == 0 && ye == 0) continue;
        const NarxTerm t = NarxTerm::make(xe, xl, ye, yl, ae, al);
        if (std::find(dict.terms.begin(), dict.terms.end(), t) == dict.terms.end()) dict.terms.push_back(t);
      }
  std::stable_sort(dict.terms.begin(), dict.terms.end(), term_less);
  for (const auto& t : dict.terms) {
    if (t.x_exp > 0) dict.n_x = std::max(dict.n_x, t.x_lag);
    dict.n_y = std::max(dict.n_y, t.max_output_lag());
  }
  return dict;
}

NarxStructure NarxStructure::from_dictionary(const NarxDictionary& dict, std::vector<std::size_t> selected) {
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  NarxStructure s;
  s.n_x = dict.n_x;
  s.n_y = dict.n_y;
  for (auto i : selected) {
    if (i >= dict.size()) throw ArgumentError("term index " + std::to_string(i) + " outside the dictionary");
    s.terms.push_back(dict.terms[i]);
  }
  return s;
}

std::string NarxStructure::describe(const std::string& x_name, const std::string& y_name) const {
  std::string s = "{";
  for (std::size_t i = 0; i < terms.size(); ++i) s += (i ? ", " : "") + terms[i].name(x_name, y_name);
  return s + "}";
}

void Experiment::validate() const {
  if (y.size() == 0) throw ArgumentError("experiment has an empty response");
  if (x.size() != y.size())
    throw ArgumentError("experiment excitation and response lengths differ (" + std::to_string(x.size()) +
                        " vs " + std::to_string(y.size()) + ")");
  if (aux.size() != 0 && aux.size() != y.size()) throw ArgumentError("experiment auxiliary channel length differs");
  if (!(dt > 0.0)) throw ArgumentError("experiment time step must be positive");
  if (!x.allFinite() || !y.allFinite()) throw ArgumentError("experiment contains non-finite samples");
}

RegressionProblem assemble_regression(const Experiment& exp, const std::vector<NarxTerm>& terms, int max_lag) {
  exp.validate();
  const auto T = static_cast<Eigen::Index>(exp.size());
  const Eigen::Index L = max_lag;
  if (T <= L + 10) throw ArgumentError("experiment too short: need more than max lag + 10 samples");
  RegressionProblem prob;
  prob.A.resize(T - L, static_cast<Eigen::Index>(terms.size()));
  prob.y = exp.y.tail(T - L);
  for (Eigen::Index t = L; t < T; ++t)
    for (std::size_t j = 0; j < terms.size(); ++j)
      prob.A(t - L, static_cast<Eigen::Index>(j)) = terms[j].eval(exp.x.data(), exp.y.data(), static_cast<std::size_t>(t));
  return prob;
}

RegressionProblem assemble_regression(const Experiment& exp, const NarxDictionary& dict) {
  return assemble_regression(exp, dict.terms, dict.max_lag());
}

RegressionProblem assemble_regression(const Experiment& exp, const NarxStructure& structure) {
  return assemble_regression(exp, structure.terms, structure.max_lag());
}

Eigen::VectorXd one_step_ahead(const Eigen::VectorXd& coefficients, const NarxStructure& structure,
                               const Experiment& exp) {
  if (coefficients.size() != static_cast<Eigen::Index>(structure.size()))
    throw ArgumentError("one_step_ahead: coefficient count differs from term count");
  const RegressionProblem prob = assemble_regression(exp, structure);
  Eigen::VectorXd out = exp.y;
  out.tail(prob.rows()) = prob.A * coefficients;
  return out;
}

Eigen::VectorXd free_run(const NarxStructure& structure, const Eigen::VectorXd& coefficients,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& initial, double divergence_bound) {
  if (coefficients.size() != static_cast<Eigen::Index>(structure.size()))
    throw ArgumentError("free_run: coefficient count differs from term count");
  const auto T = x.size();
  const Eigen::Index L = std::max(structure.max_lag(), 1);
  if (initial.size() < L)
    throw ArgumentError("free_run: need " + std::to_string(L) + " initial values, got " +
                        std::to_string(initial.size()));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(T);
  const Eigen::Index n0 = std::min<Eigen::Index>(L, T);
  y.head(n0) = initial.head(n0);
  for (Eigen::Index t = L; t < T; ++t) {
    double v = 0.0;
    for (std::size_t j = 0; j < structure.terms.size(); ++j)
      v += coefficients[static_cast<Eigen::Index>(j)] *
           structure.terms[j].eval(x.data(), y.data(), static_cast<std::size_t>(t));
    if (!std::isfinite(v) || std::abs(v) > divergence_bound)
      throw InstabilityError("free-run prediction diverged at instant " + std::to_string(t),
                             static_cast<std::size_t>(t));
    y[t] = v;
  }
  return y;
}

double relative_error(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size() || y.size() == 0) throw ArgumentError("relative_error: length mismatch");
  const double den = (y.array() - y.mean()).square().sum();
  if (den == 0.0) throw DomainError("relative_error: response has zero variance");
  return (y - yhat).squaredNorm() / den;
}

CandidateSearch select_candidates(const std::vector<Experiment>& ed, const NarxDictionary& dict,
                                  const SelectionRule& rule, unsigned workers) {
  if (ed.empty()) throw ArgumentError("select_candidates: empty experimental design");
  CandidateSearch out;
  std::vector<double> peak(ed.size());
  for (std::size_t k = 0; k < ed.size(); ++k) peak[k] = ed[k].y.cwiseAbs().maxCoeff();
  for (std::size_t k = 0; k < ed.size(); ++k)
    if (peak[k] > rule.threshold) out.selected_experiments.push_back(k);
  auto largest = [&](std::size_t count) {
    std::vector<std::size_t> order(ed.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return peak[a] > peak[b]; });
    order.resize(std::min(count, order.size()));
    std::sort(order.begin(), order.end());
    return order;
  };
  if (out.selected_experiments.empty()) {
    out.used_fallback = true;
    out.selected_experiments = largest(rule.fallback_top_k);
  } else if (out.selected_experiments.size() < rule.min_selected) {
    out.topped_up = true;
    out.selected_experiments = largest(rule.min_selected);
  }

  // Per experiment: knee prefixes in path order, then the minimum-LOO cut.
  std::vector<std::vector<std::vector<std::size_t>>> supports(out.selected_experiments.size());
  parallel_for(supports.size(), workers, [&](std::size_t i) {
    const auto k = out.selected_experiments[i];
    const LarsPath path = lars_path(assemble_regression(ed[k], dict));
    if (path.empty()) return;
    const std::size_t best = path.best_step();
    auto prefix = [&](std::size_t step) {
      std::vector<std::size_t> cols;
      for (Eigen::Index c : path.steps[step].active) cols.push_back(static_cast<std::size_t>(c));
      return cols;
    };
    if (rule.knee_ratio > 0.0)
      for (std::size_t s = 1; s < best; ++s)
        if (path.steps[s].relative_loo * rule.knee_ratio <= path.steps[s - 1].relative_loo)
          supports[i].push_back(prefix(s));
    supports[i].push_back(prefix(best));
  });

  for (std::size_t i = 0; i < supports.size(); ++i)
    for (const auto& sup : supports[i]) {
      NarxStructure s = NarxStructure::from_dictionary(dict, sup);
      auto it = std::find_if(out.candidates.begin(), out.candidates.end(),
                             [&](const CandidateModel& c) { return c.structure == s; });
      if (it == out.candidates.end())
        out.candidates.push_back({std::move(s), {out.selected_experiments[i]}});
      else if (it->source_experiments.back() != out.selected_experiments[i])
        it->source_experiments.push_back(out.selected_experiments[i]);
    }
  return out;
}

CandidateEvaluation evaluate_candidate(const NarxStructure& structure, const std::vector<Experiment>& ed,
                                       double divergence_bound, unsigned workers) {
  CandidateEvaluation ev;
  ev.structure = structure;
  const auto K = static_cast<Eigen::Index>(ed.size());
  const auto n = static_cast<Eigen::Index>(structure.size());
  ev.coefficients = Eigen::MatrixXd::Constant(K, n, std::numeric_limits<double>::quiet_NaN());
  ev.errors = Eigen::VectorXd::Constant(K, std::numeric_limits<double>::infinity());
  const Eigen::Index L = std::max(structure.max_lag(), 1);
  parallel_for(ed.size(), workers, [&](std::size_t k) {
    const auto kk = static_cast<Eigen::Index>(k);
    Eigen::VectorXd c;
    try {
      c = ols_fit(assemble_regression(ed[k], structure));
    } catch (const SingularityError&) {
      return;
    }
    ev.coefficients.row(kk) = c.transpose();
    try {
      const Eigen::VectorXd yhat = free_run(structure, c, ed[k].x, ed[k].y.head(L), divergence_bound);
      ev.errors[kk] = relative_error(ed[k].y, yhat);
    } catch (const InstabilityError&) {
    }
  });
  double sum = 0.0;
  std::size_t finite = 0;
  for (Eigen::Index k = 0; k < K; ++k) {
    if (std::isfinite(ev.errors[k])) {
      sum += ev.errors[k];
      ++finite;
    } else {
      ++ev.unstable;
    }
  }
  ev.mean_error = finite ? sum / static_cast<double>(finite) : std::numeric_limits<double>::infinity();
  return ev;
}

NarxSelection select_best_structure(const std::vector<CandidateModel>& candidates,
                                    const std::vector<Experiment>& ed, double tolerance, unsigned workers) {
  if (candidates.empty()) throw FitError("no candidate NARX structures to choose from");
  if (ed.empty()) throw ArgumentError("select_best_structure: empty experimental design");
  double ymax = 0.0;
  for (const auto& e : ed) ymax = std::max(ymax, e.y.cwiseAbs().maxCoeff());
  const double bound = kDivergenceFactor * std::max(ymax, 1e-300);

  NarxSelection sel;
  for (const auto& c : candidates) {
    sel.ledger.push_back(evaluate_candidate(c.structure, ed, bound, workers));
    auto& ev = sel.ledger.back();
    ev.qualifies = ev.unstable == 0 && ev.mean_error < tolerance;
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < sel.ledger.size(); ++i) {
    const auto& ev = sel.ledger[i];
    if (!ev.qualifies) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = sel.ledger[*best];
    if (ev.structure.size() < b.structure.size() ||
        (ev.structure.size() == b.structure.size() && ev.mean_error < b.mean_error))
      best = i;
  }
  const bool qualified = best.has_value();
  if (!best) {
    for (std::size_t i = 0; i < sel.ledger.size(); ++i) {
      const auto& ev = sel.ledger[i];
      if (ev.unstable == ed.size()) continue;
      if (!best) {
        best = i;
        continue;
      }
      const auto& b = sel.ledger[*best];
      if (std::make_pair(ev.unstable, ev.mean_error) < std::make_pair(b.unstable, b.mean_error)) best = i;
    }
  }
  if (!best) throw FitError("every candidate NARX structure diverged on every experiment");

  sel.winner = *best;
  const auto& w = sel.ledger[*best];
  sel.model.structure = w.structure;
  sel.model.coefficients = w.coefficients;
  sel.model.errors = w.errors;
  sel.model.mean_error = w.mean_error;
  sel.model.qualified = qualified;
  return sel;
}

nlohmann::json to_json(const NarxTerm& t) {
  return nlohmann::json::array({t.x_exp, t.x_lag, t.y_exp, t.y_lag, t.abs_exp, t.abs_lag});
}

NarxTerm narx_term_from_json(const nlohmann::json& j) {
  if (!j.is_array() || (j.size() != 4 && j.size() != 6))
    throw ArgumentError("NARX term must be [x_exp, x_lag, y_exp, y_lag(, abs_exp, abs_lag)]");
  const int ae = j.size() == 6 ? j[4].get<int>() : 0;
  const int al = j.size() == 6 ? j[5].get<int>() : 0;
  return NarxTerm::make(j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>(), ae, al);
}

nlohmann::json to_json(const NarxStructure& s) {
  nlohmann::json j;
  j["n_x"] = s.n_x;
  j["n_y"] = s.n_y;
  j["terms"] = nlohmann::json::array();
  for (const auto& t : s.terms) j["terms"].push_back(to_json(t));
  j["names"] = nlohmann::json::array();
  for (const auto& t : s.terms) j["names"].push_back(t.name());
  return j;
}

NarxStructure narx_structure_from_json(const nlohmann::json& j) {
  NarxStructure s;
  for (const auto& t : j.at("terms")) s.terms.push_back(narx_term_from_json(t));
  int nx = 0, ny = 0;
  for (const auto& t : s.terms) {
    if (t.x_exp > 0) nx = std::max(nx, t.x_lag);
    ny = std::max(ny, t.max_output_lag());
  }
  s.n_x = j.value("n_x", nx);
  s.n_y = j.value("n_y", ny);
  if (s.n_x < nx || s.n_y < ny) throw ArgumentError("NARX structure lag maxima smaller than its terms' lags");
  return s;
}

nlohmann::json to_json(const DictionarySpec& s) {
  return {{"input_lags", s.input_lags},         {"output_lags", s.output_lags},
          {"abs_lags", s.abs_lags},             {"max_input_exp", s.max_input_exp},
          {"max_output_exp", s.max_output_exp}, {"max_abs_exp", s.max_abs_exp},
          {"max_total_exp", s.max_total_exp},   {"cross_products", s.cross_products},
          {"abs_requires_partner", s.abs_requires_partner}};
}

DictionarySpec dictionary_spec_from_json(const nlohmann::json& j) {
  DictionarySpec s;
  s.input_lags = j.at("input_lags").get<std::vector<int>>();
  s.output_lags = j.at("output_lags").get<std::vector<int>>();
  s.abs_lags = j.value("abs_lags", std::vector<int>{});
  s.max_input_exp = j.value("max_input_exp", s.max_input_exp);
  s.max_output_exp = j.value("max_output_exp", s.max_output_exp);
  s.max_abs_exp = j.value("max_abs_exp", s.abs_lags.empty() ? 0 : 1);
  s.max_total_exp = j.value("max_total_exp", s.max_total_exp);
  s.cross_products = j.value("cross_products", s.cross_products);
  s.abs_requires_partner = j.value("abs_requires_partner", s.abs_requires_partner);
  return s;
}

}  // namespace pcnarx
