#include "pcnarx/pc_narx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pcnarx/errors.hpp"
#include "pcnarx/parallel.hpp"
#include "pcnarx/rng.hpp"

namespace pcnarx {

PcNarxModel::PcNarxModel(NarxStructure structure, std::vector<PceModel> coefficient_pces, double divergence_bound,
                         double dt, nlohmann::json provenance)
    : structure_(std::move(structure)), pces_(std::move(coefficient_pces)), bound_(divergence_bound), dt_(dt),
      provenance_(std::move(provenance)) {
  if (structure_.terms.empty()) throw ArgumentError("PC-NARX model needs at least one term");
  if (pces_.size() != structure_.size())
    throw ArgumentError("PC-NARX model needs one coefficient PCE per NARX term");
}

Eigen::VectorXd PcNarxModel::coefficients(const Eigen::VectorXd& xi) const {
  const auto& im = input_model();
  im.check_support(xi);
  const Eigen::VectorXd u = to_reduced(im, pces_.front().basis(), xi);
  Eigen::VectorXd c(static_cast<Eigen::Index>(pces_.size()));
  for (std::size_t i = 0; i < pces_.size(); ++i) c[static_cast<Eigen::Index>(i)] = pces_[i].eval_reduced(u);
  return c;
}

Eigen::VectorXd PcNarxModel::predict(const Eigen::VectorXd& xi, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& initial) const {
  return free_run(structure_, coefficients(xi), x, initial, bound_);
}

Eigen::VectorXd PcNarxModel::predict(const Eigen::VectorXd& xi, const Eigen::VectorXd& x) const {
  return predict(xi, x, Eigen::VectorXd::Zero(std::max(structure_.max_lag(), 1)));
}

PcNarxModel fit_coefficient_pces(const NarxStructure& structure, const Eigen::MatrixXd& xi,
                                 const Eigen::MatrixXd& coefficients, const InputModel& input,
                                 const PceSettings& settings, double divergence_bound, double dt, unsigned workers) {
  if (coefficients.cols() != static_cast<Eigen::Index>(structure.size()) || coefficients.rows() != xi.rows())
    throw ArgumentError("coefficient matrix must be (experiments x terms)");
  const PceDesign design(input, xi, settings);
  std::vector<PceModel> pces(structure.size());
  parallel_for(structure.size(), workers, [&](std::size_t i) {
    try {
      pces[i] = fit_adaptive(design, coefficients.col(static_cast<Eigen::Index>(i)));
    } catch (const std::exception& e) {
      throw FitError("coefficient PCE for term " + structure.terms[i].name() + " failed: " + e.what());
    }
  });
  return PcNarxModel(structure, std::move(pces), divergence_bound, dt);
}

std::string to_string(DegreeSelection d) { return d == DegreeSelection::loo ? "loo" : "cross_validation"; }

DegreeSelection degree_selection_from_string(const std::string& s) {
  if (s == "loo") return DegreeSelection::loo;
  if (s == "cross_validation" || s == "cv") return DegreeSelection::cross_validation;
  throw ArgumentError("unknown degree selection '" + s + "' (expected loo or cross_validation)");
}

DegreeSweep select_common_degree(const NarxStructure& structure, const std::vector<Experiment>& ed,
                                 const Eigen::MatrixXd& coefficients, const InputModel& input,
                                 const PceSettings& settings, std::size_t folds, double divergence_bound,
                                 unsigned workers) {
  const std::size_t n = ed.size();
  if (coefficients.rows() != static_cast<Eigen::Index>(n)) throw ArgumentError("one coefficient row per experiment");
  if (folds < 2 || folds > n) throw ArgumentError("cross-validation needs 2 <= folds <= experiments");
  const double dt = ed.front().dt;

  // Fold designs are degree independent; keep the split fixed over the sweep.
  std::vector<Eigen::MatrixXd> xi_train(folds), coef_train(folds);
  std::vector<std::vector<Experiment>> held(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train;
    for (std::size_t k = 0; k < n; ++k) {
      if (k % folds == f) held[f].push_back(ed[k]);
      else train.push_back(k);
    }
    xi_train[f].resize(static_cast<Eigen::Index>(train.size()), ed.front().xi.size());
    coef_train[f].resize(static_cast<Eigen::Index>(train.size()), coefficients.cols());
    for (std::size_t r = 0; r < train.size(); ++r) {
      xi_train[f].row(static_cast<Eigen::Index>(r)) = ed[train[r]].xi.transpose();
      coef_train[f].row(static_cast<Eigen::Index>(r)) = coefficients.row(static_cast<Eigen::Index>(train[r]));
    }
  }

  DegreeSweep out;
  auto worse = [](std::size_t ua, double ea, std::size_t ub, double eb) { return ua != ub ? ua > ub : ea > eb; };
  int increases = 0;
  for (int p = settings.p_min; p <= settings.p_max; ++p) {
    PceSettings ps = settings;
    ps.p_min = ps.p_max = p;
    double sum = 0.0;
    std::size_t finite = 0, unstable = 0;
    try {
      for (std::size_t f = 0; f < folds; ++f) {
        const auto m = fit_coefficient_pces(structure, xi_train[f], coef_train[f], input, ps, divergence_bound, dt,
                                            workers);
        const auto r = validate(m, held[f], workers);
        for (double e : r.errors) {
          if (std::isfinite(e)) {
            sum += e;
            ++finite;
          } else {
            ++unstable;
          }
        }
      }
    } catch (const FitError&) {
      break;  // degree no longer estimable on the reduced designs
    }
    const double err = finite ? sum / static_cast<double>(finite) : std::numeric_limits<double>::infinity();
    if (!out.degrees.empty()) {
      increases = worse(unstable, err, out.unstable.back(), out.errors.back()) ? increases + 1 : 0;
    }
    out.degrees.push_back(p);
    out.errors.push_back(err);
    out.unstable.push_back(unstable);
    if (increases >= settings.degree_patience) break;
  }
  if (out.degrees.empty()) throw FitError("cross-validation could not fit any PCE degree");
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.degrees.size(); ++i)
    if (worse(out.unstable[best], out.errors[best], out.unstable[i], out.errors[i])) best = i;
  out.degree = out.degrees[best];
  return out;
}

PcNarxFit fit_pc_narx(const std::vector<Experiment>& ed, const NarxDictionary& dict, const InputModel& input,
                      const PcNarxSettings& settings) {
  if (ed.empty()) throw ArgumentError("fit_pc_narx: empty experimental design");
  const auto T = ed.front().size();
  const double dt = ed.front().dt;
  for (const auto& e : ed) {
    e.validate();
    if (e.size() != T || e.dt != dt) throw ArgumentError("fit_pc_narx: experiments must share the time grid");
    if (static_cast<std::size_t>(e.xi.size()) != input.dim())
      throw ArgumentError("fit_pc_narx: experiment parameters do not match the input model");
  }

  PcNarxFit out;
  out.search = select_candidates(ed, dict, settings.rule, settings.workers);
  if (out.search.candidates.empty()) throw FitError("no candidate NARX structure could be extracted");
  out.selection = select_best_structure(out.search.candidates, ed, settings.tolerance, settings.workers);

  const auto& m = out.selection.model;
  for (std::size_t k = 0; k < ed.size(); ++k)
    if (m.coefficients.row(static_cast<Eigen::Index>(k)).allFinite()) out.phase2_experiments.push_back(k);
  if (out.phase2_experiments.size() < 3) throw FitError("too few experiments with estimable NARX coefficients");
  Eigen::MatrixXd xi(static_cast<Eigen::Index>(out.phase2_experiments.size()), static_cast<Eigen::Index>(input.dim()));
  Eigen::MatrixXd coef(xi.rows(), m.coefficients.cols());
  for (std::size_t r = 0; r < out.phase2_experiments.size(); ++r) {
    const auto k = out.phase2_experiments[r];
    xi.row(static_cast<Eigen::Index>(r)) = ed[k].xi.transpose();
    coef.row(static_cast<Eigen::Index>(r)) = m.coefficients.row(static_cast<Eigen::Index>(k));
  }
  double ymax = 0.0;
  for (const auto& e : ed) ymax = std::max(ymax, e.y.cwiseAbs().maxCoeff());
  const double bound = kDivergenceFactor * ymax;
  PceSettings pce = settings.pce;
  if (settings.degree_selection == DegreeSelection::cross_validation) {
    std::vector<Experiment> used;
    for (auto k : out.phase2_experiments) used.push_back(ed[k]);
    out.degree_sweep = select_common_degree(m.structure, used, coef, input, pce,
                                            std::min(settings.cv_folds, used.size()), bound, settings.workers);
    pce.p_min = pce.p_max = out.degree_sweep.degree;
  }
  out.model = fit_coefficient_pces(m.structure, xi, coef, input, pce, bound, dt, settings.workers);

  nlohmann::json prov;
  prov["experiments"] = ed.size();
  prov["threshold"] = settings.rule.threshold;
  prov["fallback_top_k"] = settings.rule.fallback_top_k;
  prov["min_selected"] = settings.rule.min_selected;
  prov["tolerance"] = settings.tolerance;
  prov["pce"] = {{"p_min", settings.pce.p_min}, {"p_max", settings.pce.p_max}, {"q", settings.pce.q},
                 {"r", settings.pce.r}};
  prov["degree_selection"] = to_string(settings.degree_selection);
  if (settings.degree_selection == DegreeSelection::cross_validation) {
    prov["cv_folds"] = settings.cv_folds;
    prov["cv_degree"] = out.degree_sweep.degree;
    prov["cv_sweep"] = {{"degrees", out.degree_sweep.degrees}, {"errors", out.degree_sweep.errors},
                        {"unstable", out.degree_sweep.unstable}};
  }
  prov["ed_mean_error"] = m.mean_error;
  prov["qualified"] = m.qualified;
  out.model = PcNarxModel(out.model.structure(), out.model.coefficient_pces(), out.model.divergence_bound(), dt,
                          std::move(prov));
  return out;
}

double scalar_relative_error(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  return relative_error(y, yhat);
}

namespace {

void pointwise_stats(const std::vector<const Eigen::VectorXd*>& runs, Eigen::VectorXd& mean, Eigen::VectorXd& sd) {
  if (runs.empty()) {
    mean.resize(0);
    sd.resize(0);
    return;
  }
  const auto T = runs.front()->size();
  mean = Eigen::VectorXd::Zero(T);
  for (const auto* r : runs) mean += *r;
  mean /= static_cast<double>(runs.size());
  sd = Eigen::VectorXd::Zero(T);
  for (const auto* r : runs) sd += (*r - mean).cwiseAbs2();
  sd = (sd / static_cast<double>(std::max<std::size_t>(runs.size() - 1, 1))).cwiseSqrt();
}

double safe_relative_error(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  try {
    return relative_error(y, yhat);
  } catch (const DomainError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

ValidationReport compare_predictions(const std::vector<Experiment>& validation,
                                     const std::vector<Eigen::VectorXd>& predictions, bool keep_predictions) {
  if (validation.size() != predictions.size()) throw ArgumentError("one prediction per validation run required");
  const auto n = static_cast<Eigen::Index>(validation.size());
  ValidationReport r;
  r.errors = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  r.max_actual = Eigen::VectorXd::Zero(n);
  r.max_predicted = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  std::vector<const Eigen::VectorXd*> act, pred;
  std::vector<double> ma, mp;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = validation[static_cast<std::size_t>(i)];
    const auto& p = predictions[static_cast<std::size_t>(i)];
    r.max_actual[i] = e.y.cwiseAbs().maxCoeff();
    if (p.size() != e.y.size() || !p.allFinite()) {
      ++r.unstable;
      ++r.above_threshold;
      continue;
    }
    r.errors[i] = relative_error(e.y, p);
    r.max_predicted[i] = p.cwiseAbs().maxCoeff();
    sum += r.errors[i];
    if (r.errors[i] > 0.1) ++r.above_threshold;
    act.push_back(&e.y);
    pred.push_back(&p);
    ma.push_back(r.max_actual[i]);
    mp.push_back(r.max_predicted[i]);
  }
  const std::size_t finite = act.size();
  r.mean_error = finite ? sum / static_cast<double>(finite) : std::numeric_limits<double>::infinity();
  r.fraction_above = n ? static_cast<double>(r.above_threshold) / static_cast<double>(n) : 0.0;
  if (finite >= 2) {
    r.max_error = safe_relative_error(Eigen::Map<Eigen::VectorXd>(ma.data(), static_cast<Eigen::Index>(finite)),
                                      Eigen::Map<Eigen::VectorXd>(mp.data(), static_cast<Eigen::Index>(finite)));
  } else {
    r.max_error = std::numeric_limits<double>::quiet_NaN();
  }
  pointwise_stats(act, r.mean_actual, r.std_actual);
  pointwise_stats(pred, r.mean_predicted, r.std_predicted);
  r.mean_traj_error = safe_relative_error(r.mean_actual, r.mean_predicted);
  r.std_traj_error = safe_relative_error(r.std_actual, r.std_predicted);
  if (keep_predictions) r.predictions = predictions;
  return r;
}

ValidationReport validate(const PcNarxModel& model, const std::vector<Experiment>& validation, unsigned workers,
                          bool keep_predictions) {
  if (validation.empty()) throw ArgumentError("validate: no validation experiments");
  std::vector<Eigen::VectorXd> preds(validation.size());
  const Eigen::Index L = std::max(model.structure().max_lag(), 1);
  parallel_for(validation.size(), workers, [&](std::size_t i) {
    const auto& e = validation[i];
    if (model.dt() > 0.0 && std::abs(e.dt - model.dt()) > 1e-12 * model.dt())
      throw ArgumentError("validation time step differs from the model's");
    try {
      preds[i] = model.predict(e.xi, e.x, e.y.head(L));
    } catch (const InstabilityError&) {
      preds[i] = Eigen::VectorXd();
    }
  });
  return compare_predictions(validation, preds, keep_predictions);
}

KernelDensity gaussian_kde(const Eigen::VectorXd& s, std::size_t points) {
  if (s.size() < 2) throw ArgumentError("kernel density needs at least two samples");
  if (points < 2) throw ArgumentError("kernel density needs at least two grid points");
  const auto n = static_cast<double>(s.size());
  const double mean = s.mean();
  const double sd = std::sqrt((s.array() - mean).square().sum() / (n - 1.0));
  std::vector<double> sorted(s.data(), s.data() + s.size());
  std::sort(sorted.begin(), sorted.end());
  auto quant = [&](double p) {
    const double pos = p * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quant(0.75) - quant(0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  if (!(spread > 0.0)) spread = std::max(std::abs(mean), 1.0) * 1e-6;
  KernelDensity k;
  k.bandwidth = 0.9 * spread * std::pow(n, -0.2);
  const double lo = sorted.front() - 3.0 * k.bandwidth;
  const double hi = sorted.back() + 3.0 * k.bandwidth;
  k.grid = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(points), lo, hi);
  k.density = Eigen::VectorXd::Zero(k.grid.size());
  const double norm = 1.0 / (n * k.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (Eigen::Index g = 0; g < k.grid.size(); ++g) {
    double acc = 0.0;
    for (double v : sorted) {
      const double z = (k.grid[g] - v) / k.bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    k.density[g] = acc * norm;
  }
  return k;
}

McsStatistics mcs_statistics(const PcNarxModel& model, const InputModel& input, const ExcitationGenerator& gen,
                             std::size_t n, std::uint64_t seed, unsigned workers, std::size_t density_points) {
  if (n < 100) throw ArgumentError("mcs_statistics: need at least 100 samples");
  std::vector<Eigen::VectorXd> runs(n);
  parallel_for(n, workers, [&](std::size_t i) {
    auto prng = run_stream(seed, i);
    const Eigen::VectorXd xi = input.sample_mc(1, prng).row(0).transpose();
    auto xrng = run_stream(seed + 1, i);
    const Eigen::VectorXd x = gen(xi, xrng);
    try {
      runs[i] = model.predict(xi, x);
    } catch (const InstabilityError&) {
      runs[i] = Eigen::VectorXd();
    }
  });
  McsStatistics st;
  std::vector<const Eigen::VectorXd*> ok;
  std::vector<double> peaks;
  for (const auto& r : runs) {
    if (r.size() == 0) {
      ++st.unstable;
      continue;
    }
    ok.push_back(&r);
    peaks.push_back(r.cwiseAbs().maxCoeff());
  }
  st.warning = static_cast<double>(st.unstable) > 0.01 * static_cast<double>(n);
  if (ok.size() < 2) throw FitError("mcs_statistics: fewer than two stable surrogate runs");
  pointwise_stats(ok, st.mean, st.std);
  st.max_response = Eigen::Map<Eigen::VectorXd>(peaks.data(), static_cast<Eigen::Index>(peaks.size()));
  const auto kde = gaussian_kde(st.max_response, density_points);
  st.density_grid = kde.grid;
  st.density = kde.density;
  st.bandwidth = kde.bandwidth;
  return st;
}

Eigen::VectorXd integrate_trapezoid(const Eigen::VectorXd& v, double dt) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  for (Eigen::Index k = 1; k < v.size(); ++k) out[k] = out[k - 1] + 0.5 * dt * (v[k - 1] + v[k]);
  return out;
}

nlohmann::json to_json(const PcNarxModel& model) {
  nlohmann::json j;
  j["structure"] = to_json(model.structure());
  j["input_model"] = to_json(model.input_model());
  j["dt"] = model.dt();
  j["divergence_bound"] = model.divergence_bound();
  j["coefficients"] = nlohmann::json::array();
  for (const auto& p : model.coefficient_pces()) j["coefficients"].push_back(to_json(p, false));
  if (!model.provenance().is_null()) j["provenance"] = model.provenance();
  return j;
}

PcNarxModel pc_narx_from_json(const nlohmann::json& j) {
  const InputModel im = input_model_from_json(j.at("input_model"));
  std::vector<PceModel> pces;
  for (const auto& c : j.at("coefficients")) pces.push_back(pce_from_json(c, im));
  return PcNarxModel(narx_structure_from_json(j.at("structure")), std::move(pces),
                     j.value("divergence_bound", std::numeric_limits<double>::infinity()), j.value("dt", 0.0),
                     j.value("provenance", nlohmann::json()));
}

}  // namespace pcnarx
