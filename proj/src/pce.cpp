#include "pcnarx/pce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcnarx/errors.hpp"
#include "pcnarx/parallel.hpp"
#include "pcnarx/sparsereg.hpp"

namespace pcnarx {

PceModel::PceModel(InputModel input, BasisFamily basis, std::vector<MultiIndex> indices,
                   Eigen::VectorXd coefficients, double relative_loo, int degree)
    : input_(std::move(input)), basis_(std::move(basis)), indices_(std::move(indices)),
      coefficients_(std::move(coefficients)), loo_(relative_loo), degree_(degree) {
  if (static_cast<Eigen::Index>(indices_.size()) != coefficients_.size())
    throw ArgumentError("PceModel: one coefficient per retained index required");
  for (const auto& a : indices_)
    if (a.size() != basis_.dim()) throw ArgumentError("PceModel: index dimension mismatch");
}

double PceModel::eval_reduced(const Eigen::VectorXd& reduced) const {
  int pmax = 0;
  for (const auto& a : indices_)
    for (int d : a) pmax = std::max(pmax, d);
  const auto dims = basis_.dim();
  std::vector<double> table(dims * static_cast<std::size_t>(pmax + 1));
  for (std::size_t d = 0; d < dims; ++d)
    eval_univariate_all(basis_.families[d], pmax, reduced[static_cast<Eigen::Index>(d)],
                        &table[d * static_cast<std::size_t>(pmax + 1)]);
  double acc = 0.0;
  for (std::size_t j = 0; j < indices_.size(); ++j) {
    double v = coefficients_[static_cast<Eigen::Index>(j)];
    for (std::size_t d = 0; d < dims; ++d)
      if (indices_[j][d] > 0) v *= table[d * static_cast<std::size_t>(pmax + 1) + static_cast<std::size_t>(indices_[j][d])];
    acc += v;
  }
  return acc;
}

Eigen::VectorXd PceModel::eval_reduced(const Eigen::MatrixXd& reduced) const {
  Eigen::VectorXd out(reduced.rows());
  for (Eigen::Index k = 0; k < reduced.rows(); ++k) out[k] = eval_reduced(Eigen::VectorXd(reduced.row(k).transpose()));
  return out;
}

double PceModel::eval(const Eigen::VectorXd& xi) const {
  return eval_reduced(to_reduced(input_, basis_, xi));
}

double PceModel::mean() const {
  for (std::size_t j = 0; j < indices_.size(); ++j)
    if (total_degree(indices_[j]) == 0) return coefficients_[static_cast<Eigen::Index>(j)];
  return 0.0;
}

double PceModel::variance() const {
  double v = 0.0;
  for (std::size_t j = 0; j < indices_.size(); ++j)
    if (total_degree(indices_[j]) != 0) v += coefficients_[static_cast<Eigen::Index>(j)] * coefficients_[static_cast<Eigen::Index>(j)];
  return v;
}

namespace {

Eigen::MatrixXd reduce_samples(const InputModel& im, const BasisFamily& basis,
                               const Eigen::MatrixXd& samples) {
  if (static_cast<std::size_t>(samples.cols()) != im.dim())
    throw ArgumentError("design samples have " + std::to_string(samples.cols()) +
                        " columns, input model has " + std::to_string(im.dim()));
  Eigen::MatrixXd reduced(samples.rows(), samples.cols());
  for (Eigen::Index k = 0; k < samples.rows(); ++k)
    reduced.row(k) = to_reduced(im, basis, samples.row(k).transpose()).transpose();
  return reduced;
}

void check_settings(const PceSettings& s) {
  if (s.p_min < 0 || s.p_max < s.p_min) throw ArgumentError("PCE settings: need 0 <= p_min <= p_max");
  if (!(s.q > 0.0 && s.q <= 1.0)) throw ArgumentError("PCE settings: q must lie in (0, 1]");
  if (s.r < 0) throw ArgumentError("PCE settings: r must be >= 0");
}

}  // namespace

PceDesign::PceDesign(const InputModel& im, const Eigen::MatrixXd& samples, const PceSettings& settings)
    : input_(im), basis_(BasisFamily::for_input(im)), reduced_(reduce_samples(im, basis_, samples)),
      settings_((check_settings(settings), settings)), cache_(basis_, reduced_, settings.p_max) {}

const PceDesign::Candidates& PceDesign::candidates(int p) const {
  std::lock_guard lock(mutex_);
  auto it = by_degree_.find(p);
  if (it != by_degree_.end()) return it->second;
  Candidates c;
  c.indices = generate_multi_indices(input_.dim(), p, settings_.q, settings_.r).indices;
  c.matrix = cache_.matrix(c.indices);
  return by_degree_.emplace(p, std::move(c)).first->second;
}

PceModel fit_adaptive(const PceDesign& design, const Eigen::VectorXd& responses) {
  const auto& s = design.settings();
  const Eigen::Index n = design.size();
  if (responses.size() != n)
    throw ArgumentError("fit_adaptive: " + std::to_string(responses.size()) + " responses for " +
                        std::to_string(n) + " design points");
  if (n < 3) throw ArgumentError("fit_adaptive: at least 3 design points required");
  if (!responses.allFinite()) throw ArgumentError("fit_adaptive: non-finite responses");

  const auto& im = design.input_model();
  if (responses.cwiseAbs().maxCoeff() == 0.0) {
    return PceModel(im, design.basis(), {MultiIndex(im.dim(), 0)}, Eigen::VectorXd::Zero(1), 0.0, s.p_min);
  }

  double best_loo = std::numeric_limits<double>::infinity();
  std::optional<PceModel> best;
  double prev_loo = std::numeric_limits<double>::infinity();
  int increases = 0;
  for (int p = s.p_min; p <= s.p_max; ++p) {
    const auto& cand = design.candidates(p);
    if (cand.indices.empty()) continue;
    LarsOptions opts;
    const std::size_t limit = std::min(static_cast<std::size_t>(n - 1), cand.indices.size());
    opts.patience = s.lars_patience > 0 ? s.lars_patience : std::max<std::size_t>(10, limit / 10);
    const LarsPath path = lars_path({cand.matrix, responses}, opts);
    if (path.empty()) continue;
    const auto& step = path.steps[path.best_step()];
    const double loo = step.relative_loo;
    const bool better = loo < best_loo && !(best_loo <= kExactFitLoo);
    if (better) {
      best_loo = loo;
      std::vector<MultiIndex> kept;
      for (Eigen::Index c : step.active) kept.push_back(cand.indices[static_cast<std::size_t>(c)]);
      // Store in graded order for readability.
      std::vector<std::size_t> order(kept.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return graded_less(kept[a], kept[b]); });
      std::vector<MultiIndex> sorted;
      Eigen::VectorXd coef(static_cast<Eigen::Index>(kept.size()));
      for (std::size_t i = 0; i < order.size(); ++i) {
        sorted.push_back(kept[order[i]]);
        coef[static_cast<Eigen::Index>(i)] = step.coefficients[static_cast<Eigen::Index>(order[i])];
      }
      best = PceModel(im, design.basis(), std::move(sorted), std::move(coef), loo, p);
    }
    if (best_loo <= kExactFitLoo) break;
    increases = loo > prev_loo ? increases + 1 : 0;
    prev_loo = loo;
    if (increases >= s.degree_patience) break;
  }
  if (!best || !std::isfinite(best_loo))
    throw FitError("fit_adaptive: no candidate degree produced a finite LOO error (best " +
                   std::to_string(best_loo) + ")");
  return *best;
}

PceModel fit_adaptive(const InputModel& im, const Eigen::MatrixXd& samples,
                      const Eigen::VectorXd& responses, const PceSettings& settings) {
  return fit_adaptive(PceDesign(im, samples, settings), responses);
}

Eigen::VectorXd TimeFrozenPce::predict(const Eigen::VectorXd& xi) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(models.size()));
  if (models.empty()) return out;
  const Eigen::VectorXd u = to_reduced(models.front().input_model(), models.front().basis(), xi);
  for (std::size_t i = 0; i < models.size(); ++i) out[static_cast<Eigen::Index>(i)] = models[i].eval_reduced(u);
  return out;
}

const PceModel& TimeFrozenPce::at(std::size_t instant) const {
  for (std::size_t i = 0; i < instants.size(); ++i)
    if (instants[i] == instant) return models[i];
  throw ArgumentError("time-frozen PCE has no model at instant " + std::to_string(instant));
}

TimeFrozenPce fit_time_frozen(const InputModel& im, const Eigen::MatrixXd& samples,
                              const Eigen::MatrixXd& trajectories, double dt,
                              const PceSettings& settings, std::vector<std::size_t> instants,
                              unsigned workers) {
  if (trajectories.rows() != samples.rows())
    throw ArgumentError("fit_time_frozen: one trajectory per design sample required");
  if (instants.empty())
    for (Eigen::Index t = 0; t < trajectories.cols(); ++t) instants.push_back(static_cast<std::size_t>(t));
  for (auto t : instants)
    if (t >= static_cast<std::size_t>(trajectories.cols()))
      throw ArgumentError("fit_time_frozen: instant " + std::to_string(t) + " beyond the time grid");

  const PceDesign design(im, samples, settings);
  TimeFrozenPce tf;
  tf.dt = dt;
  tf.instants = instants;
  tf.models.resize(instants.size());
  parallel_for(instants.size(), workers, [&](std::size_t i) {
    try {
      tf.models[i] = fit_adaptive(design, trajectories.col(static_cast<Eigen::Index>(instants[i])));
    } catch (const std::exception& e) {
      throw FitError("time-frozen fit failed at instant " + std::to_string(instants[i]) + ": " + e.what());
    }
  });
  return tf;
}

nlohmann::json to_json(const PceModel& model, bool embed_input) {
  nlohmann::json j;
  if (embed_input) j["input_model"] = to_json(model.input_model());
  std::vector<std::string> fam;
  for (auto f : model.basis().families) fam.push_back(to_string(f));
  j["basis"] = fam;
  j["indices"] = model.indices();
  j["coefficients"] = std::vector<double>(model.coefficients().data(),
                                          model.coefficients().data() + model.coefficients().size());
  j["loo"] = model.loo();
  j["degree"] = model.degree();
  return j;
}

PceModel pce_from_json(const nlohmann::json& j, const std::optional<InputModel>& input) {
  InputModel im = input ? *input : input_model_from_json(j.at("input_model"));
  BasisFamily basis;
  for (const auto& f : j.at("basis")) basis.families.push_back(poly_family_from_string(f.get<std::string>()));
  auto indices = j.at("indices").get<std::vector<MultiIndex>>();
  const auto coef = j.at("coefficients").get<std::vector<double>>();
  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
  return PceModel(std::move(im), std::move(basis), std::move(indices), std::move(c),
                  j.at("loo").get<double>(), j.value("degree", 0));
}

nlohmann::json to_json(const TimeFrozenPce& tf) {
  nlohmann::json j;
  j["dt"] = tf.dt;
  j["instants"] = tf.instants;
  if (!tf.models.empty()) j["input_model"] = to_json(tf.models.front().input_model());
  j["models"] = nlohmann::json::array();
  for (const auto& m : tf.models) j["models"].push_back(to_json(m, false));
  return j;
}

TimeFrozenPce time_frozen_from_json(const nlohmann::json& j) {
  TimeFrozenPce tf;
  tf.dt = j.at("dt").get<double>();
  tf.instants = j.at("instants").get<std::vector<std::size_t>>();
  if (!tf.instants.empty()) {
    const InputModel im = input_model_from_json(j.at("input_model"));
    for (const auto& mj : j.at("models")) tf.models.push_back(pce_from_json(mj, im));
  }
  return tf;
}

}  // namespace pcnarx
