// pcnarx: simulate campaigns, fit PC-NARX / time-frozen PCE surrogates,
// predict, validate and export Monte Carlo statistics.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 algorithmic failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcnarx/benchmarks.hpp"
#include "pcnarx/errors.hpp"
#include "pcnarx/io.hpp"
#include "pcnarx/parallel.hpp"
#include "pcnarx/pc_narx.hpp"
#include "pcnarx/pce.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace pcnarx;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitAlgorithm = 3;

// Raised for anything the user can fix by changing the command line or config.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags override the config file, which overrides built-in defaults. Each
// registered flag writes its value into the config only when given.
struct Overrides {
  std::vector<std::function<void(json&)>> apply;
  std::string config_file;

  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    apply.push_back([opt, value, key](json& cfg) {
      if (opt->count()) cfg[json::json_pointer(key)] = *value;
    });
    return opt;
  }

  json resolve(json defaults) const {
    if (!config_file.empty()) {
      json file = read_json(config_file);
      if (!file.is_object()) throw ConfigError(config_file + ": config must be a JSON object");
      defaults.merge_patch(file);
    }
    for (const auto& f : apply) f(defaults);
    return defaults;
  }
};

template <typename T>
T get(const json& cfg, const std::string& key) {
  if (!cfg.contains(key) || cfg.at(key).is_null()) throw ConfigError("missing setting '" + key + "'");
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("setting '" + key + "': " + e.what());
  }
}

fs::path output_dir(const json& cfg) {
  const auto out = get<std::string>(cfg, "out");
  fs::create_directories(out);
  return out;
}

void echo_config(const fs::path& dir, const json& cfg) { write_json(dir / "config.json", cfg); }

// Inline object, path to a JSON file, or null for the fallback.
json inline_or_file(const json& v) {
  if (v.is_string()) return read_json(v.get<std::string>());
  return v;
}

Eigen::VectorXd time_axis(std::size_t n, double dt) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < t.size(); ++k) t[k] = dt * static_cast<double>(k);
  return t;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------- simulate

json simulate_defaults(SystemId id) {
  const auto d = system_defaults(id);
  return {{"system", to_string(id)}, {"n", d.ed_size},  {"seed", 1},       {"dt", d.dt},
          {"duration", d.duration},  {"sampling", "lhs"}, {"rtol", 1e-3},   {"atol", 1e-6},
          {"h_max", 0.0},            {"workers", 1},      {"input_model", nullptr}};
}

int cmd_simulate(const Overrides& ov) {
  json cfg = ov.resolve({});
  const SystemId id = system_from_string(cfg.value("system", std::string("quarter_car")));
  json full = simulate_defaults(id);
  full.merge_patch(cfg);
  cfg = full;

  CampaignSettings s;
  s.system = id;
  const auto n = get<long long>(cfg, "n");
  if (n <= 0) throw ConfigError("n must be positive");
  s.n = static_cast<std::size_t>(n);
  s.seed = get<std::uint64_t>(cfg, "seed");
  s.dt = get<double>(cfg, "dt");
  s.duration = get<double>(cfg, "duration");
  s.sampling = get<std::string>(cfg, "sampling");
  s.rtol = get<double>(cfg, "rtol");
  s.atol = get<double>(cfg, "atol");
  s.h_max = get<double>(cfg, "h_max");
  s.workers = get<unsigned>(cfg, "workers");
  if (s.dt <= 0.0 || s.duration <= s.dt) throw ConfigError("need 0 < dt < duration");
  if (s.sampling != "lhs" && s.sampling != "mc") throw ConfigError("sampling must be lhs or mc");

  const json im_cfg = inline_or_file(cfg["input_model"]);
  const InputModel im = im_cfg.is_null() ? default_input_model(id) : input_model_from_json(im_cfg);
  if (im.dim() != default_input_model(id).dim())
    throw ConfigError("input model dimension does not match system " + to_string(id));
  cfg["input_model"] = to_json(im);

  const auto dir = output_dir(cfg);
  const Campaign c = run_campaign(s, im);
  write_campaign(dir, c);
  echo_config(dir, cfg);
  std::cout << "simulate: " << c.experiments.size() << " runs of " << to_string(id) << ", " << c.failures()
            << " solver failures -> " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- fit

json fit_defaults() {
  const PcNarxSettings s;
  return {{"mode", "pcnarx"},
          {"threshold", nullptr},
          {"tolerance", s.tolerance},
          {"min_selected", s.rule.min_selected},
          {"fallback_top_k", s.rule.fallback_top_k},
          {"knee_ratio", s.rule.knee_ratio},
          {"dictionary", nullptr},
          {"pce",
           {{"p_min", s.pce.p_min},
            {"p_max", s.pce.p_max},
            {"q", s.pce.q},
            {"r", s.pce.r},
            {"degree_patience", s.pce.degree_patience}}},
          {"degree_selection", to_string(s.degree_selection)},
          {"cv_folds", s.cv_folds},
          {"times", json::array()},
          {"stride", 1},
          {"allow_unqualified", false},
          {"workers", 1}};
}

PceSettings pce_settings(const json& j) {
  PceSettings p;
  p.p_min = j.value("p_min", p.p_min);
  p.p_max = j.value("p_max", p.p_max);
  p.q = j.value("q", p.q);
  p.r = j.value("r", p.r);
  p.degree_patience = j.value("degree_patience", p.degree_patience);
  if (p.p_min < 0 || p.p_max < p.p_min) throw ConfigError("pce degrees need 0 <= p_min <= p_max");
  if (!(p.q > 0.0 && p.q <= 1.0)) throw ConfigError("pce q must lie in (0, 1]");
  return p;
}

json candidate_table(const PcNarxFit& fit, const std::string& x_name, const std::string& y_name) {
  json rows = json::array();
  for (std::size_t i = 0; i < fit.selection.ledger.size(); ++i) {
    const auto& ev = fit.selection.ledger[i];
    rows.push_back({{"index", i},
                    {"terms", ev.structure.size()},
                    {"mean_error", ev.mean_error},
                    {"unstable", ev.unstable},
                    {"qualifies", ev.qualifies},
                    {"winner", i == fit.selection.winner},
                    {"structure", ev.structure.describe(x_name, y_name)}});
  }
  return rows;
}

void print_ledger(const json& rows) {
  std::cout << "  #  terms  mean_error  unstable  structure\n";
  for (const auto& r : rows) {
    std::string text = r["structure"].get<std::string>();
    if (text.size() > 110) text = text.substr(0, 106) + " ...}";
    std::printf("%s%2zu  %5zu  %10.3e  %8zu  %s\n", r["winner"].get<bool>() ? "*" : " ", r["index"].get<std::size_t>(),
                r["terms"].get<std::size_t>(), r["mean_error"].get<double>(), r["unstable"].get<std::size_t>(), text.c_str());
  }
}

int fit_pcnarx(const json& cfg, const LoadedCampaign& ed, const fs::path& dir) {
  const SystemId id = ed.settings.system;
  const auto d = system_defaults(id);
  const std::string x_name = d.input, y_name = d.target;

  PcNarxSettings s;
  s.rule.threshold = get<double>(cfg, "threshold");
  s.rule.min_selected = get<std::size_t>(cfg, "min_selected");
  s.rule.fallback_top_k = get<std::size_t>(cfg, "fallback_top_k");
  s.rule.knee_ratio = get<double>(cfg, "knee_ratio");
  s.tolerance = get<double>(cfg, "tolerance");
  s.pce = pce_settings(cfg.at("pce"));
  s.degree_selection = degree_selection_from_string(get<std::string>(cfg, "degree_selection"));
  s.cv_folds = get<std::size_t>(cfg, "cv_folds");
  s.workers = get<unsigned>(cfg, "workers");

  const DictionarySpec spec = dictionary_spec_from_json(cfg.at("dictionary"));
  const NarxDictionary dict = build_dictionary(spec);

  const PcNarxFit fit = fit_pc_narx(ed.experiments, dict, ed.input, s);
  const json ledger = candidate_table(fit, x_name, y_name);

  std::vector<std::vector<double>> cand_cols(6);
  for (const auto& r : ledger) {
    cand_cols[0].push_back(r["index"].get<double>());
    cand_cols[1].push_back(r["terms"].get<double>());
    cand_cols[2].push_back(r["mean_error"].get<double>());
    cand_cols[3].push_back(r["unstable"].get<double>());
    cand_cols[4].push_back(r["qualifies"].get<bool>() ? 1.0 : 0.0);
    cand_cols[5].push_back(r["winner"].get<bool>() ? 1.0 : 0.0);
  }
  std::vector<Eigen::VectorXd> cc;
  for (const auto& c : cand_cols) cc.push_back(to_vector(c));
  write_csv(dir / "candidates.csv", {"candidate", "terms", "mean_error", "unstable", "qualifies", "winner"}, cc);

  json report;
  report["system"] = to_string(id);
  report["dictionary_size"] = dict.size();
  report["selected_experiments"] = fit.search.selected_experiments;
  report["used_fallback"] = fit.search.used_fallback;
  report["topped_up"] = fit.search.topped_up;
  report["candidates"] = ledger;
  report["winner"] = fit.selection.winner;
  report["qualified"] = fit.selection.model.qualified;

  std::cout << "fit: " << dict.size() << "-term dictionary, " << fit.search.selected_experiments.size()
            << " experiments searched, " << ledger.size() << " candidates\n";
  print_ledger(ledger);

  if (!fit.selection.model.qualified && !cfg.at("allow_unqualified").get<bool>()) {
    write_json(dir / "fit_report.json", report);
    std::cerr << "fit: no candidate reaches mean error < " << s.tolerance
              << " with stable free-runs; see candidates.csv (rerun with --allow-unqualified to keep the best)\n";
    return kExitAlgorithm;
  }

  const auto& model = fit.model;
  std::vector<double> idx, loo, deg, nb;
  json coef_rows = json::array();
  for (std::size_t i = 0; i < model.coefficient_pces().size(); ++i) {
    const auto& p = model.coefficient_pces()[i];
    idx.push_back(static_cast<double>(i));
    loo.push_back(p.loo());
    deg.push_back(p.degree());
    nb.push_back(static_cast<double>(p.indices().size()));
    coef_rows.push_back({{"term", model.structure().terms[i].name(x_name, y_name)},
                         {"loo", p.loo()},
                         {"degree", p.degree()},
                         {"basis_size", p.indices().size()}});
  }
  write_csv(dir / "coefficients.csv", {"term", "loo", "degree", "basis_size"},
            {to_vector(idx), to_vector(loo), to_vector(deg), to_vector(nb)});
  report["coefficients"] = coef_rows;
  if (!fit.degree_sweep.degrees.empty()) {
    std::vector<double> dg(fit.degree_sweep.degrees.begin(), fit.degree_sweep.degrees.end());
    std::vector<double> un(fit.degree_sweep.unstable.begin(), fit.degree_sweep.unstable.end());
    write_csv(dir / "degree_sweep.csv", {"degree", "cv_error", "unstable"},
              {to_vector(dg), to_vector(fit.degree_sweep.errors), to_vector(un)});
  }

  json prov = model.provenance();
  prov["system"] = to_string(id);
  prov["duration"] = ed.settings.duration;
  prov["samples"] = ed.experiments.front().size();
  prov["ed"] = cfg.at("ed");
  json out = to_json(PcNarxModel(model.structure(), model.coefficient_pces(), model.divergence_bound(), model.dt(), prov));
  out["kind"] = "pcnarx";
  write_json(dir / "model.json", out);
  write_json(dir / "fit_report.json", report);

  std::cout << "winner: " << model.structure().describe(x_name, y_name) << " (mean error "
            << fmt(fit.selection.model.mean_error) << ")\n";
  if (!fit.degree_sweep.degrees.empty()) std::cout << "common PCE degree " << fit.degree_sweep.degree << " by cross-validation\n";
  for (const auto& r : coef_rows)
    std::cout << "  " << r["term"].get<std::string>() << ": LOO " << fmt(r["loo"].get<double>()) << ", degree "
              << r["degree"].get<int>() << "\n";
  return 0;
}

int fit_time_frozen(const json& cfg, const LoadedCampaign& ed, const fs::path& dir) {
  const auto& exps = ed.experiments;
  const auto T = exps.front().size();
  const double dt = exps.front().dt;
  Eigen::MatrixXd xi(static_cast<Eigen::Index>(exps.size()), static_cast<Eigen::Index>(ed.input.dim()));
  Eigen::MatrixXd traj(xi.rows(), static_cast<Eigen::Index>(T));
  for (std::size_t k = 0; k < exps.size(); ++k) {
    if (exps[k].size() != T) throw ConfigError("experiments differ in length");
    xi.row(static_cast<Eigen::Index>(k)) = exps[k].xi.transpose();
    traj.row(static_cast<Eigen::Index>(k)) = exps[k].y.transpose();
  }

  std::vector<std::size_t> instants;
  for (double t : get<std::vector<double>>(cfg, "times")) {
    const auto k = static_cast<long long>(std::llround(t / dt));
    if (k < 0 || k >= static_cast<long long>(T)) throw ConfigError("time " + fmt(t) + " outside the record");
    instants.push_back(static_cast<std::size_t>(k));
  }
  if (instants.empty()) {
    const auto stride = get<std::size_t>(cfg, "stride");
    if (stride == 0) throw ConfigError("stride must be positive");
    for (std::size_t k = 0; k < T; k += stride) instants.push_back(k);
  }

  const TimeFrozenPce tf =
      fit_time_frozen(ed.input, xi, traj, dt, pce_settings(cfg.at("pce")), instants, get<unsigned>(cfg, "workers"));
  std::vector<double> t, loo, deg, nb;
  for (std::size_t i = 0; i < tf.instants.size(); ++i) {
    t.push_back(dt * static_cast<double>(tf.instants[i]));
    loo.push_back(tf.models[i].loo());
    deg.push_back(tf.models[i].degree());
    nb.push_back(static_cast<double>(tf.models[i].indices().size()));
  }
  write_csv(dir / "loo.csv", {"t", "loo", "degree", "basis_size"},
            {to_vector(t), to_vector(loo), to_vector(deg), to_vector(nb)});
  json out = to_json(tf);
  out["kind"] = "time_frozen";
  out["provenance"] = {{"system", to_string(ed.settings.system)},
                       {"duration", ed.settings.duration},
                       {"samples", T},
                       {"ed", cfg.at("ed")}};
  write_json(dir / "model.json", out);
  std::cout << "fit: time-frozen PCE at " << tf.instants.size() << " instants from " << exps.size()
            << " experiments; LOO table in loo.csv\n";
  return 0;
}

int cmd_fit(const Overrides& ov) {
  json cfg = fit_defaults();
  cfg.merge_patch(ov.resolve({}));
  const LoadedCampaign ed = read_campaign(get<std::string>(cfg, "ed"));
  const SystemId id = ed.settings.system;
  if (cfg["threshold"].is_null()) cfg["threshold"] = system_defaults(id).threshold;
  const json dict = inline_or_file(cfg["dictionary"]);
  cfg["dictionary"] = dict.is_null() ? to_json(default_dictionary(id)) : dict;

  const auto dir = output_dir(cfg);
  echo_config(dir, cfg);
  const auto mode = get<std::string>(cfg, "mode");
  if (mode == "pcnarx") return fit_pcnarx(cfg, ed, dir);
  if (mode == "time-frozen" || mode == "time_frozen") return fit_time_frozen(cfg, ed, dir);
  throw ConfigError("mode must be pcnarx or time-frozen");
}

// ---------------------------------------------------------------- shared model loading

struct LoadedModel {
  std::string kind;
  json provenance;
  std::unique_ptr<PcNarxModel> narx;
  std::unique_ptr<TimeFrozenPce> frozen;

  double dt() const { return narx ? narx->dt() : frozen->dt; }
  const InputModel& input() const {
    return narx ? narx->input_model() : frozen->models.front().input_model();
  }
};

LoadedModel load_model(const std::string& path) {
  const json j = read_json(path);
  LoadedModel m;
  m.kind = j.value("kind", std::string("pcnarx"));
  m.provenance = j.value("provenance", json::object());
  try {
    if (m.kind == "pcnarx") m.narx = std::make_unique<PcNarxModel>(pc_narx_from_json(j));
    else if (m.kind == "time_frozen") m.frozen = std::make_unique<TimeFrozenPce>(time_frozen_from_json(j));
    else throw ConfigError(path + ": unknown model kind '" + m.kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (m.frozen && m.frozen->models.empty()) throw ConfigError(path + ": time-frozen model has no instants");
  return m;
}

SystemId model_system(const LoadedModel& m, const json& cfg) {
  if (cfg.contains("system") && !cfg["system"].is_null()) return system_from_string(cfg["system"].get<std::string>());
  if (m.provenance.contains("system")) return system_from_string(m.provenance["system"].get<std::string>());
  throw ConfigError("model does not record its system; pass --system");
}

std::size_t model_samples(const LoadedModel& m, const json& cfg) {
  if (cfg.contains("duration") && !cfg["duration"].is_null())
    return grid_size(m.dt(), cfg["duration"].get<double>());
  if (m.provenance.contains("samples")) return m.provenance["samples"].get<std::size_t>();
  throw ConfigError("model does not record its record length; pass --duration");
}

void check_grid(const LoadedModel& m, const std::vector<Experiment>& exps) {
  for (const auto& e : exps) {
    if (std::abs(e.dt - m.dt()) > 1e-12 * m.dt())
      throw ConfigError("time step of the data (" + fmt(e.dt) + ") differs from the model's (" + fmt(m.dt()) + ")");
    if (e.size() != exps.front().size()) throw ConfigError("validation records differ in length");
  }
  if (m.frozen && m.frozen->instants.back() >= exps.front().size())
    throw ConfigError("validation records are shorter than the model's time span");
}

// ---------------------------------------------------------------- predict

int cmd_predict(const Overrides& ov) {
  json cfg = {{"model", nullptr}, {"out", nullptr},  {"data", nullptr},  {"xi", nullptr},
              {"excitation", nullptr}, {"seed", 1}, {"system", nullptr}, {"duration", nullptr},
              {"workers", 1}};
  cfg.merge_patch(ov.resolve({}));
  const LoadedModel m = load_model(get<std::string>(cfg, "model"));
  const auto dir = output_dir(cfg);
  echo_config(dir, cfg);
  const double dt = m.dt();

  if (!cfg["data"].is_null()) {
    const LoadedCampaign data = read_campaign(get<std::string>(cfg, "data"));
    check_grid(m, data.experiments);
    const auto& exps = data.experiments;
    std::vector<Eigen::VectorXd> cols;
    std::vector<std::string> header{"t"};
    if (m.narx) {
      const ValidationReport r = validate(*m.narx, exps, get<unsigned>(cfg, "workers"), true);
      cols.push_back(time_axis(exps.front().size(), dt));
      for (std::size_t i = 0; i < exps.size(); ++i) {
        header.push_back("run_" + std::to_string(i));
        // unstable runs come back empty
        const auto& y = r.predictions[i];
        cols.push_back(y.size() ? y : Eigen::VectorXd::Constant(cols.front().size(), std::nan("")));
      }
    } else {
      Eigen::VectorXd t(static_cast<Eigen::Index>(m.frozen->instants.size()));
      for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = dt * static_cast<double>(m.frozen->instants[i]);
      cols.push_back(t);
      for (std::size_t i = 0; i < exps.size(); ++i) {
        header.push_back("run_" + std::to_string(i));
        cols.push_back(m.frozen->predict(exps[i].xi));
      }
    }
    write_csv(dir / "predictions.csv", header, cols);
    std::cout << "predict: " << exps.size() << " trajectories -> " << (dir / "predictions.csv").string() << "\n";
    return 0;
  }

  const Eigen::VectorXd xi = to_vector(get<std::vector<double>>(cfg, "xi"));
  if (static_cast<std::size_t>(xi.size()) != m.input().dim())
    throw ConfigError("xi has " + std::to_string(xi.size()) + " entries, the model expects " +
                      std::to_string(m.input().dim()));
  m.input().check_support(xi);

  if (m.frozen) {
    Eigen::VectorXd t(static_cast<Eigen::Index>(m.frozen->instants.size()));
    for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = dt * static_cast<double>(m.frozen->instants[i]);
    write_csv(dir / "prediction.csv", {"t", "y"}, {t, m.frozen->predict(xi)});
    std::cout << "predict: " << t.size() << " instants -> " << (dir / "prediction.csv").string() << "\n";
    return 0;
  }

  Eigen::VectorXd x;
  if (!cfg["excitation"].is_null()) {
    std::vector<std::string> header;
    const auto cols = read_csv(get<std::string>(cfg, "excitation"), &header);
    const auto it = std::find(header.begin(), header.end(), "x");
    if (it != header.end()) x = cols[static_cast<std::size_t>(it - header.begin())];
    else if (cols.size() >= 2) x = cols[1];
    else x = cols[0];
  } else {
    const SystemId id = model_system(m, cfg);
    auto rng = run_stream(get<std::uint64_t>(cfg, "seed") + 1, 0);
    x = make_excitation(id, xi, dt, model_samples(m, cfg), rng);
  }
  try {
    const Eigen::VectorXd y = m.narx->predict(xi, x);
    write_csv(dir / "prediction.csv", {"t", "x", "y"}, {time_axis(x.size(), dt), x, y});
  } catch (const InstabilityError& e) {
    std::cerr << "predict: free-run diverged at step " << e.instant() << "\n";
    return kExitAlgorithm;
  }
  std::cout << "predict: " << x.size() << " samples -> " << (dir / "prediction.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- validate

void write_density(const fs::path& path, const Eigen::VectorXd& samples, std::size_t points) {
  if (samples.size() < 2) return;
  const KernelDensity kd = gaussian_kde(samples, points);
  write_csv(path, {"x", "density"}, {kd.grid, kd.density});
}

json report_summary(const ValidationReport& r) {
  return {{"runs", r.errors.size()},
          {"mean_error", r.mean_error},
          {"unstable", r.unstable},
          {"above_0.1", r.above_threshold},
          {"fraction_above_0.1", r.fraction_above},
          {"max_response_error", r.max_error},
          {"mean_trajectory_error", r.mean_traj_error},
          {"std_trajectory_error", r.std_traj_error}};
}

void write_report_files(const fs::path& dir, const std::string& prefix, const ValidationReport& r, double dt,
                        std::size_t density_points) {
  Eigen::VectorXd run(r.errors.size());
  for (Eigen::Index i = 0; i < run.size(); ++i) run[i] = static_cast<double>(i);
  write_csv(dir / (prefix + "errors.csv"), {"run", "error", "max_actual", "max_predicted"},
            {run, r.errors, r.max_actual, r.max_predicted});
  if (r.mean_actual.size() > 0)
    write_csv(dir / (prefix + "statistics.csv"), {"t", "mean_actual", "mean_predicted", "std_actual", "std_predicted"},
              {time_axis(r.mean_actual.size(), dt), r.mean_actual, r.mean_predicted, r.std_actual, r.std_predicted});
  std::vector<double> actual, predicted;
  for (Eigen::Index i = 0; i < r.errors.size(); ++i)
    if (std::isfinite(r.errors[i])) {
      actual.push_back(r.max_actual[i]);
      predicted.push_back(r.max_predicted[i]);
    }
  write_density(dir / (prefix + "density_actual.csv"), to_vector(actual), density_points);
  write_density(dir / (prefix + "density_predicted.csv"), to_vector(predicted), density_points);
}

int validate_time_frozen(const LoadedModel& m, const std::vector<Experiment>& exps, const fs::path& dir) {
  const auto& tf = *m.frozen;
  const auto n = static_cast<Eigen::Index>(exps.size());
  Eigen::MatrixXd pred(n, static_cast<Eigen::Index>(tf.instants.size()));
  for (Eigen::Index k = 0; k < n; ++k) pred.row(k) = tf.predict(exps[static_cast<std::size_t>(k)].xi).transpose();
  Eigen::VectorXd t(pred.cols()), err(pred.cols());
  for (Eigen::Index i = 0; i < pred.cols(); ++i) {
    const auto inst = tf.instants[static_cast<std::size_t>(i)];
    Eigen::VectorXd actual(n);
    for (Eigen::Index k = 0; k < n; ++k) actual[k] = exps[static_cast<std::size_t>(k)].y[static_cast<Eigen::Index>(inst)];
    t[i] = tf.dt * static_cast<double>(inst);
    try {
      err[i] = scalar_relative_error(actual, pred.col(i));
    } catch (const DomainError&) {
      err[i] = std::numeric_limits<double>::quiet_NaN();  // all runs identical at this instant
    }
  }
  write_csv(dir / "instants.csv", {"t", "error"}, {t, err});
  json summary = {{"kind", "time_frozen"}, {"runs", n}, {"instants", t.size()}, {"mean_instant_error", err.mean()}};
  write_json(dir / "summary.json", summary);
  std::cout << "validate: time-frozen PCE on " << n << " runs";
  for (Eigen::Index i = 0; i < t.size() && i < 8; ++i) std::cout << (i ? ", " : ": ") << "eps(t=" << fmt(t[i]) << ")=" << fmt(err[i]);
  std::cout << (t.size() > 8 ? ", ... (instants.csv)\n" : "\n");
  return 0;
}

int cmd_validate(const Overrides& ov) {
  json cfg = {{"model", nullptr}, {"data", nullptr}, {"out", nullptr}, {"density_points", 256}, {"workers", 1}};
  cfg.merge_patch(ov.resolve({}));
  const LoadedModel m = load_model(get<std::string>(cfg, "model"));
  const LoadedCampaign data = read_campaign(get<std::string>(cfg, "data"));
  check_grid(m, data.experiments);
  if (data.experiments.front().xi.size() != static_cast<Eigen::Index>(m.input().dim()))
    throw ConfigError("validation parameters do not match the model's input dimension");
  const auto dir = output_dir(cfg);
  echo_config(dir, cfg);
  if (m.frozen) return validate_time_frozen(m, data.experiments, dir);

  const auto points = get<std::size_t>(cfg, "density_points");
  const ValidationReport r = validate(*m.narx, data.experiments, get<unsigned>(cfg, "workers"), true);
  write_report_files(dir, "", r, m.dt(), points);
  json summary = report_summary(r);

  // Velocity models carry the recorded displacement; integrate the prediction for it.
  const bool has_aux = std::all_of(data.experiments.begin(), data.experiments.end(),
                                   [](const Experiment& e) { return e.aux.size() == e.y.size(); });
  if (has_aux) {
    std::vector<Experiment> disp;
    std::vector<Eigen::VectorXd> pred;
    for (std::size_t i = 0; i < data.experiments.size(); ++i) {
      Experiment e = data.experiments[i];
      e.y = e.aux;
      disp.push_back(std::move(e));
      pred.push_back(r.predictions[i].allFinite() ? integrate_trapezoid(r.predictions[i], m.dt())
                                                  : r.predictions[i]);
    }
    const ValidationReport rd = compare_predictions(disp, pred);
    write_report_files(dir, "aux_", rd, m.dt(), points);
    summary["aux"] = report_summary(rd);
  }
  write_json(dir / "summary.json", summary);

  std::cout << "validate: " << r.errors.size() << " runs, mean error " << fmt(r.mean_error) << ", "
            << r.above_threshold << " runs with error > 0.1 (" << fmt(100.0 * r.fraction_above) << "%), "
            << r.unstable << " diverged; max-response error " << fmt(r.max_error) << ", std-trajectory error "
            << fmt(r.std_traj_error) << "\n";
  if (has_aux)
    std::cout << "  integrated displacement: max error " << fmt(summary["aux"]["max_response_error"].get<double>())
              << ", std-trajectory error " << fmt(summary["aux"]["std_trajectory_error"].get<double>()) << "\n";
  return 0;
}

// ---------------------------------------------------------------- stats

int cmd_stats(const Overrides& ov) {
  json cfg = {{"model", nullptr}, {"out", nullptr},      {"n", 10000},       {"seed", 1},
              {"system", nullptr}, {"duration", nullptr}, {"density_points", 256}, {"workers", 1}};
  cfg.merge_patch(ov.resolve({}));
  const LoadedModel m = load_model(get<std::string>(cfg, "model"));
  if (!m.narx) throw ConfigError("stats needs a PC-NARX model");
  const SystemId id = model_system(m, cfg);
  const std::size_t T = model_samples(m, cfg);
  const auto n = get<long long>(cfg, "n");
  if (n <= 0) throw ConfigError("n must be positive");
  if (m.narx->input_model().dim() != default_input_model(id).dim())
    throw ConfigError("model input dimension does not match system " + to_string(id));
  const auto dir = output_dir(cfg);
  echo_config(dir, cfg);

  const double dt = m.dt();
  const ExcitationGenerator gen = [&](const Eigen::VectorXd& xi, std::mt19937_64& rng) {
    return make_excitation(id, xi, dt, T, rng);
  };
  const McsStatistics st = mcs_statistics(*m.narx, m.narx->input_model(), gen, static_cast<std::size_t>(n),
                                          get<std::uint64_t>(cfg, "seed"), get<unsigned>(cfg, "workers"),
                                          get<std::size_t>(cfg, "density_points"));
  write_csv(dir / "statistics.csv", {"t", "mean", "std"}, {time_axis(st.mean.size(), dt), st.mean, st.std});
  write_csv(dir / "density.csv", {"x", "density"}, {st.density_grid, st.density});
  Eigen::VectorXd run(st.max_response.size());
  for (Eigen::Index i = 0; i < run.size(); ++i) run[i] = static_cast<double>(i);
  write_csv(dir / "max_response.csv", {"sample", "max_abs"}, {run, st.max_response});
  write_json(dir / "summary.json",
             {{"n", n}, {"unstable", st.unstable}, {"warning", st.warning}, {"bandwidth", st.bandwidth}});
  std::cout << "stats: " << n << " surrogate runs, " << st.unstable << " diverged"
            << (st.warning ? " (more than 1%, statistics may be biased)" : "") << "; KDE bandwidth "
            << fmt(st.bandwidth) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PC-NARX surrogate modelling of stochastic dynamical systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pcnarx 1.0");

  Overrides sim, fit, pred, val, sta;
  auto config_flag = [](CLI::App* sub, Overrides& ov) {
    sub->add_option("--config", ov.config_file, "JSON config; flags given on the command line override it");
  };

  CLI::App* s = app.add_subcommand("simulate", "Run a simulation campaign (experimental design or validation set)");
  config_flag(s, sim);
  sim.add<std::string>(s, "--system", "/system", "quarter_car | duffing | boucwen");
  sim.add<long long>(s, "--n", "/n", "number of runs");
  sim.add<std::uint64_t>(s, "--seed", "/seed", "campaign seed");
  sim.add<double>(s, "--dt", "/dt", "time step [s]");
  sim.add<double>(s, "--duration", "/duration", "record length [s]");
  sim.add<std::string>(s, "--sampling", "/sampling", "lhs | mc");
  sim.add<double>(s, "--rtol", "/rtol", "RK45 relative tolerance");
  sim.add<double>(s, "--atol", "/atol", "RK45 absolute tolerance");
  sim.add<double>(s, "--h-max", "/h_max", "largest solver step (0: duration/10)");
  sim.add<std::string>(s, "--input-model", "/input_model", "JSON file with the input model");
  sim.add<unsigned>(s, "--workers", "/workers", "worker threads");
  sim.add<std::string>(s, "--out", "/out", "output directory");

  CLI::App* f = app.add_subcommand("fit", "Fit a PC-NARX or time-frozen PCE surrogate on a campaign");
  config_flag(f, fit);
  fit.add<std::string>(f, "--ed", "/ed", "campaign directory");
  fit.add<std::string>(f, "--out", "/out", "output directory");
  fit.add<std::string>(f, "--mode", "/mode", "pcnarx | time-frozen");
  fit.add<double>(f, "--threshold", "/threshold", "max |y| threshold for strongly nonlinear experiments");
  fit.add<double>(f, "--tolerance", "/tolerance", "qualification bar on the mean free-run error");
  fit.add<std::size_t>(f, "--min-selected", "/min_selected", "minimum number of searched experiments");
  fit.add<std::size_t>(f, "--fallback-top-k", "/fallback_top_k", "experiments used when none passes the threshold");
  fit.add<double>(f, "--knee-ratio", "/knee_ratio", "LOO drop marking a knee candidate (0 disables)");
  fit.add<std::string>(f, "--dictionary", "/dictionary", "JSON file with the NARX dictionary spec");
  fit.add<int>(f, "--p-min", "/pce/p_min", "lowest PCE degree");
  fit.add<int>(f, "--p-max", "/pce/p_max", "highest PCE degree");
  fit.add<double>(f, "--q", "/pce/q", "hyperbolic truncation exponent");
  fit.add<int>(f, "--r", "/pce/r", "maximum interaction rank");
  fit.add<std::string>(f, "--degree-selection", "/degree_selection", "cross_validation | loo");
  fit.add<std::size_t>(f, "--cv-folds", "/cv_folds", "folds for the degree cross-validation");
  fit.add<std::vector<double>>(f, "--times", "/times", "time-frozen mode: instants [s] to model")->delimiter(',');
  fit.add<std::size_t>(f, "--stride", "/stride", "time-frozen mode: model every k-th instant when --times is empty");
  fit.add<bool>(f, "--allow-unqualified", "/allow_unqualified", "keep the best model even if none qualifies");
  fit.add<unsigned>(f, "--workers", "/workers", "worker threads");

  CLI::App* p = app.add_subcommand("predict", "Predict trajectories with a fitted surrogate");
  config_flag(p, pred);
  pred.add<std::string>(p, "--model", "/model", "model.json");
  pred.add<std::string>(p, "--out", "/out", "output directory");
  pred.add<std::string>(p, "--data", "/data", "campaign directory: predict every run from its own xi and excitation");
  pred.add<std::vector<double>>(p, "--xi", "/xi", "single sample of the input parameters")->delimiter(',');
  pred.add<std::string>(p, "--excitation", "/excitation", "CSV with the excitation (column x, else the second column)");
  pred.add<std::uint64_t>(p, "--seed", "/seed", "seed for a synthesized excitation when --excitation is absent");
  pred.add<std::string>(p, "--system", "/system", "system (defaults to the model's)");
  pred.add<double>(p, "--duration", "/duration", "record length [s] (defaults to the model's)");
  pred.add<unsigned>(p, "--workers", "/workers", "worker threads");

  CLI::App* v = app.add_subcommand("validate", "Compare surrogate predictions with a simulated validation campaign");
  config_flag(v, val);
  val.add<std::string>(v, "--model", "/model", "model.json");
  val.add<std::string>(v, "--data", "/data", "validation campaign directory");
  val.add<std::string>(v, "--out", "/out", "output directory");
  val.add<std::size_t>(v, "--density-points", "/density_points", "grid points of the max-response densities");
  val.add<unsigned>(v, "--workers", "/workers", "worker threads");

  CLI::App* st = app.add_subcommand("stats", "Monte Carlo statistics on the surrogate");
  config_flag(st, sta);
  sta.add<std::string>(st, "--model", "/model", "model.json");
  sta.add<std::string>(st, "--out", "/out", "output directory");
  sta.add<long long>(st, "--n", "/n", "number of surrogate runs");
  sta.add<std::uint64_t>(st, "--seed", "/seed", "seed");
  sta.add<std::string>(st, "--system", "/system", "system (defaults to the model's)");
  sta.add<double>(st, "--duration", "/duration", "record length [s] (defaults to the model's)");
  sta.add<std::size_t>(st, "--density-points", "/density_points", "grid points of the max-response density");
  sta.add<unsigned>(st, "--workers", "/workers", "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*f) return cmd_fit(fit);
    if (*p) return cmd_predict(pred);
    if (*v) return cmd_validate(val);
    if (*st) return cmd_stats(sta);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "error: bad JSON: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return kExitAlgorithm;
  }
  return kExitUsage;
}
