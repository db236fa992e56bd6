#include "pcnarx/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pcnarx/errors.hpp"

namespace pcnarx {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header, const std::vector<Eigen::VectorXd>& cols) {
  if (header.size() != cols.size()) throw ArgumentError("write_csv: header and column counts differ");
  const Eigen::Index n = cols.empty() ? 0 : cols.front().size();
  for (const auto& c : cols)
    if (c.size() != n) throw ArgumentError("write_csv: columns differ in length");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << format_double(cols[j][i]);
    out << '\n';
  }
}

std::vector<Eigen::VectorXd> read_csv(const fs::path& path, std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ArgumentError(path.string() + ": empty CSV");
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) names.push_back(cell);
  }
  std::vector<std::vector<double>> data(names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t j = 0;
    while (std::getline(ss, cell, ',')) {
      if (j >= names.size()) throw ArgumentError(path.string() + ": too many fields on line " + std::to_string(row));
      // strtod keeps subnormals (stod throws on them) and accepts inf/nan
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size())
        throw ArgumentError(path.string() + ": bad number '" + cell + "' on line " + std::to_string(row));
      data[j].push_back(v);
      ++j;
    }
    if (j != names.size()) throw ArgumentError(path.string() + ": too few fields on line " + std::to_string(row));
  }
  std::vector<Eigen::VectorXd> cols;
  for (auto& d : data) cols.emplace_back(Eigen::Map<Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size())));
  if (header) *header = names;
  return cols;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(path.string() + ": " + e.what());
  }
}

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string run_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%05zu", i);
  return buf;
}

}  // namespace

void write_experiment(const fs::path& dir, const std::string& stem, const Experiment& e,
                      const std::vector<std::string>& names) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(e.size()));
  for (Eigen::Index k = 0; k < t.size(); ++k) t[k] = e.dt * static_cast<double>(k);
  std::vector<std::string> header{"t", names.at(0), names.at(1)};
  std::vector<Eigen::VectorXd> cols{t, e.x, e.y};
  if (e.aux.size() == e.y.size() && e.aux.size() > 0) {
    header.push_back(names.size() > 2 ? names[2] : "aux");
    cols.push_back(e.aux);
  }
  write_csv(dir / (stem + ".csv"), header, cols);
  write_json(dir / (stem + ".json"), {{"xi", to_vec(e.xi)}, {"dt", e.dt}, {"channels", header}});
}

Experiment read_experiment(const fs::path& dir, const std::string& stem) {
  const auto meta = read_json(dir / (stem + ".json"));
  const auto cols = read_csv(dir / (stem + ".csv"));
  if (cols.size() < 3) throw ArgumentError(stem + ".csv needs columns t, x, y");
  Experiment e;
  e.xi = from_vec(meta.at("xi").get<std::vector<double>>());
  e.dt = meta.at("dt").get<double>();
  e.x = cols[1];
  e.y = cols[2];
  if (cols.size() > 3) e.aux = cols[3];
  e.validate();
  return e;
}

nlohmann::json write_campaign(const fs::path& dir, const Campaign& c) {
  fs::create_directories(dir);
  const auto d = system_defaults(c.settings.system);
  const std::vector<std::string> names{d.input, d.target, c.settings.system == SystemId::boucwen ? "y" : "aux"};
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < c.experiments.size(); ++i) {
    nlohmann::json r{{"index", i}, {"ok", c.status[i].ok}, {"xi", to_vec(c.experiments[i].xi)}};
    if (c.status[i].ok) {
      write_experiment(dir, run_stem(i), c.experiments[i], names);
      r["file"] = run_stem(i);
    } else {
      r["error"] = c.status[i].message;
    }
    runs.push_back(r);
  }
  nlohmann::json m;
  m["settings"] = to_json(c.settings);
  m["input_model"] = to_json(c.input);
  m["runs"] = runs;
  m["failures"] = c.failures();
  m["seed_rule"] = "design: " + c.settings.sampling + "; excitation of run i from stream (seed + 1, i)";
  write_json(dir / "manifest.json", m);
  return m;
}

LoadedCampaign read_campaign(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) throw ArgumentError("no manifest.json in " + dir.string());
  LoadedCampaign lc;
  lc.manifest = read_json(dir / "manifest.json");
  lc.settings = campaign_settings_from_json(lc.manifest.at("settings"));
  lc.input = input_model_from_json(lc.manifest.at("input_model"));
  for (const auto& r : lc.manifest.at("runs"))
    if (r.value("ok", false)) lc.experiments.push_back(read_experiment(dir, r.at("file").get<std::string>()));
  if (lc.experiments.empty()) throw ArgumentError("campaign " + dir.string() + " holds no successful runs");
  return lc;
}

}  // namespace pcnarx
