#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pcnarx/benchmarks.hpp"
#include "pcnarx/narx.hpp"

namespace pcnarx {

/// Shortest-exact float text (17 significant digits).
std::string format_double(double v);

/// Write a CSV with a header row; every column must have the same length.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<Eigen::VectorXd>& columns);
/// Read a numeric CSV with a header row into columns.
std::vector<Eigen::VectorXd> read_csv(const std::filesystem::path& path, std::vector<std::string>* header = nullptr);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Experiment as <stem>.csv (t, x, y[, aux]) plus <stem>.json with xi and dt.
void write_experiment(const std::filesystem::path& dir, const std::string& stem, const Experiment& e,
                      const std::vector<std::string>& channel_names = {"x", "y", "aux"});
Experiment read_experiment(const std::filesystem::path& dir, const std::string& stem);

/// Campaign directory: run_XXXXX files for successful runs and
/// manifest.json with settings, input model, samples and per-run status.
nlohmann::json write_campaign(const std::filesystem::path& dir, const Campaign& c);

struct LoadedCampaign {
  nlohmann::json manifest;
  CampaignSettings settings;
  InputModel input;
  std::vector<Experiment> experiments;  // successful runs, in run order
};
LoadedCampaign read_campaign(const std::filesystem::path& dir);

}  // namespace pcnarx
