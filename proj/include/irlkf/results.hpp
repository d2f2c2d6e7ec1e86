#pragma once

#include "irlkf/config.hpp"
#include "irlkf/sweeps.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace irlkf {

/// printf %.17g: round-trips every double.
std::string format_real(double x);

/// Columns: repetition, iteration, env_id, theta_hat_0..k-1,
/// p_flat_0..k^2-1 (row-major), estimate_error, regret, gain_diag_mean.
std::string records_csv(const ExperimentResult& result, Eigen::Index k);

/// Columns: cell_x, cell_y, predicted_frobenius.
std::string sweep_csv(const std::vector<SweepCell>& cells);

/// One row per waypoint: attitude, gamma_index, waypoint, x, y, plus the
/// plan's features.
std::string risk_csv(const std::vector<RiskSweepRow>& rows);

std::string catalog_csv(const EnvironmentCatalog& catalog);

/// Config, seeds, catalog hash, software version, PP schedule and every
/// failure of a run.
json experiment_manifest(const AppConfig& cfg, const std::map<Arm, ExperimentResult>& results,
                         const EnvironmentCatalog& catalog);

void write_file(const std::filesystem::path& path, const std::string& content);

/// Runs the configured arms and writes <ARM>.csv per arm plus
/// manifest.json into `out`, creating it if needed.
std::map<Arm, ExperimentResult> run_to_directory(const AppConfig& cfg, const EnvironmentCatalog& catalog,
                                                 const std::filesystem::path& out, unsigned jobs);

}  // namespace irlkf
