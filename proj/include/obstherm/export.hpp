// export.hpp: config file parsing and the on-disk formats consumed by the
// figure scripts: per-trajectory CSV, validation JSON and the run manifest.

#pragma once

#include "obstherm/experiment.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace obstherm {

// Columns: time,p0,p1,R0,R1,S_A with 17 significant digits.
inline constexpr const char* kTrajectoryCsvHeader = "time,p0,p1,R0,R1,S_A";

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
// Throws IoError when unreadable and ConfigError on malformed content.
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json record_to_json(const ValidationRecord& record);
nlohmann::json records_to_json(const std::vector<ValidationRecord>& records);

void write_trajectory_csv(const TrajectorySeries& traj, const std::filesystem::path& path);

struct TrajectoryTable {
  std::vector<double> time, p0, p1, r0, r1, entropy;
};
TrajectoryTable read_trajectory_csv(const std::filesystem::path& path);

// File stem for a trajectory: "traj_t<position>_<observable>", 1-based position in the theta grid.
std::string trajectory_file_name(std::size_t theta_position, const std::string& observable);

struct ExportSummary {
  std::vector<std::filesystem::path> files;
};

// Writes the trajectory CSVs, validation.json (when records are present) and
// manifest.json. `records` and `trajectories` are parallel; trajectories may
// be empty. Throws IoError.
ExportSummary export_results(std::vector<ValidationRecord>& records, const std::vector<TrajectorySeries>& trajectories,
                             const ExperimentConfig& config, const std::filesystem::path& output_dir,
                             double wall_seconds);

std::string version_string();

}  // namespace obstherm
