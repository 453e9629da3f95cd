#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "topnav/navigate.hpp"
#include "topnav/simulate.hpp"
#include "topnav/sweep.hpp"
#include "topnav/tda.hpp"

namespace topnav {

/// Version stamped into every JSON document written here.
constexpr int kSchemaVersion = 1;

/// Shortest text that reads back to the same double; "nan", "inf", "-inf".
std::string format_number(double v);

/// Writes the whole file, creating parent directories. Throws Error on failure.
void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Columns t, then one per state component.
std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& state_names);

/// Columns dim, birth, death, birth_i, birth_j, death_k, death_l. Missing edges
/// are empty fields; the essential class has death "inf".
std::string diagram_csv(const PersistenceDiagram& diag);
std::string diagram_json(const PersistenceDiagram& diag);

/// Columns epoch, parameters, loss, one per loss term, the logged features,
/// grad_norm, step_grad_norm, learning_rate, flags.
std::string path_csv(const PathRecord& path);
/// Sampled regions of a derivative-free path: step, lower and upper per
/// parameter, area, confidence.
std::string regions_csv(const PathRecord& path);
std::string path_json(const PathRecord& path);
/// Inverse of path_json.
PathRecord parse_path_json(std::string_view text);

/// Columns x, y, value, diverged in grid order (x fastest).
std::string sweep_feature_csv(const SweepResult& sweep, const std::string& feature);
std::string sweep_json(const SweepResult& sweep);
/// Inverse of sweep_json. Throws InputError on malformed documents.
SweepResult parse_sweep_json(std::string_view text);

}  // namespace topnav
