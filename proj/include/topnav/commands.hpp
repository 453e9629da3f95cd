#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "topnav/config.hpp"
#include "topnav/navigate.hpp"
#include "topnav/sweep.hpp"

namespace topnav {

/// Each command writes its artifacts under `out_dir` together with the
/// effective config as config.json. Progress and summaries go to `log`.

struct SimulateOutcome {
    PipelineState state;
    FeatureSummary features;
};

/// One forward pass: trajectory.csv, diagram.csv, diagram.json, features.json
/// and the trajectory and diagram plots. Throws DivergenceError.
SimulateOutcome cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// sweep.json plus sweep_<feature>.csv and sweep_<feature>.svg per feature.
SweepResult cmd_sweep(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Runs the configured scheme and writes path.csv, path.json and plots;
/// derivative-free schemes also write regions.csv. With a cached sweep the
/// derivative-free schemes interpolate it instead of simulating, and the path
/// is drawn over its heatmap.
PathRecord cmd_navigate(const RunConfig& cfg, const std::filesystem::path& out_dir,
                        const std::optional<std::filesystem::path>& cached_sweep, std::ostream& log);

struct GradCheckReport {
    Vec mu;
    Vec adjoint;
    Vec finite_difference;
    /// |adjoint_i - fd_i| / |fd|, zero where both vectors vanish.
    Vec component_error;
    double relative_error = 0.0;  // |adjoint - fd| / |fd|
    double loss = 0.0;
    std::uint32_t flags = 0;
    bool pass = false;
};

/// Adjoint-chain gradient against central differences of the loss, over the
/// free parameters. Writes check_grad.json.
GradCheckReport cmd_check_grad(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Re-renders the plots of an output directory from its sweep.json and path.json.
/// Returns the number of plots written.
std::size_t cmd_plot(const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace topnav
