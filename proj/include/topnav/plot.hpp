#pragma once

#include <string>
#include <vector>

#include "topnav/navigate.hpp"
#include "topnav/simulate.hpp"
#include "topnav/sweep.hpp"
#include "topnav/tda.hpp"

namespace topnav {

/// Free-form key/value lines written as a comment at the top of an SVG.
using Provenance = std::vector<std::pair<std::string, std::string>>;

/// Phase portrait of the first two state components. With `standardize` each
/// component is shifted and scaled by its mean and standard deviation first.
/// Samples from `tail_start` on are drawn darker.
std::string trajectory_svg(const Trajectory& traj, const std::vector<std::string>& state_names, bool standardize,
                           std::size_t tail_start, const Provenance& provenance = {});

/// Birth/death scatter of the finite pairs, H0 and H1 in different colours.
std::string diagram_svg(const PersistenceDiagram& diag, const Provenance& provenance = {});

/// Heatmap of one sweep feature, colour scaled linearly between the smallest
/// and largest finite value; NaN cells are grey. An optional path is drawn on top.
std::string heatmap_svg(const SweepResult& sweep, const std::string& feature, const PathRecord* path = nullptr,
                        const Provenance& provenance = {});

/// Loss against epoch.
std::string loss_svg(const PathRecord& path, const Provenance& provenance = {});

}  // namespace topnav
