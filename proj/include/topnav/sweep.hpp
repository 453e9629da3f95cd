#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "topnav/common.hpp"
#include "topnav/loss.hpp"
#include "topnav/simulate.hpp"
#include "topnav/systems.hpp"

namespace topnav {

/// One swept parameter: `count` evenly spaced values from min to max inclusive.
struct GridAxis {
    std::string param;
    double min = 0.0;
    double max = 1.0;
    std::size_t count = 2;

    Vec values() const;
    /// count >= 1; min < max unless count == 1, where min == max is also allowed.
    void validate() const;
    bool operator==(const GridAxis&) const = default;
};

/// Feature names understood by sweeps: maxPers1, totPers1, entropy1, h1_count.
const std::vector<std::string>& sweep_feature_names();
/// NaN for entropy1 when there are no H1 pairs. Throws InputError on an unknown name.
double feature_value(const FeatureSummary& s, const std::string& name);

/// Feature grids over a two-parameter plane. Grid cell (iy, ix) sits at
/// (axes[0][ix], axes[1][iy]); every grid has axes[1].size() rows.
struct SweepResult {
    std::string model;
    std::array<std::string, 2> axis_names;
    std::array<std::size_t, 2> axis_index{};
    std::array<Vec, 2> axes;
    /// Parameter vector the swept values are written into.
    Vec base_mu;
    std::vector<std::string> feature_names;
    std::vector<Matrix> grids;
    /// 1 where the simulation diverged; every feature is NaN there.
    std::vector<std::uint8_t> diverged;

    std::size_t nx() const noexcept { return axes[0].size(); }
    std::size_t ny() const noexcept { return axes[1].size(); }
    const Matrix& grid(const std::string& feature) const;
    /// Parameter vector at cell (iy, ix).
    Vec mu_at(std::size_t iy, std::size_t ix) const;
    /// Throws InputError unless sizes agree and axes strictly increase.
    void validate() const;
};

struct SweepSpec {
    GridAxis x;
    GridAxis y;
    std::vector<std::string> features{"maxPers1", "totPers1", "entropy1"};
    bool operator==(const SweepSpec&) const = default;
};

/// Called after each finished cell with (done, total). May run on any worker.
using SweepProgress = std::function<void(std::size_t, std::size_t)>;

/// Evaluates the pipeline at every grid cell. Cells are spread over `workers`
/// threads; the result does not depend on the worker count. Diverged cells are
/// masked rather than aborting the sweep.
SweepResult run_sweep(const SystemModel& model, std::span<const double> x0, const SimulationConfig& sim,
                      std::span<const double> base_mu, const SweepSpec& spec, std::size_t workers = 1,
                      const SweepProgress& progress = {});

/// Features of one forward pass at mu; the single-cell sweep computation.
/// Throws DivergenceError.
FeatureSummary simulate_features(const SystemModel& model, std::span<const double> x0,
                                 const SimulationConfig& sim, std::span<const double> mu);

/// Bilinear interpolation of one sweep feature over the swept plane. Points
/// outside the grid are clamped to it; a cell with any NaN corner yields NaN.
class GridFeature {
public:
    GridFeature(const SweepResult& sweep, const std::string& feature);

    double operator()(std::span<const double> mu) const;
    /// The swept rectangle, with the other parameters frozen at base_mu.
    Box domain() const;

private:
    double interpolate(double x, double y) const;

    std::array<std::size_t, 2> index_;
    std::array<Vec, 2> axes_;
    Vec base_mu_;
    Matrix grid_;
};

}  // namespace topnav
