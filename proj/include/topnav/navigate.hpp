#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "topnav/common.hpp"
#include "topnav/loss.hpp"
#include "topnav/simulate.hpp"
#include "topnav/systems.hpp"
#include "topnav/tda.hpp"

namespace topnav {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool operator==(const AdamConfig&) const = default;
};

struct GDConfig {
    double learning_rate = 0.01;
    double decay_per_epoch = 1.0;
    std::optional<double> clip_norm = 1.0;
    std::size_t max_epochs = 100;
    AdamConfig adam;
    /// Stop once the learning rate falls below stop_lr_floor * learning_rate.
    double stop_lr_floor = 1e-4;
    /// Stop after a regular epoch whose step is shorter than this.
    double stop_step_tol = 1e-6;

    /// Learning rate used at epoch t (0-based): lr0 * decay^t.
    double rate_at(std::size_t epoch) const;
    void validate() const;
    bool operator==(const GDConfig&) const = default;
};

struct AdamState {
    Vec m;
    Vec v;
    std::size_t t = 0;
};

/// One bias-corrected Adam update of mu in place.
void adam_step(AdamState& state, std::span<double> mu, std::span<const double> grad, double lr,
               const AdamConfig& cfg = {});

/// g scaled down to max_norm when its Euclidean norm exceeds it.
Vec clip_gradient(std::span<const double> g, double max_norm);

enum class Termination { max_epochs, lr_floor, step_tol, divergence };
std::string to_string(Termination t);

/// Bit flags attached to a recorded step.
namespace step_flags {
constexpr std::uint32_t clipped = 1u << 0;
constexpr std::uint32_t singular = 1u << 1;            // zero-length critical edge
constexpr std::uint32_t adjoint_divergence = 1u << 2;
constexpr std::uint32_t undefined_feature = 1u << 3;   // e.g. entropy without H1 pairs
constexpr std::uint32_t outside_box = 1u << 4;
constexpr std::uint32_t saturated = 1u << 5;           // a penalty hit its cap
constexpr std::uint32_t stationary = 1u << 6;          // sampling path did not move
/// Flags that turn an epoch into a zero step.
constexpr std::uint32_t degenerate = singular | adjoint_divergence | undefined_feature;
}  // namespace step_flags

std::vector<std::string> flag_names(std::uint32_t flags);

struct PathStep {
    std::size_t epoch = 0;
    Vec mu;
    double loss = 0.0;       // NaN when undefined
    Vec term_values;         // per-term contributions, aligned with PathRecord::term_labels
    FeatureSummary features;
    double grad_norm = 0.0;  // before clipping
    double step_grad_norm = 0.0;  // after clipping and masking
    double learning_rate = 0.0;
    std::uint32_t flags = 0;
    std::optional<Box> region;  // sampling paths: the searched region
    std::optional<double> confidence;  // local sampling: gamma used for the region
    std::string note;
};

/// A visited sequence mu_0, mu_1, ... with diagnostics. For gradient descent the
/// last step holds the final point and carries no gradient.
struct PathRecord {
    std::vector<std::string> param_names;
    std::vector<std::string> term_labels;
    std::vector<PathStep> steps;
    Termination termination = Termination::max_epochs;
    std::string termination_detail;
    /// Sampling paths: summed area of the searched regions.
    double sampled_area = 0.0;

    const PathStep& final_step() const { return steps.back(); }
};

struct ObjectiveResult {
    double loss = 0.0;
    Vec gradient;
    Vec term_values;
    FeatureSummary features;
    std::uint32_t flags = 0;
    std::string note;
};

/// Loss and gradient at mu. May throw DivergenceError, which ends a path.
using Objective = std::function<ObjectiveResult(std::span<const double> mu)>;

/// Adam descent with clipping and decay. Masked-out components never move.
/// Steps flagged degenerate move nowhere but still advance the epoch.
PathRecord gradient_descent(const Objective& objective, std::span<const double> mu0, const GDConfig& cfg,
                            const std::vector<bool>& free_mask, const std::optional<Box>& box = std::nullopt,
                            const std::vector<std::string>& param_names = {},
                            const std::vector<std::string>& term_labels = {});

/// Forward results of one pipeline evaluation, kept for inspection and plots.
struct PipelineState {
    Trajectory trajectory;
    PointCloud cloud;
    PersistenceDiagram diagram;
    std::optional<LossEvaluation> loss;  // absent when a feature is undefined
    std::string undefined_reason;
};

/// mu -> simulate -> tail cloud -> persistence -> loss, and its gradient by
/// pullback to the tail states and the adjoint method.
class TopologicalObjective {
public:
    TopologicalObjective(SystemModel model, Vec x0, SimulationConfig sim, std::vector<LossTerm> terms,
                         bool balance, std::optional<Box> box);

    ObjectiveResult operator()(std::span<const double> mu) const;
    PipelineState forward(std::span<const double> mu) const;
    /// Loss only; NaN when a feature is undefined.
    double loss_at(std::span<const double> mu) const;

    const SystemModel& model() const { return model_; }
    std::vector<std::string> term_labels() const;

private:
    SystemModel model_;
    Vec x0_;
    SimulationConfig sim_;
    std::vector<LossTerm> terms_;
    bool balance_;
    std::optional<Box> box_;
};

/// Convenience wrapper: a TopologicalObjective driven by gradient_descent, with
/// the model's frozen parameters masked.
PathRecord gradient_descent_path(const SystemModel& model, std::span<const double> x0, const SimulationConfig& sim,
                                 const std::vector<LossTerm>& terms, bool balance, std::span<const double> mu0,
                                 const GDConfig& gd, const std::optional<Box>& box);

/// Loss over the point coordinates themselves, flattened row-major, with no
/// dynamics in between. `bounds` applies to every coordinate and feeds
/// box_bounds terms.
class CloudObjective {
public:
    CloudObjective(std::size_t dim, std::vector<LossTerm> terms, bool balance, std::optional<Bounds> bounds);

    ObjectiveResult operator()(std::span<const double> coords) const;
    PointCloud cloud(std::span<const double> coords) const;
    std::vector<std::string> term_labels() const;

private:
    std::size_t dim_;
    std::vector<LossTerm> terms_;
    bool balance_;
    std::optional<Bounds> bounds_;
};

enum class SamplingMode { global, local };

struct TrustRegionConfig {
    std::size_t steps = 2500;
    double step_size = 0.1;
    std::size_t confidence_window = 5;
    SamplingMode mode = SamplingMode::local;
    std::size_t inner_budget = 64;
    std::uint64_t seed = 0;
    double gamma0 = 0.95;
    /// Smallest half-extent of a local region per side; defaults to step_size.
    std::optional<double> min_extent;

    void validate() const;
    bool operator==(const TrustRegionConfig&) const = default;
};

using Feature = std::function<double(std::span<const double> mu)>;

/// Best point of `feature` in `region`: the center, then budget - 1 points of a
/// rotated Halton set, then Nelder-Mead from the best sample, kept inside the
/// region. A point replaces the incumbent only when strictly better; NaN never
/// wins. Budget 1 evaluates the center only.
Vec region_argmax(const Feature& feature, const Box& region, std::size_t budget, std::uint64_t seed);

/// 1 - prod_i sigma_i, sigma_i the population standard deviation of component i
/// over the given directions, clamped to [0, 1].
double confidence_factor(const std::vector<Vec>& directions);

/// Growing-region scheme: Omega_k interpolates from the start point to the full
/// domain, extended to contain the current point.
PathRecord global_sampling_path(const Feature& feature, const Box& domain, std::span<const double> mu0,
                                const TrustRegionConfig& cfg);
/// Trust-region scheme: the region around the current point shrinks with the
/// agreement of the last few step directions.
PathRecord local_sampling_path(const Feature& feature, const Box& domain, std::span<const double> mu0,
                               const TrustRegionConfig& cfg);
PathRecord sampling_path(const Feature& feature, const Box& domain, std::span<const double> mu0,
                         const TrustRegionConfig& cfg);

}  // namespace topnav
