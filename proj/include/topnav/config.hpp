#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "topnav/common.hpp"
#include "topnav/loss.hpp"
#include "topnav/navigate.hpp"
#include "topnav/simulate.hpp"
#include "topnav/sweep.hpp"
#include "topnav/systems.hpp"

namespace topnav {

/// Serializable description of one loss term.
///
/// kind is one of maxPers, totPers, avgPers, topN, entropy, box, ball. "ball"
/// forbids the parameter-space ball of `radius` around `center` through
/// f(mu) = radius^2 - |mu - center|^2.
struct TermSpec {
    std::string kind = "maxPers";
    int dim = 1;
    double sign = 1.0;
    double weight = 1.0;
    std::size_t count = 1;
    bool normalized = true;
    double a = 100.0;
    double margin = 0.02;
    Vec center;
    double radius = 0.0;

    bool operator==(const TermSpec&) const = default;
};

LossTerm make_loss_term(const TermSpec& spec, std::size_t param_dim);

enum class Scheme { gd, global, local };
std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

/// Everything one run needs. Parameter-indexed vectors follow the model order.
struct RunConfig {
    std::string model;
    Vec parameters;
    std::vector<std::optional<Bounds>> bounds;
    Vec initial_state;
    SimulationConfig simulation;
    std::vector<TermSpec> terms;
    bool balance = true;

    Scheme scheme = Scheme::gd;
    GDConfig gd;
    TrustRegionConfig sampling;
    /// Start of derivative-free paths; absent means `parameters`.
    std::optional<Vec> sampling_start;
    std::string sampling_feature = "maxPers1";

    SweepSpec sweep;
    double check_grad_h = 1e-6;
    double check_grad_tolerance = 1e-2;

    std::string output_dir = "out";
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    /// The model with this config's bounds.
    SystemModel system() const;
    std::vector<LossTerm> loss_terms() const;
    Box box() const;
    Vec start_for_sampling() const { return sampling_start.value_or(parameters); }
    /// Sampling settings with the scheme and seed of this config applied.
    TrustRegionConfig sampling_config() const;
    /// Throws InputError on any inconsistent value.
    void validate() const;
    bool operator==(const RunConfig&) const = default;
};

/// Defaults for a model: the published recipe for that system.
RunConfig default_config(const std::string& model);

/// Parses a JSON config. Missing keys keep the model defaults; unknown keys,
/// wrong types and invalid values throw InputError.
RunConfig parse_config(std::string_view json_text);
/// Full effective config as JSON; parse_config of it reproduces the config.
std::string config_to_json(const RunConfig& cfg);

}  // namespace topnav
