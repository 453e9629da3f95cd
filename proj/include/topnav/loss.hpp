#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "topnav/common.hpp"
#include "topnav/tda.hpp"

namespace topnav {

/// Feature value together with its seed on the diagram pairs: row k of `seed`
/// is (dvalue/dbirth_k, dvalue/ddeath_k), aligned with PersistenceDiagram::pairs.
struct FeatureValue {
    double value = 0.0;
    Matrix seed;
};

/// Scalar constraint function on parameters; returns f(mu) and writes df/dmu.
using ParamRegionFn = std::function<double(std::span<const double> mu, std::span<double> grad)>;
/// Scalar constraint function on one pair; returns f(b, d) and writes its partials.
using PairRegionFn = std::function<double(double birth, double death, double& df_dbirth, double& df_ddeath)>;

enum class TermKind {
    max_pers,
    tot_pers,
    avg_pers,
    top_n,
    entropy,
    forbidden_param,
    forbidden_diagram,
    box_bounds,
};

/// One summand of a loss. Topological kinds contribute sign * feature; sign +1
/// minimizes the feature and -1 maximizes it. Penalty kinds contribute
/// exp(a f) and ignore sign.
struct LossTerm {
    TermKind kind = TermKind::max_pers;
    int dim = 1;
    double sign = 1.0;
    double weight = 1.0;
    std::size_t count = 1;   // top_n
    bool normalized = true;  // entropy
    double a = 100.0;        // penalty sharpness
    double margin = 0.02;    // box_bounds: walls sit this fraction of the width inside the box
    std::optional<Box> box;  // box_bounds: overrides the parameter box passed to evaluate
    ParamRegionFn param_region;
    PairRegionFn pair_region;

    bool is_penalty() const noexcept {
        return kind == TermKind::forbidden_param || kind == TermKind::forbidden_diagram ||
               kind == TermKind::box_bounds;
    }
    /// Short name such as "maxPers1" or "box", used in logs.
    std::string label() const;
    /// Throws InputError on a bad sign, count, dimension or missing region function.
    void validate() const;

    static LossTerm max_pers(int dim, double sign, double weight = 1.0);
    static LossTerm tot_pers(int dim, double sign, double weight = 1.0);
    static LossTerm avg_pers(int dim, double sign, double weight = 1.0);
    static LossTerm top_n(int dim, std::size_t count, double sign, double weight = 1.0);
    static LossTerm entropy(int dim, bool normalized, double sign, double weight = 1.0);
    static LossTerm forbidden_param(ParamRegionFn f, double a = 100.0, double weight = 1.0);
    static LossTerm forbidden_diagram(int dim, PairRegionFn f, double a = 100.0, double weight = 1.0);
    static LossTerm box_bounds(double a = 100.0, double margin = 0.02, double weight = 1.0);
};

struct LossEvaluation {
    double total = 0.0;
    /// Raw value per term: the feature, or the penalty exp(a f).
    Vec raw;
    /// Contribution per term before weighting: sign * raw / divisor, where the
    /// divisor is |raw| under balancing and 1 otherwise. total = sum weight * per_term.
    Vec per_term;
    Matrix dL_dpairs;  // m x 2
    Vec dL_dmu_direct;
    /// Some penalty exceeded exp(700) and was capped.
    bool saturated = false;
};

/// Standard features logged along a path.
struct FeatureSummary {
    double max_pers1 = 0.0;
    double tot_pers1 = 0.0;
    std::optional<double> entropy1;  // normalized; absent with no H1 pairs
    std::size_t h1_count = 0;
};

FeatureValue max_persistence(const PersistenceDiagram& diag, int dim);
FeatureValue total_persistence(const PersistenceDiagram& diag, int dim);
FeatureValue avg_persistence(const PersistenceDiagram& diag, int dim);
FeatureValue top_n_persistence(const PersistenceDiagram& diag, int dim, std::size_t n);
/// Shannon entropy (bits) of the lifetime distribution. Throws
/// UndefinedFeatureError with no finite pair in `dim`.
FeatureValue persistent_entropy(const PersistenceDiagram& diag, int dim, bool normalized);

struct PenaltyValue {
    double value = 0.0;
    double slope = 0.0;  // d value / d f
    bool saturated = false;
};

/// exp(a f); values with a f > 700 are capped at exp(700).
PenaltyValue forbidden_penalty(double f, double a);

/// Sum over components with finite, unfrozen bounds of exp(a (mu - wall_hi)) +
/// exp(a (wall_lo - mu)). `grad` receives the derivative.
PenaltyValue box_penalty(const Box& box, std::span<const double> mu, double a, double margin,
                         std::span<double> grad);

/// Sums the terms. `box` is the parameter box used by box_bounds terms without
/// their own. Balancing divides each topological term by its detached |value|
/// (floor 1e-12); penalties are never balanced.
LossEvaluation evaluate(const std::vector<LossTerm>& terms, const PersistenceDiagram& diag,
                        std::span<const double> mu, const std::optional<Box>& box, bool balance);

FeatureSummary summarize(const PersistenceDiagram& diag);

}  // namespace topnav
