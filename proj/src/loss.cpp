#include "topnav/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace topnav {

namespace {

constexpr double kExpCap = 700.0;
constexpr double kBalanceFloor = 1e-12;

void check_dim(int dim) {
    if (dim != 0 && dim != 1) throw InputError("loss: homology dimension must be 0 or 1");
}

FeatureValue empty_feature(const PersistenceDiagram& diag) {
    return FeatureValue{0.0, Matrix(diag.size(), 2)};
}

// d lifetime / d birth = -1, d lifetime / d death = +1
void add_lifetime_seed(Matrix& seed, std::size_t k, double w) {
    seed(k, 0) -= w;
    seed(k, 1) += w;
}

}  // namespace

std::string LossTerm::label() const {
    const std::string d = std::to_string(dim);
    switch (kind) {
        case TermKind::max_pers: return "maxPers" + d;
        case TermKind::tot_pers: return "totPers" + d;
        case TermKind::avg_pers: return "avgPers" + d;
        case TermKind::top_n: return "top" + std::to_string(count) + "Pers" + d;
        case TermKind::entropy: return (normalized ? "entropy" : "rawEntropy") + d;
        case TermKind::forbidden_param: return "forbiddenParam";
        case TermKind::forbidden_diagram: return "forbiddenDiagram" + d;
        case TermKind::box_bounds: return "box";
    }
    return "term";
}

void LossTerm::validate() const {
    if (!std::isfinite(weight)) throw InputError("loss term " + label() + ": weight must be finite");
    if (is_penalty()) {
        if (!(a > 0.0) || !std::isfinite(a)) throw InputError("loss term " + label() + ": a must be positive");
    } else if (sign != 1.0 && sign != -1.0) {
        throw InputError("loss term " + label() + ": sign must be +1 or -1");
    }
    if (kind != TermKind::forbidden_param && kind != TermKind::box_bounds) check_dim(dim);
    if (kind == TermKind::top_n && count < 1) throw InputError("loss term top_n: count must be at least 1");
    if (kind == TermKind::forbidden_param && !param_region) {
        throw InputError("loss term forbiddenParam: missing region function");
    }
    if (kind == TermKind::forbidden_diagram && !pair_region) {
        throw InputError("loss term forbiddenDiagram: missing region function");
    }
    if (kind == TermKind::box_bounds && !(margin >= 0.0 && margin < 0.5)) {
        throw InputError("loss term box: margin must lie in [0, 0.5)");
    }
}

LossTerm LossTerm::max_pers(int dim, double sign, double weight) {
    LossTerm t;
    t.kind = TermKind::max_pers;
    t.dim = dim;
    t.sign = sign;
    t.weight = weight;
    return t;
}

LossTerm LossTerm::tot_pers(int dim, double sign, double weight) {
    LossTerm t = max_pers(dim, sign, weight);
    t.kind = TermKind::tot_pers;
    return t;
}

LossTerm LossTerm::avg_pers(int dim, double sign, double weight) {
    LossTerm t = max_pers(dim, sign, weight);
    t.kind = TermKind::avg_pers;
    return t;
}

LossTerm LossTerm::top_n(int dim, std::size_t count, double sign, double weight) {
    LossTerm t = max_pers(dim, sign, weight);
    t.kind = TermKind::top_n;
    t.count = count;
    return t;
}

LossTerm LossTerm::entropy(int dim, bool normalized, double sign, double weight) {
    LossTerm t = max_pers(dim, sign, weight);
    t.kind = TermKind::entropy;
    t.normalized = normalized;
    return t;
}

LossTerm LossTerm::forbidden_param(ParamRegionFn f, double a, double weight) {
    LossTerm t;
    t.kind = TermKind::forbidden_param;
    t.param_region = std::move(f);
    t.a = a;
    t.weight = weight;
    return t;
}

LossTerm LossTerm::forbidden_diagram(int dim, PairRegionFn f, double a, double weight) {
    LossTerm t;
    t.kind = TermKind::forbidden_diagram;
    t.dim = dim;
    t.pair_region = std::move(f);
    t.a = a;
    t.weight = weight;
    return t;
}

LossTerm LossTerm::box_bounds(double a, double margin, double weight) {
    LossTerm t;
    t.kind = TermKind::box_bounds;
    t.a = a;
    t.margin = margin;
    t.weight = weight;
    return t;
}

FeatureValue max_persistence(const PersistenceDiagram& diag, int dim) {
    check_dim(dim);
    FeatureValue out = empty_feature(diag);
    std::optional<std::size_t> best;
    for (std::size_t k : diag.finite_indices(dim)) {
        if (!best || diag.pairs[k].lifetime() > diag.pairs[*best].lifetime()) best = k;
    }
    if (best) {
        out.value = diag.pairs[*best].lifetime();
        add_lifetime_seed(out.seed, *best, 1.0);
    }
    return out;
}

FeatureValue total_persistence(const PersistenceDiagram& diag, int dim) {
    check_dim(dim);
    FeatureValue out = empty_feature(diag);
    for (std::size_t k : diag.finite_indices(dim)) {
        out.value += diag.pairs[k].lifetime();
        add_lifetime_seed(out.seed, k, 1.0);
    }
    return out;
}

FeatureValue avg_persistence(const PersistenceDiagram& diag, int dim) {
    FeatureValue out = total_persistence(diag, dim);
    const std::size_t m = diag.finite_indices(dim).size();
    if (m == 0) return out;
    const double inv = 1.0 / static_cast<double>(m);
    out.value *= inv;
    for (double& v : out.seed.data) v *= inv;
    return out;
}

FeatureValue top_n_persistence(const PersistenceDiagram& diag, int dim, std::size_t n) {
    check_dim(dim);
    if (n < 1) throw InputError("top_n_persistence: n must be at least 1");
    FeatureValue out = empty_feature(diag);
    auto idx = diag.finite_indices(dim);
    // longest first; equal lifetimes keep diagram order
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
        return diag.pairs[x].lifetime() > diag.pairs[y].lifetime();
    });
    for (std::size_t r = 0; r < std::min(n, idx.size()); ++r) {
        out.value += diag.pairs[idx[r]].lifetime();
        add_lifetime_seed(out.seed, idx[r], 1.0);
    }
    return out;
}

FeatureValue persistent_entropy(const PersistenceDiagram& diag, int dim, bool normalized) {
    check_dim(dim);
    const auto idx = diag.finite_indices(dim);
    if (idx.empty()) {
        throw UndefinedFeatureError("entropy of H" + std::to_string(dim) + " is undefined: no finite pairs");
    }
    FeatureValue out = empty_feature(diag);
    if (idx.size() == 1) return out;

    double L = 0.0;
    for (std::size_t k : idx) L += diag.pairs[k].lifetime();
    double E = 0.0;
    for (std::size_t k : idx) {
        const double p = diag.pairs[k].lifetime() / L;
        E -= p * std::log2(p);
    }
    const double scale = normalized ? 1.0 / std::log2(static_cast<double>(idx.size())) : 1.0;
    out.value = E * scale;
    for (std::size_t k : idx) {
        const double p = diag.pairs[k].lifetime() / L;
        add_lifetime_seed(out.seed, k, -scale * (std::log2(p) + E) / L);
    }
    return out;
}

PenaltyValue forbidden_penalty(double f, double a) {
    const double z = a * f;
    if (z > kExpCap) return PenaltyValue{std::exp(kExpCap), a * std::exp(kExpCap), true};
    const double v = std::exp(z);
    return PenaltyValue{v, a * v, false};
}

PenaltyValue box_penalty(const Box& box, std::span<const double> mu, double a, double margin,
                         std::span<double> grad) {
    if (box.dim() != mu.size() || grad.size() != mu.size()) {
        throw InputError("box_penalty: box, parameters and gradient must have the same dimension");
    }
    PenaltyValue out;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        grad[j] = 0.0;
        const double lo = box.lower[j], hi = box.upper[j];
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) continue;
        const double buffer = margin * (hi - lo);
        const auto upper = forbidden_penalty(mu[j] - (hi - buffer), a);
        const auto lower = forbidden_penalty((lo + buffer) - mu[j], a);
        out.value += upper.value + lower.value;
        grad[j] = upper.slope - lower.slope;
        out.saturated = out.saturated || upper.saturated || lower.saturated;
    }
    return out;
}

LossEvaluation evaluate(const std::vector<LossTerm>& terms, const PersistenceDiagram& diag,
                        std::span<const double> mu, const std::optional<Box>& box, bool balance) {
    LossEvaluation out;
    out.dL_dpairs = Matrix(diag.size(), 2);
    out.dL_dmu_direct.assign(mu.size(), 0.0);
    out.raw.reserve(terms.size());
    out.per_term.reserve(terms.size());
    Vec grad(mu.size());

    for (const auto& term : terms) {
        term.validate();
        if (!term.is_penalty()) {
            FeatureValue fv;
            switch (term.kind) {
                case TermKind::max_pers: fv = max_persistence(diag, term.dim); break;
                case TermKind::tot_pers: fv = total_persistence(diag, term.dim); break;
                case TermKind::avg_pers: fv = avg_persistence(diag, term.dim); break;
                case TermKind::top_n: fv = top_n_persistence(diag, term.dim, term.count); break;
                case TermKind::entropy: fv = persistent_entropy(diag, term.dim, term.normalized); break;
                default: break;
            }
            const double divisor = balance ? std::max(std::abs(fv.value), kBalanceFloor) : 1.0;
            const double contribution = term.sign * fv.value / divisor;
            const double w = term.weight * term.sign / divisor;
            out.raw.push_back(fv.value);
            out.per_term.push_back(contribution);
            out.total += term.weight * contribution;
            for (std::size_t k = 0; k < out.dL_dpairs.data.size(); ++k) out.dL_dpairs.data[k] += w * fv.seed.data[k];
            continue;
        }

        double value = 0.0;
        if (term.kind == TermKind::forbidden_param) {
            std::fill(grad.begin(), grad.end(), 0.0);
            const double f = term.param_region(mu, grad);
            const auto p = forbidden_penalty(f, term.a);
            value = p.value;
            out.saturated = out.saturated || p.saturated;
            for (std::size_t j = 0; j < mu.size(); ++j) out.dL_dmu_direct[j] += term.weight * p.slope * grad[j];
        } else if (term.kind == TermKind::forbidden_diagram) {
            for (std::size_t k : diag.finite_indices(term.dim)) {
                double db = 0.0, dd = 0.0;
                const double f = term.pair_region(diag.pairs[k].birth, diag.pairs[k].death, db, dd);
                const auto p = forbidden_penalty(f, term.a);
                value += p.value;
                out.saturated = out.saturated || p.saturated;
                out.dL_dpairs(k, 0) += term.weight * p.slope * db;
                out.dL_dpairs(k, 1) += term.weight * p.slope * dd;
            }
        } else {
            if (!term.box && !box) throw InputError("loss term box: no box given");
            const auto p = box_penalty(term.box ? *term.box : *box, mu, term.a, term.margin, grad);
            value = p.value;
            out.saturated = out.saturated || p.saturated;
            for (std::size_t j = 0; j < mu.size(); ++j) out.dL_dmu_direct[j] += term.weight * grad[j];
        }
        out.raw.push_back(value);
        out.per_term.push_back(value);
        out.total += term.weight * value;
    }
    return out;
}

FeatureSummary summarize(const PersistenceDiagram& diag) {
    FeatureSummary s;
    if (diag.max_dim < 1) return s;
    s.max_pers1 = max_persistence(diag, 1).value;
    s.tot_pers1 = total_persistence(diag, 1).value;
    s.h1_count = diag.finite_indices(1).size();
    if (s.h1_count > 0) s.entropy1 = persistent_entropy(diag, 1, true).value;
    return s;
}

}  // namespace topnav
