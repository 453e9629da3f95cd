#include "topnav/navigate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace topnav {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double radical_inverse(std::uint64_t i, std::uint64_t base) {
    double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

constexpr std::array<std::uint64_t, 16> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

// NaN never wins; otherwise strictly greater.
bool better(double a, double b) { return !std::isnan(a) && (std::isnan(b) || a > b); }

Vec clamp_to(const Box& box, Vec p) {
    for (std::size_t d = 0; d < p.size(); ++d) p[d] = std::clamp(p[d], box.lower[d], box.upper[d]);
    return p;
}

// Nelder-Mead minimization of -feature over the free coordinates of `region`.
struct NelderMead {
    const Feature& feature;
    const Box& region;
    std::vector<std::size_t> free;
    std::size_t evals = 0;

    double cost(const Vec& p) {
        ++evals;
        const double v = feature(p);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : -v;
    }

    Vec combine(const Vec& a, const Vec& b, double t) const {
        // a + t (b - a), clamped
        Vec out = a;
        for (std::size_t d : free) out[d] = a[d] + t * (b[d] - a[d]);
        return clamp_to(region, out);
    }

    Vec run(const Vec& start, std::size_t max_evals) {
        const std::size_t n = free.size();
        std::vector<Vec> x(n + 1, start);
        std::vector<double> f(n + 1);
        double max_width = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t d = free[k];
            const double w = region.upper[d] - region.lower[d];
            max_width = std::max(max_width, w);
            const double step = 0.1 * w;
            x[k + 1][d] = start[d] + step > region.upper[d] ? start[d] - step : start[d] + step;
            x[k + 1] = clamp_to(region, x[k + 1]);
        }
        for (std::size_t k = 0; k <= n; ++k) f[k] = cost(x[k]);

        std::vector<std::size_t> order(n + 1);
        while (evals < max_evals) {
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
            const std::size_t best = order[0], worst = order[n], second = order[n - 1];
            double spread = 0.0;
            for (std::size_t k = 0; k <= n; ++k) {
                for (std::size_t d : free) spread = std::max(spread, std::abs(x[k][d] - x[best][d]));
            }
            if (spread <= 1e-10 * max_width) break;

            Vec c = start;
            for (std::size_t d : free) {
                double s = 0.0;
                for (std::size_t k = 0; k <= n; ++k) {
                    if (k != worst) s += x[k][d];
                }
                c[d] = s / static_cast<double>(n);
            }
            const Vec r = combine(c, x[worst], -1.0);
            const double fr = cost(r);
            if (fr < f[best]) {
                const Vec e = combine(c, x[worst], -2.0);
                const double fe = cost(e);
                if (fe < fr) {
                    x[worst] = e;
                    f[worst] = fe;
                } else {
                    x[worst] = r;
                    f[worst] = fr;
                }
                continue;
            }
            if (fr < f[second]) {
                x[worst] = r;
                f[worst] = fr;
                continue;
            }
            const bool outside = fr < f[worst];
            const Vec ct = outside ? combine(c, r, 0.5) : combine(c, x[worst], 0.5);
            const double fc = cost(ct);
            if (fc < (outside ? fr : f[worst])) {
                x[worst] = ct;
                f[worst] = fc;
                continue;
            }
            for (std::size_t k = 0; k <= n; ++k) {
                if (k == best) continue;
                x[k] = combine(x[best], x[k], 0.5);
                f[k] = cost(x[k]);
            }
        }
        std::size_t best = 0;
        for (std::size_t k = 1; k <= n; ++k) {
            if (f[k] < f[best]) best = k;
        }
        return x[best];
    }
};

double domain_diagonal(const Box& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < b.dim(); ++d) s += (b.upper[d] - b.lower[d]) * (b.upper[d] - b.lower[d]);
    return std::sqrt(s);
}

void check_domain(const Box& domain, std::span<const double> mu0) {
    if (domain.dim() == 0 || domain.upper.size() != domain.dim()) throw InputError("sampling path: empty domain");
    if (mu0.size() != domain.dim()) throw InputError("sampling path: start point has the wrong dimension");
    for (std::size_t d = 0; d < domain.dim(); ++d) {
        if (!std::isfinite(domain.lower[d]) || !std::isfinite(domain.upper[d]) || domain.upper[d] < domain.lower[d]) {
            throw InputError("sampling path: domain must be finite with lower <= upper");
        }
    }
    if (!domain.contains(mu0)) throw InputError("sampling path: start point lies outside the domain");
}

PathStep sample_step(std::size_t k, const Vec& mu, const Feature& feature) {
    PathStep s;
    s.epoch = k;
    s.mu = mu;
    s.loss = feature(mu);
    return s;
}

// Moves mu toward target by at most step; returns the unit direction, or empty
// when the target coincides with mu.
Vec move_toward(Vec& mu, const Vec& target, double step, double tol) {
    Vec d(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) d[i] = target[i] - mu[i];
    const double dist = norm2(d);
    if (dist <= tol) return {};
    const double len = std::min(step, dist);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        d[i] /= dist;
        mu[i] += len * d[i];
    }
    return d;
}

}  // namespace

double GDConfig::rate_at(std::size_t epoch) const {
    return learning_rate * std::pow(decay_per_epoch, static_cast<double>(epoch));
}

void GDConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InputError("gd: learning_rate must be positive");
    if (!(decay_per_epoch > 0.0 && decay_per_epoch <= 1.0)) throw InputError("gd: decay_per_epoch must lie in (0, 1]");
    if (clip_norm && !(*clip_norm > 0.0)) throw InputError("gd: clip_norm must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.eps > 0.0)) {
        throw InputError("gd: adam betas must lie in [0, 1) and eps must be positive");
    }
    if (!(stop_lr_floor >= 0.0)) throw InputError("gd: stop_lr_floor must be non-negative");
    if (!(stop_step_tol >= 0.0)) throw InputError("gd: stop_step_tol must be non-negative");
}

void adam_step(AdamState& s, std::span<double> mu, std::span<const double> grad, double lr, const AdamConfig& cfg) {
    if (grad.size() != mu.size()) throw InputError("adam_step: gradient and parameters differ in size");
    if (s.m.empty()) {
        s.m.assign(mu.size(), 0.0);
        s.v.assign(mu.size(), 0.0);
    }
    ++s.t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.t));
    for (std::size_t i = 0; i < mu.size(); ++i) {
        s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * grad[i];
        s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double m_hat = s.m[i] / c1;
        const double v_hat = s.v[i] / c2;
        mu[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

Vec clip_gradient(std::span<const double> g, double max_norm) {
    if (!(max_norm > 0.0)) throw InputError("clip_gradient: max_norm must be positive");
    Vec out(g.begin(), g.end());
    const double n = norm2(g);
    if (n > max_norm) {
        for (double& v : out) v *= max_norm / n;
    }
    return out;
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::max_epochs: return "max_epochs";
        case Termination::lr_floor: return "lr_floor";
        case Termination::step_tol: return "step_tol";
        case Termination::divergence: return "divergence";
    }
    return "unknown";
}

std::vector<std::string> flag_names(std::uint32_t flags) {
    static const std::pair<std::uint32_t, const char*> names[] = {
        {step_flags::clipped, "clipped"},
        {step_flags::singular, "singular"},
        {step_flags::adjoint_divergence, "adjoint_divergence"},
        {step_flags::undefined_feature, "undefined_feature"},
        {step_flags::outside_box, "outside_box"},
        {step_flags::saturated, "saturated"},
        {step_flags::stationary, "stationary"},
    };
    std::vector<std::string> out;
    for (const auto& [bit, name] : names) {
        if (flags & bit) out.emplace_back(name);
    }
    return out;
}

PathRecord gradient_descent(const Objective& objective, std::span<const double> mu0, const GDConfig& cfg,
                            const std::vector<bool>& free_mask, const std::optional<Box>& box,
                            const std::vector<std::string>& param_names,
                            const std::vector<std::string>& term_labels) {
    cfg.validate();
    const std::size_t D = mu0.size();
    if (D == 0) throw InputError("gradient_descent: no parameters");
    if (!free_mask.empty() && free_mask.size() != D) throw InputError("gradient_descent: mask size mismatch");
    if (box && box->dim() != D) throw InputError("gradient_descent: box dimension mismatch");

    PathRecord rec;
    rec.param_names = param_names;
    rec.term_labels = term_labels;
    Vec mu(mu0.begin(), mu0.end());
    AdamState adam;

    auto record = [&](std::size_t epoch, const ObjectiveResult& r) -> PathStep& {
        PathStep s;
        s.epoch = epoch;
        s.mu = mu;
        s.loss = r.loss;
        s.term_values = r.term_values;
        s.features = r.features;
        s.flags = r.flags;
        s.note = r.note;
        if (box && !box->contains(mu)) s.flags |= step_flags::outside_box;
        rec.steps.push_back(std::move(s));
        return rec.steps.back();
    };
    auto diverged = [&](std::size_t epoch, const DivergenceError& e) {
        ObjectiveResult r;
        r.loss = kNaN;
        r.note = e.what();
        record(epoch, r);
        rec.termination = Termination::divergence;
        rec.termination_detail = e.what();
    };

    std::size_t epoch = 0;
    bool stopped = false;
    for (; epoch < cfg.max_epochs; ++epoch) {
        const double lr = cfg.rate_at(epoch);
        if (lr < cfg.stop_lr_floor * cfg.learning_rate) {
            rec.termination = Termination::lr_floor;
            stopped = true;
            break;
        }
        ObjectiveResult r;
        try {
            r = objective(mu);
        } catch (const DivergenceError& e) {
            diverged(epoch, e);
            return rec;
        }
        if (r.gradient.size() != D) throw InputError("gradient_descent: objective returned a gradient of wrong size");
        Vec g(D, 0.0);
        for (std::size_t j = 0; j < D; ++j) {
            if (free_mask.empty() || free_mask[j]) g[j] = r.gradient[j];
        }
        if (!all_finite(g)) {
            r.flags |= step_flags::adjoint_divergence;
            r.note = "non-finite gradient";
        }
        const bool degenerate = (r.flags & step_flags::degenerate) != 0;
        const double raw_norm = degenerate && !all_finite(g) ? kNaN : norm2(g);
        if (degenerate) std::fill(g.begin(), g.end(), 0.0);
        if (cfg.clip_norm && norm2(g) > *cfg.clip_norm) {
            g = clip_gradient(g, *cfg.clip_norm);
            r.flags |= step_flags::clipped;
        }
        PathStep& s = record(epoch, r);
        s.grad_norm = raw_norm;
        s.step_grad_norm = norm2(g);
        s.learning_rate = lr;
        if (degenerate) continue;

        const Vec before = mu;
        adam_step(adam, mu, g, lr, cfg.adam);
        Vec delta(D);
        for (std::size_t j = 0; j < D; ++j) delta[j] = mu[j] - before[j];
        if (norm2(delta) < cfg.stop_step_tol) {
            ++epoch;
            rec.termination = Termination::step_tol;
            stopped = true;
            break;
        }
    }
    if (!stopped) rec.termination = Termination::max_epochs;

    // the final point, evaluated but not stepped from
    try {
        const ObjectiveResult r = objective(mu);
        PathStep& s = record(epoch, r);
        s.grad_norm = r.gradient.size() == D ? norm2(r.gradient) : kNaN;
        s.learning_rate = cfg.rate_at(epoch);
    } catch (const DivergenceError& e) {
        diverged(epoch, e);
    }
    return rec;
}

TopologicalObjective::TopologicalObjective(SystemModel model, Vec x0, SimulationConfig sim,
                                           std::vector<LossTerm> terms, bool balance, std::optional<Box> box)
    : model_(std::move(model)), x0_(std::move(x0)), sim_(sim), terms_(std::move(terms)), balance_(balance),
      box_(std::move(box)) {
    sim_.validate();
    if (x0_.size() != model_.state_dim) throw InputError("objective: initial state has the wrong dimension");
    if (terms_.empty()) throw InputError("objective: no loss terms");
    for (const auto& t : terms_) t.validate();
    if (box_ && box_->dim() != model_.param_dim) throw InputError("objective: box dimension mismatch");
}

std::vector<std::string> TopologicalObjective::term_labels() const {
    std::vector<std::string> out;
    for (const auto& t : terms_) out.push_back(t.label());
    return out;
}

PipelineState TopologicalObjective::forward(std::span<const double> mu) const {
    PipelineState st;
    st.trajectory = integrate(model_, mu, x0_, sim_);
    st.cloud = tail_point_cloud(st.trajectory, sim_.tail_count);
    st.diagram = rips_persistence(st.cloud, 1);
    try {
        st.loss = evaluate(terms_, st.diagram, mu, box_, balance_);
    } catch (const UndefinedFeatureError& e) {
        st.undefined_reason = e.what();
    }
    return st;
}

double TopologicalObjective::loss_at(std::span<const double> mu) const {
    const auto st = forward(mu);
    return st.loss ? st.loss->total : kNaN;
}

ObjectiveResult TopologicalObjective::operator()(std::span<const double> mu) const {
    const PipelineState st = forward(mu);
    ObjectiveResult r;
    r.gradient.assign(mu.size(), 0.0);
    r.features = summarize(st.diagram);
    if (!st.loss) {
        r.loss = kNaN;
        r.term_values.assign(terms_.size(), kNaN);
        r.flags |= step_flags::undefined_feature;
        r.note = st.undefined_reason;
        return r;
    }
    const LossEvaluation& ev = *st.loss;
    r.loss = ev.total;
    r.term_values = ev.per_term;
    if (ev.saturated) r.flags |= step_flags::saturated;

    DiagramGradient dg;
    try {
        dg = diagram_gradient(st.cloud, st.diagram);
    } catch (const SingularityError& e) {
        r.flags |= step_flags::singular;
        r.note = e.what();
        return r;
    }
    StateGradientSeed seed;
    seed.sample_indices = st.cloud.source_indices;
    seed.gradients = pullback(dg, ev.dL_dpairs);
    Vec adj;
    try {
        adj = adjoint_gradient(model_, st.trajectory, mu, seed);
    } catch (const DivergenceError& e) {
        r.flags |= step_flags::adjoint_divergence;
        r.note = e.what();
        return r;
    }
    for (std::size_t j = 0; j < mu.size(); ++j) r.gradient[j] = adj[j] + ev.dL_dmu_direct[j];
    return r;
}

PathRecord gradient_descent_path(const SystemModel& model, std::span<const double> x0, const SimulationConfig& sim,
                                 const std::vector<LossTerm>& terms, bool balance, std::span<const double> mu0,
                                 const GDConfig& gd, const std::optional<Box>& box) {
    const TopologicalObjective objective(model, Vec(x0.begin(), x0.end()), sim, terms, balance, box);
    return gradient_descent(std::cref(objective), mu0, gd, model.parameters.free_mask(), box, model.parameters.names,
                            objective.term_labels());
}

CloudObjective::CloudObjective(std::size_t dim, std::vector<LossTerm> terms, bool balance,
                               std::optional<Bounds> bounds)
    : dim_(dim), terms_(std::move(terms)), balance_(balance), bounds_(bounds) {
    if (dim_ == 0) throw InputError("cloud objective: dimension must be positive");
    if (terms_.empty()) throw InputError("cloud objective: no loss terms");
    for (const auto& t : terms_) t.validate();
}

std::vector<std::string> CloudObjective::term_labels() const {
    std::vector<std::string> out;
    for (const auto& t : terms_) out.push_back(t.label());
    return out;
}

PointCloud CloudObjective::cloud(std::span<const double> coords) const {
    if (coords.empty() || coords.size() % dim_ != 0) throw InputError("cloud objective: coordinate count mismatch");
    PointCloud c;
    c.points = Matrix(coords.size() / dim_, dim_);
    std::copy(coords.begin(), coords.end(), c.points.data.begin());
    c.source_indices.resize(c.size());
    std::iota(c.source_indices.begin(), c.source_indices.end(), std::size_t{0});
    return c;
}

ObjectiveResult CloudObjective::operator()(std::span<const double> coords) const {
    const PointCloud pc = cloud(coords);
    const PersistenceDiagram diag = rips_persistence(pc, 1);
    std::optional<Box> box;
    if (bounds_) box = Box{Vec(coords.size(), bounds_->lower), Vec(coords.size(), bounds_->upper)};

    ObjectiveResult r;
    r.gradient.assign(coords.size(), 0.0);
    r.features = summarize(diag);
    LossEvaluation ev;
    try {
        ev = evaluate(terms_, diag, coords, box, balance_);
    } catch (const UndefinedFeatureError& e) {
        r.loss = kNaN;
        r.term_values.assign(terms_.size(), kNaN);
        r.flags |= step_flags::undefined_feature;
        r.note = e.what();
        return r;
    }
    r.loss = ev.total;
    r.term_values = ev.per_term;
    if (ev.saturated) r.flags |= step_flags::saturated;
    DiagramGradient dg;
    try {
        dg = diagram_gradient(pc, diag);
    } catch (const SingularityError& e) {
        r.flags |= step_flags::singular;
        r.note = e.what();
        return r;
    }
    const Matrix pg = pullback(dg, ev.dL_dpairs);
    for (std::size_t k = 0; k < coords.size(); ++k) r.gradient[k] = pg.data[k] + ev.dL_dmu_direct[k];
    return r;
}

void TrustRegionConfig::validate() const {
    if (steps < 1) throw InputError("sampling: steps must be at least 1");
    if (!(step_size > 0.0)) throw InputError("sampling: step_size must be positive");
    if (confidence_window < 2) throw InputError("sampling: confidence_window must be at least 2");
    if (inner_budget < 1) throw InputError("sampling: inner_budget must be at least 1");
    if (!(gamma0 >= 0.0 && gamma0 <= 1.0)) throw InputError("sampling: gamma0 must lie in [0, 1]");
    if (min_extent && !(*min_extent >= 0.0)) throw InputError("sampling: min_extent must be non-negative");
}

Vec region_argmax(const Feature& feature, const Box& region, std::size_t budget, std::uint64_t seed) {
    if (budget < 1) throw InputError("region_argmax: budget must be at least 1");
    const std::size_t D = region.dim();
    if (D == 0 || region.upper.size() != D) throw InputError("region_argmax: empty region");
    if (D > kPrimes.size()) throw InputError("region_argmax: at most 16 dimensions");
    for (std::size_t d = 0; d < D; ++d) {
        if (!std::isfinite(region.lower[d]) || !std::isfinite(region.upper[d]) || region.upper[d] < region.lower[d]) {
            throw InputError("region_argmax: region must be finite with lower <= upper");
        }
    }

    Vec best = region.center();
    double best_value = feature(best);
    if (budget == 1) return best;

    // Cranley-Patterson rotation of the Halton set
    Vec shift(D);
    std::uint64_t state = seed;
    for (std::size_t d = 0; d < D; ++d) {
        state = splitmix64(state);
        shift[d] = unit_from_bits(state);
    }
    Vec p(D);
    for (std::size_t i = 1; i < budget; ++i) {
        for (std::size_t d = 0; d < D; ++d) {
            double u = radical_inverse(i, kPrimes[d]) + shift[d];
            u -= std::floor(u);
            p[d] = region.lower[d] + u * (region.upper[d] - region.lower[d]);
        }
        const double v = feature(p);
        if (better(v, best_value)) {
            best = p;
            best_value = v;
        }
    }

    NelderMead nm{feature, region, {}};
    for (std::size_t d = 0; d < D; ++d) {
        if (region.upper[d] > region.lower[d]) nm.free.push_back(d);
    }
    if (nm.free.empty()) return best;
    const Vec refined = nm.run(best, 40 * (nm.free.size() + 1));
    const double v = feature(refined);
    if (better(v, best_value)) best = refined;
    return best;
}

double confidence_factor(const std::vector<Vec>& directions) {
    if (directions.empty()) throw InputError("confidence_factor: no directions");
    const std::size_t D = directions.front().size();
    const double n = static_cast<double>(directions.size());
    double prod = 1.0;
    for (std::size_t d = 0; d < D; ++d) {
        double mean = 0.0;
        for (const auto& v : directions) mean += v[d];
        mean /= n;
        double var = 0.0;
        for (const auto& v : directions) var += (v[d] - mean) * (v[d] - mean);
        prod *= std::sqrt(var / n);
    }
    return std::clamp(1.0 - prod, 0.0, 1.0);
}

PathRecord global_sampling_path(const Feature& feature, const Box& domain, std::span<const double> mu0,
                                const TrustRegionConfig& cfg) {
    cfg.validate();
    check_domain(domain, mu0);
    const std::size_t D = domain.dim();
    const double N = static_cast<double>(cfg.steps);
    const double tol = 1e-12 * domain_diagonal(domain);

    PathRecord rec;
    Vec mu(mu0.begin(), mu0.end());
    rec.steps.push_back(sample_step(0, mu, feature));
    for (std::size_t k = 1; k <= cfg.steps; ++k) {
        const double kk = static_cast<double>(k);
        Box region{Vec(D), Vec(D)};
        for (std::size_t d = 0; d < D; ++d) {
            region.lower[d] = ((N - kk) * mu0[d] + kk * domain.lower[d]) / N;
            region.upper[d] = ((N - kk) * mu0[d] + kk * domain.upper[d]) / N;
            // keep the current point inside its own search region
            region.lower[d] = std::clamp(std::min(region.lower[d], mu[d]), domain.lower[d], domain.upper[d]);
            region.upper[d] = std::clamp(std::max(region.upper[d], mu[d]), domain.lower[d], domain.upper[d]);
        }
        const Vec target = region_argmax(feature, region, cfg.inner_budget, splitmix64(cfg.seed ^ k));
        const Vec dir = move_toward(mu, target, cfg.step_size, tol);
        mu = clamp_to(domain, mu);
        PathStep s = sample_step(k, mu, feature);
        if (dir.empty()) s.flags |= step_flags::stationary;
        s.region = region;
        rec.sampled_area += region.area();
        rec.steps.push_back(std::move(s));
    }
    rec.termination = Termination::max_epochs;
    return rec;
}

PathRecord local_sampling_path(const Feature& feature, const Box& domain, std::span<const double> mu0,
                               const TrustRegionConfig& cfg) {
    cfg.validate();
    check_domain(domain, mu0);
    const std::size_t D = domain.dim();
    const double tol = 1e-12 * domain_diagonal(domain);
    const double min_extent = cfg.min_extent.value_or(cfg.step_size);

    PathRecord rec;
    Vec mu(mu0.begin(), mu0.end());
    std::deque<Vec> recent;
    rec.steps.push_back(sample_step(0, mu, feature));
    for (std::size_t k = 1; k <= cfg.steps; ++k) {
        double gamma = cfg.gamma0;
        if (recent.size() >= cfg.confidence_window) gamma = confidence_factor({recent.begin(), recent.end()});
        Box region{Vec(D), Vec(D)};
        for (std::size_t d = 0; d < D; ++d) {
            const double below = mu[d] - domain.lower[d];
            const double above = domain.upper[d] - mu[d];
            region.lower[d] = mu[d] - std::min(std::max((1.0 - gamma) * below, min_extent), below);
            region.upper[d] = mu[d] + std::min(std::max((1.0 - gamma) * above, min_extent), above);
        }
        const Vec target = region_argmax(feature, region, cfg.inner_budget, splitmix64(cfg.seed ^ k));
        const Vec dir = move_toward(mu, target, cfg.step_size, tol);
        mu = clamp_to(domain, mu);
        PathStep s = sample_step(k, mu, feature);
        if (dir.empty()) s.flags |= step_flags::stationary;
        // a stationary step counts as a zero direction; frozen axes are left out
        Vec free_dir;
        for (std::size_t d = 0; d < D; ++d)
            if (domain.upper[d] > domain.lower[d]) free_dir.push_back(dir.empty() ? 0.0 : dir[d]);
        recent.push_back(std::move(free_dir));
        if (recent.size() > cfg.confidence_window) recent.pop_front();
        s.region = region;
        s.confidence = gamma;
        rec.sampled_area += region.area();
        rec.steps.push_back(std::move(s));
    }
    rec.termination = Termination::max_epochs;
    return rec;
}

PathRecord sampling_path(const Feature& feature, const Box& domain, std::span<const double> mu0,
                         const TrustRegionConfig& cfg) {
    return cfg.mode == SamplingMode::global ? global_sampling_path(feature, domain, mu0, cfg)
                                            : local_sampling_path(feature, domain, mu0, cfg);
}

}  // namespace topnav
