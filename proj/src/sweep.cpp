#include "topnav/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "topnav/tda.hpp"

namespace topnav {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Index of the interval [v[k], v[k+1]] holding x, and the fraction within it.
std::pair<std::size_t, double> locate(const Vec& v, double x) {
    if (v.size() == 1) return {0, 0.0};
    if (x <= v.front()) return {0, 0.0};
    if (x >= v.back()) return {v.size() - 2, 1.0};
    auto it = std::upper_bound(v.begin(), v.end(), x);
    std::size_t k = static_cast<std::size_t>(it - v.begin()) - 1;
    k = std::min(k, v.size() - 2);
    return {k, (x - v[k]) / (v[k + 1] - v[k])};
}

}  // namespace

Vec GridAxis::values() const {
    validate();
    Vec out(count);
    if (count == 1) {
        out[0] = min;
        return out;
    }
    const double step = (max - min) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = min + step * static_cast<double>(i);
    out.back() = max;
    return out;
}

void GridAxis::validate() const {
    if (param.empty()) throw InputError("grid axis needs a parameter name");
    if (count == 0) throw InputError("grid axis '" + param + "' has zero points");
    if (!std::isfinite(min) || !std::isfinite(max)) throw InputError("grid axis '" + param + "' has non-finite limits");
    if (count == 1 ? min > max : min >= max)
        throw InputError("grid axis '" + param + "' needs min < max");
}

const std::vector<std::string>& sweep_feature_names() {
    static const std::vector<std::string> names{"maxPers1", "totPers1", "entropy1", "h1_count"};
    return names;
}

double feature_value(const FeatureSummary& s, const std::string& name) {
    if (name == "maxPers1") return s.max_pers1;
    if (name == "totPers1") return s.tot_pers1;
    if (name == "entropy1") return s.entropy1 ? *s.entropy1 : kNaN;
    if (name == "h1_count") return static_cast<double>(s.h1_count);
    throw InputError("unknown sweep feature '" + name + "'");
}

const Matrix& SweepResult::grid(const std::string& feature) const {
    for (std::size_t k = 0; k < feature_names.size(); ++k)
        if (feature_names[k] == feature) return grids[k];
    throw InputError("sweep has no feature '" + feature + "'");
}

Vec SweepResult::mu_at(std::size_t iy, std::size_t ix) const {
    Vec mu = base_mu;
    mu[axis_index[0]] = axes[0][ix];
    mu[axis_index[1]] = axes[1][iy];
    return mu;
}

void SweepResult::validate() const {
    for (const auto& ax : axes) {
        if (ax.empty()) throw InputError("sweep axis is empty");
        for (std::size_t i = 1; i < ax.size(); ++i)
            if (!(ax[i] > ax[i - 1])) throw InputError("sweep axis values must strictly increase");
    }
    for (std::size_t idx : axis_index)
        if (idx >= base_mu.size()) throw InputError("sweep axis index out of range");
    if (axis_index[0] == axis_index[1]) throw InputError("sweep axes must be different parameters");
    if (grids.size() != feature_names.size()) throw InputError("sweep grid count does not match features");
    for (const auto& g : grids)
        if (g.rows != ny() || g.cols != nx()) throw InputError("sweep grid shape does not match axes");
    if (diverged.size() != nx() * ny()) throw InputError("sweep divergence mask has the wrong size");
}

FeatureSummary simulate_features(const SystemModel& model, std::span<const double> x0, const SimulationConfig& sim,
                                 std::span<const double> mu) {
    const Trajectory traj = integrate(model, mu, x0, sim);
    const PointCloud cloud = tail_point_cloud(traj, sim.tail_count);
    return summarize(rips_persistence(cloud, 1));
}

SweepResult run_sweep(const SystemModel& model, std::span<const double> x0, const SimulationConfig& sim,
                      std::span<const double> base_mu, const SweepSpec& spec, std::size_t workers,
                      const SweepProgress& progress) {
    sim.validate();
    if (base_mu.size() != model.param_dim) throw InputError("sweep base parameters have the wrong size");
    if (spec.features.empty()) throw InputError("sweep needs at least one feature");
    for (const auto& f : spec.features) feature_value(FeatureSummary{}, f);

    SweepResult out;
    out.model = model.name;
    out.axis_names = {spec.x.param, spec.y.param};
    out.axis_index = {model.parameters.index_of(spec.x.param), model.parameters.index_of(spec.y.param)};
    out.axes = {spec.x.values(), spec.y.values()};
    out.base_mu.assign(base_mu.begin(), base_mu.end());
    out.feature_names = spec.features;
    out.grids.assign(spec.features.size(), Matrix(out.ny(), out.nx(), kNaN));
    out.diverged.assign(out.nx() * out.ny(), 0);
    if (out.axis_index[0] == out.axis_index[1]) throw InputError("sweep axes must be different parameters");

    const std::size_t total = out.nx() * out.ny();
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        for (;;) {
            const std::size_t cell = next.fetch_add(1);
            if (cell >= total) return;
            const std::size_t iy = cell / out.nx();
            const std::size_t ix = cell % out.nx();
            try {
                const Vec mu = out.mu_at(iy, ix);
                const FeatureSummary s = simulate_features(model, x0, sim, mu);
                for (std::size_t k = 0; k < spec.features.size(); ++k)
                    out.grids[k](iy, ix) = feature_value(s, spec.features[k]);
            } catch (const DivergenceError&) {
                out.diverged[cell] = 1;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(total);
                return;
            }
            const std::size_t d = done.fetch_add(1) + 1;
            if (progress) progress(d, total);
        }
    };

    workers = std::clamp<std::size_t>(workers, 1, total);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

GridFeature::GridFeature(const SweepResult& sweep, const std::string& feature)
    : index_(sweep.axis_index), axes_(sweep.axes), base_mu_(sweep.base_mu), grid_(sweep.grid(feature)) {
    sweep.validate();
}

double GridFeature::interpolate(double x, double y) const {
    const auto [ix, fx] = locate(axes_[0], x);
    const auto [iy, fy] = locate(axes_[1], y);
    const std::size_t ix1 = std::min(ix + 1, axes_[0].size() - 1);
    const std::size_t iy1 = std::min(iy + 1, axes_[1].size() - 1);
    const double v00 = grid_(iy, ix), v01 = grid_(iy, ix1);
    const double v10 = grid_(iy1, ix), v11 = grid_(iy1, ix1);
    if (std::isnan(v00) || std::isnan(v01) || std::isnan(v10) || std::isnan(v11)) return kNaN;
    const double lo = v00 + fx * (v01 - v00);
    const double hi = v10 + fx * (v11 - v10);
    return lo + fy * (hi - lo);
}

double GridFeature::operator()(std::span<const double> mu) const {
    if (mu.size() != base_mu_.size()) throw InputError("grid feature parameter size mismatch");
    return interpolate(mu[index_[0]], mu[index_[1]]);
}

Box GridFeature::domain() const {
    Box b{base_mu_, base_mu_};
    for (int a = 0; a < 2; ++a) {
        b.lower[index_[a]] = axes_[a].front();
        b.upper[index_[a]] = axes_[a].back();
    }
    return b;
}

}  // namespace topnav
