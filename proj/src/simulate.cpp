#include "topnav/simulate.hpp"

#include <cmath>
#include <string>

namespace topnav {

namespace {

struct Rk4Workspace {
    Vec k1, k2, k3, k4, tmp;
    explicit Rk4Workspace(std::size_t n) : k1(n), k2(n), k3(n), k4(n), tmp(n) {}
};

void rk4_step(const SystemModel& model, std::span<const double> mu, double t, double h,
              std::span<const double> x, std::span<double> out, Rk4Workspace& w) {
    const std::size_t n = x.size();
    model.field(x, t, mu, w.k1);
    for (std::size_t i = 0; i < n; ++i) w.tmp[i] = x[i] + 0.5 * h * w.k1[i];
    model.field(w.tmp, t + 0.5 * h, mu, w.k2);
    for (std::size_t i = 0; i < n; ++i) w.tmp[i] = x[i] + 0.5 * h * w.k2[i];
    model.field(w.tmp, t + 0.5 * h, mu, w.k3);
    for (std::size_t i = 0; i < n; ++i) w.tmp[i] = x[i] + h * w.k3[i];
    model.field(w.tmp, t + h, mu, w.k4);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x[i] + h / 6.0 * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
    }
}

void check_model_dims(const SystemModel& model, std::span<const double> mu, std::size_t state_size) {
    if (mu.size() != model.param_dim) {
        throw InputError(model.name + ": expected " + std::to_string(model.param_dim) + " parameters, got " +
                         std::to_string(mu.size()));
    }
    if (state_size != model.state_dim) {
        throw InputError(model.name + ": expected state dimension " + std::to_string(model.state_dim) +
                         ", got " + std::to_string(state_size));
    }
}

// Augmented backward system z = (x, a, g) with
//   x' = f,  a' = -(df/dx)^T a,  g' = -(df/dmu)^T a.
// Integrating from t_i to t_{i-1} accumulates g += int a^T df/dmu dt.
class AdjointSystem {
public:
    AdjointSystem(const SystemModel& model, std::span<const double> mu)
        : model_(model), mu_(mu), n_(model.state_dim), d_(model.param_dim), Jx_(n_, n_), Jmu_(n_, d_) {}

    std::size_t size() const { return 2 * n_ + d_; }

    void derivative(double t, std::span<const double> z, std::span<double> dz) {
        auto x = z.subspan(0, n_);
        auto a = z.subspan(n_, n_);
        model_.field(x, t, mu_, dz.subspan(0, n_));
        model_.jac_state(x, t, mu_, Jx_);
        model_.jac_param(x, t, mu_, Jmu_);
        for (std::size_t j = 0; j < n_; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n_; ++i) s += a[i] * Jx_(i, j);
            dz[n_ + j] = -s;
        }
        for (std::size_t j = 0; j < d_; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n_; ++i) s += a[i] * Jmu_(i, j);
            dz[2 * n_ + j] = -s;
        }
    }

    void step(double t, double h, std::span<double> z) {
        const std::size_t m = size();
        k1_.resize(m); k2_.resize(m); k3_.resize(m); k4_.resize(m); tmp_.resize(m);
        derivative(t, z, k1_);
        for (std::size_t i = 0; i < m; ++i) tmp_[i] = z[i] + 0.5 * h * k1_[i];
        derivative(t + 0.5 * h, tmp_, k2_);
        for (std::size_t i = 0; i < m; ++i) tmp_[i] = z[i] + 0.5 * h * k2_[i];
        derivative(t + 0.5 * h, tmp_, k3_);
        for (std::size_t i = 0; i < m; ++i) tmp_[i] = z[i] + h * k3_[i];
        derivative(t + h, tmp_, k4_);
        for (std::size_t i = 0; i < m; ++i) z[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }

private:
    const SystemModel& model_;
    std::span<const double> mu_;
    std::size_t n_, d_;
    Matrix Jx_, Jmu_;
    Vec k1_, k2_, k3_, k4_, tmp_;
};

}  // namespace

Trajectory integrate(const SystemModel& model, std::span<const double> mu, std::span<const double> x0,
                     const SimulationConfig& cfg) {
    check_model_dims(model, mu, x0.size());
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw InputError("integrate: dt must be positive");
    if (!(cfg.tf >= cfg.t0)) throw InputError("integrate: tf must not precede t0");
    if (!all_finite(x0)) throw InputError("integrate: initial state is not finite");

    const std::size_t n = model.state_dim;
    const std::size_t samples = cfg.sample_count();
    Trajectory traj;
    traj.times.resize(samples);
    traj.states = Matrix(samples, n);
    for (std::size_t i = 0; i < samples; ++i) traj.times[i] = cfg.t0 + static_cast<double>(i) * cfg.dt;
    std::copy(x0.begin(), x0.end(), traj.states.row(0).begin());

    Rk4Workspace w(n);
    for (std::size_t i = 1; i < samples; ++i) {
        rk4_step(model, mu, traj.times[i - 1], cfg.dt, traj.states.row(i - 1), traj.states.row(i), w);
        if (!all_finite(traj.states.row(i))) {
            throw DivergenceError(model.name + ": state became non-finite after t = " +
                                      std::to_string(traj.times[i - 1]),
                                  traj.times[i - 1]);
        }
    }
    return traj;
}

PointCloud tail_point_cloud(const Trajectory& traj, std::size_t tail_count) {
    const std::size_t total = traj.size();
    if (tail_count == 0 || tail_count > total) {
        throw InputError("tail_point_cloud: tail_count " + std::to_string(tail_count) +
                         " not in [1, " + std::to_string(total) + "]");
    }
    const std::size_t n = traj.states.cols;
    const std::size_t first = total - tail_count;
    PointCloud cloud;
    cloud.points = Matrix(tail_count, n);
    cloud.source_indices.resize(tail_count);
    for (std::size_t i = 0; i < tail_count; ++i) {
        auto src = traj.states.row(first + i);
        std::copy(src.begin(), src.end(), cloud.points.row(i).begin());
        cloud.source_indices[i] = first + i;
    }
    return cloud;
}

Vec adjoint_gradient(const SystemModel& model, const Trajectory& traj, std::span<const double> mu,
                     const StateGradientSeed& seed) {
    const std::size_t n = model.state_dim;
    const std::size_t d = model.param_dim;
    check_model_dims(model, mu, traj.states.cols);
    if (traj.size() == 0) throw InputError("adjoint_gradient: empty trajectory");
    if (seed.gradients.rows != seed.sample_indices.size() ||
        (seed.gradients.rows > 0 && seed.gradients.cols != n)) {
        throw InputError("adjoint_gradient: seed shape does not match state dimension");
    }
    for (std::size_t k = 0; k < seed.sample_indices.size(); ++k) {
        if (seed.sample_indices[k] >= traj.size()) throw InputError("adjoint_gradient: seed index out of range");
        if (k > 0 && seed.sample_indices[k] <= seed.sample_indices[k - 1]) {
            throw InputError("adjoint_gradient: seed indices must be strictly increasing");
        }
    }

    AdjointSystem system(model, mu);
    Vec z(system.size(), 0.0);
    auto a = std::span<double>(z).subspan(n, n);
    auto g = std::span<const double>(z).subspan(2 * n, d);

    // Seeds are consumed from the back.
    std::ptrdiff_t next_seed = static_cast<std::ptrdiff_t>(seed.sample_indices.size()) - 1;
    auto apply_jump = [&](std::size_t sample) {
        while (next_seed >= 0 && seed.sample_indices[static_cast<std::size_t>(next_seed)] == sample) {
            auto row = seed.gradients.row(static_cast<std::size_t>(next_seed));
            for (std::size_t i = 0; i < n; ++i) a[i] += row[i];
            --next_seed;
        }
    };

    std::size_t i = traj.size() - 1;
    apply_jump(i);
    while (i > 0) {
        auto checkpoint = traj.states.row(i);
        std::copy(checkpoint.begin(), checkpoint.end(), z.begin());
        const double h = traj.times[i - 1] - traj.times[i];
        system.step(traj.times[i], h, z);
        if (!all_finite(z)) {
            throw DivergenceError(model.name + ": adjoint became non-finite near t = " +
                                      std::to_string(traj.times[i]),
                                  traj.times[i]);
        }
        --i;
        apply_jump(i);
    }
    return Vec(g.begin(), g.end());
}

Vec finite_difference_gradient(const std::function<double(std::span<const double>)>& fn,
                               std::span<const double> mu, double h) {
    if (!(h > 0.0)) throw InputError("finite_difference_gradient: h must be positive");
    Vec grad(mu.size());
    Vec probe(mu.begin(), mu.end());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        probe[i] = mu[i] + h;
        const double up = fn(probe);
        probe[i] = mu[i] - h;
        const double down = fn(probe);
        probe[i] = mu[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace topnav
