#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles/polynomial_fields.hpp"
#include "topnav/systems.hpp"

using namespace topnav;

namespace {

// Central differences of the field, column by column.
Matrix fd_jac_state(const SystemModel& m, const Vec& x, double t, const Vec& mu, double h) {
    Matrix J(m.state_dim, m.state_dim);
    for (std::size_t j = 0; j < m.state_dim; ++j) {
        Vec up = x, down = x;
        up[j] += h;
        down[j] -= h;
        const Vec fu = eval_field(m, up, t, mu), fd = eval_field(m, down, t, mu);
        for (std::size_t i = 0; i < m.state_dim; ++i) J(i, j) = (fu[i] - fd[i]) / (2.0 * h);
    }
    return J;
}

Matrix fd_jac_param(const SystemModel& m, const Vec& x, double t, const Vec& mu, double h) {
    Matrix J(m.state_dim, m.param_dim);
    for (std::size_t j = 0; j < m.param_dim; ++j) {
        Vec up = mu, down = mu;
        up[j] += h;
        down[j] -= h;
        const Vec fu = eval_field(m, x, t, up), fd = eval_field(m, x, t, down);
        for (std::size_t i = 0; i < m.state_dim; ++i) J(i, j) = (fu[i] - fd[i]) / (2.0 * h);
    }
    return J;
}

// Largest entry difference relative to the largest entry.
double matrix_rel_err(const Matrix& a, const Matrix& b) {
    double diff = 0.0, scale = 1e-12;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        diff = std::max(diff, std::abs(a.data[k] - b.data[k]));
        scale = std::max({scale, std::abs(a.data[k]), std::abs(b.data[k])});
    }
    return diff / scale;
}

// Random state and parameters; parameters inside the default box, or near the
// default value when a component is unbounded or frozen.
void random_point(const SystemModel& m, std::mt19937_64& rng, Vec& x, double& t, Vec& mu) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    x.assign(m.state_dim, 0.0);
    for (std::size_t i = 0; i < m.state_dim; ++i) {
        x[i] = m.name == "magnetic_pendulum" ? (i == 0 ? -3.0 + 6.0 * u(rng) : -8.0 + 16.0 * u(rng))
                                             : -20.0 + 40.0 * u(rng);
    }
    t = 10.0 * u(rng);
    mu = m.parameters.values;
    for (std::size_t j = 0; j < m.param_dim; ++j) {
        const auto& b = m.parameters.bounds[j];
        if (b && !b->frozen()) mu[j] = b->lower + (b->upper - b->lower) * u(rng);
    }
}

}  // namespace

TEST_CASE("lorenz field examples") {
    const auto m = lorenz_model();
    const Vec f = eval_field(m, Vec{1, 1, 1}, 0.0, Vec{10, 28, 8.0 / 3.0});
    CHECK(f[0] == doctest::Approx(0.0));
    CHECK(f[1] == doctest::Approx(26.0));
    CHECK(f[2] == doctest::Approx(-5.0 / 3.0));
    const Vec z = eval_field(m, Vec{0, 0, 0}, 0.0, Vec{13, 200, 2});
    CHECK(z == Vec{0, 0, 0});
    const Matrix Jp = eval_jac_param(m, Vec{1, 2, 3}, 0.0, Vec{10, 28, 8.0 / 3.0});
    CHECK(Jp(0, 0) == 1.0);
    CHECK(Jp(1, 0) == 0.0);
    CHECK(Jp(2, 0) == 0.0);
}

TEST_CASE("rossler field examples") {
    const auto m = rossler_model();
    const Vec f = eval_field(m, Vec{0, 0, 0}, 0.0, Vec{0.1, 0.2, 5.7});
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 0.0);
    CHECK(f[2] == doctest::Approx(0.2));
    const Matrix Js = eval_jac_state(m, Vec{0.3, -1.0, 2.0}, 0.0, Vec{0.1, 0.2, 5.7});
    CHECK(Js(1, 0) == 1.0);
    CHECK(Js(1, 1) == doctest::Approx(0.1));
    CHECK(Js(1, 2) == 0.0);
    const Matrix Jp = eval_jac_param(m, Vec{0.3, -1.0, 2.0}, 0.0, Vec{0.1, 0.2, 5.7});
    CHECK(Jp(0, 1) == 0.0);
    CHECK(Jp(1, 1) == 0.0);
    CHECK(Jp(2, 1) == 1.0);
}

TEST_CASE("rossler defaults") {
    const auto m = rossler_model();
    CHECK(m.default_initial_state == Vec{-0.4, 0.6, 1.0});
    CHECK(m.default_sim.dt == 0.04);
    CHECK(m.default_sim.tf == 200.0);
    CHECK(m.default_sim.tail_count == 500);
    CHECK(m.parameters.is_frozen(m.parameters.index_of("c")));
    CHECK(!m.parameters.is_frozen(m.parameters.index_of("a")));
}

TEST_CASE("polynomial fields match an independent evaluation") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-30.0, 30.0), p(0.1, 40.0);
    const auto lor = lorenz_model();
    const auto ros = rossler_model();
    for (int trial = 0; trial < 200; ++trial) {
        const std::array<double, 3> s{u(rng), u(rng), u(rng)};
        const Vec mu{p(rng), p(rng), p(rng)};
        const Vec x(s.begin(), s.end());
        const auto want_l = oracle::lorenz(s, mu[0], mu[1], mu[2]);
        const auto want_r = oracle::rossler(s, mu[0], mu[1], mu[2]);
        const Vec got_l = eval_field(lor, x, 0.0, mu);
        const Vec got_r = eval_field(ros, x, 0.0, mu);
        for (int i = 0; i < 3; ++i) {
            CHECK(got_l[i] == want_l[i]);
            CHECK(got_r[i] == want_r[i]);
        }
    }
}

TEST_CASE("jacobians agree with central differences") {
    std::mt19937_64 rng(5);
    for (const auto& name : model_names()) {
        CAPTURE(name);
        const auto m = make_model(name);
        double worst_x = 0.0, worst_p = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            Vec x, mu;
            double t = 0.0;
            random_point(m, rng, x, t, mu);
            worst_x = std::max(worst_x, matrix_rel_err(eval_jac_state(m, x, t, mu), fd_jac_state(m, x, t, mu, 1e-6)));
            worst_p = std::max(worst_p, matrix_rel_err(eval_jac_param(m, x, t, mu), fd_jac_param(m, x, t, mu, 1e-6)));
        }
        CHECK(worst_x < 1e-6);
        CHECK(worst_p < 1e-6);
    }
}

TEST_CASE("pendulum geometry and damping") {
    const MagneticPendulumParams p;
    CHECK(pendulum_terms(p, 0.0, 0.0).r == doctest::Approx(p.d).epsilon(1e-12));
    CHECK(pendulum_terms(p, 0.0, 1.0).tau_v == doctest::Approx(0.003));
    for (int k = -500; k <= 500; ++k) {
        const double theta = std::numbers::pi * k / 500.0;
        CHECK(pendulum_terms(p, theta, 0.0).r >= p.d - 1e-15);
    }
}

TEST_CASE("pendulum at rest has no gravity torque") {
    const auto m = magnetic_pendulum_model();
    CHECK(m.nonautonomous);
    CHECK(m.state_dim == 2);
    // at theta = 0 the magnet pulls straight along the arm, and sin(omega * 0) = 0
    const Vec f = eval_field(m, Vec{0.0, 0.0}, 0.0, Vec{4.0, 7.5});
    CHECK(f[0] == 0.0);
    CHECK(std::abs(f[1]) < 1e-9);
}

TEST_CASE("dimension mismatches are input errors") {
    const auto m = lorenz_model();
    CHECK_THROWS_AS(eval_field(m, Vec{1, 1}, 0.0, Vec{10, 28, 8.0 / 3.0}), InputError);
    CHECK_THROWS_AS(eval_field(m, Vec{1, 1, 1}, 0.0, Vec{10, 28}), InputError);
    CHECK_THROWS_AS(eval_jac_state(m, Vec{1, 1, 1, 1}, 0.0, Vec{10, 28, 8.0 / 3.0}), InputError);
    CHECK_THROWS_AS(make_model("duffing"), InputError);
}

TEST_CASE("parameter vector validation") {
    auto params = lorenz_model().parameters;
    CHECK_NOTHROW(params.validate());
    CHECK(params.free_mask() == std::vector<bool>{true, true, false});
    auto dup = params;
    dup.names[1] = dup.names[0];
    CHECK_THROWS_AS(dup.validate(), InputError);
    auto inverted = params;
    inverted.bounds[0] = Bounds{5.0, 1.0};
    CHECK_THROWS_AS(inverted.validate(), InputError);
    CHECK_THROWS_AS(params.index_of("gamma"), InputError);
}
