#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "oracles/kruskal.hpp"
#include "oracles/naive_persistence.hpp"
#include "test_support.hpp"
#include "topnav/tda.hpp"

using namespace topnav;
using testing_support::make_cloud;
using testing_support::random_cloud;

namespace {

std::vector<oracle::Interval> intervals(const PersistenceDiagram& d) {
    std::vector<oracle::Interval> out;
    for (const auto& p : d.pairs) out.push_back({p.dim, p.birth, p.death});
    std::sort(out.begin(), out.end());
    return out;
}

bool same_intervals(const std::vector<oracle::Interval>& a, const std::vector<oracle::Interval>& b,
                    double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].dim != b[k].dim) return false;
        if (std::abs(a[k].birth - b[k].birth) > tol) return false;
        if (std::isinf(a[k].death) != std::isinf(b[k].death)) return false;
        if (!std::isinf(a[k].death) && std::abs(a[k].death - b[k].death) > tol) return false;
    }
    return true;
}

PointCloud unit_square() { return make_cloud({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }

using PairKey = std::tuple<int, std::optional<Edge>, std::optional<Edge>>;

std::map<PairKey, std::size_t> index_by_edges(const PersistenceDiagram& d) {
    std::map<PairKey, std::size_t> out;
    for (std::size_t k = 0; k < d.pairs.size(); ++k) {
        out[{d.pairs[k].dim, d.pairs[k].birth_edge, d.pairs[k].death_edge}] = k;
    }
    return out;
}

}  // namespace

TEST_CASE("unit square has one loop born at 1 dying at sqrt 2") {
    const auto d = rips_persistence(unit_square());
    int h0_finite = 0, h0_essential = 0, h1 = 0;
    for (const auto& p : d.pairs) {
        if (p.dim == 0 && p.essential()) ++h0_essential;
        if (p.dim == 0 && !p.essential()) {
            ++h0_finite;
            CHECK(p.death == doctest::Approx(1.0).epsilon(1e-14));
        }
        if (p.dim == 1) {
            ++h1;
            CHECK(p.birth == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(p.death == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
            REQUIRE(p.death_edge);
            CHECK(*p.death_edge == Edge{0, 2});
        }
    }
    CHECK(h0_finite == 3);
    CHECK(h0_essential == 1);
    CHECK(h1 == 1);
}

TEST_CASE("collinear points have no loops") {
    const auto d = rips_persistence(make_cloud({{0, 0}, {1, 0}, {2.5, 0}}));
    CHECK(d.lifetimes(1).empty());
    CHECK(d.finite_indices(0).size() == 2);
}

TEST_CASE("single point and empty cloud") {
    const auto d = rips_persistence(make_cloud({{3.0, 4.0}}));
    REQUIRE(d.pairs.size() == 1);
    CHECK(d.pairs[0].essential());
    PointCloud empty;
    empty.points = Matrix(0, 2);
    CHECK_THROWS_AS(rips_persistence(empty), InputError);
}

TEST_CASE("coincident points are tolerated by persistence") {
    const auto d = rips_persistence(make_cloud({{0, 0}, {0, 0}, {1, 0}, {0, 1}}));
    for (const auto& p : d.pairs) CHECK(p.birth <= p.death);
}

TEST_CASE("diagram matches naive boundary reduction on small random clouds") {
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> size(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        const auto cloud = random_cloud(rng, static_cast<std::size_t>(size(rng)), 2);
        const auto fast = intervals(rips_persistence(cloud));
        const auto slow = oracle::naive_rips_persistence(cloud);
        INFO("trial " << trial);
        CHECK(same_intervals(fast, slow, 1e-12));
    }
}

TEST_CASE("naive oracle agrees on symmetric configurations") {
    for (const auto& cloud : {unit_square(), make_cloud({{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1}, {0, 1}}),
                              make_cloud({{0, 0}, {1, 0}, {0.5, 0.8660254037844386}})}) {
        CHECK(same_intervals(intervals(rips_persistence(cloud)), oracle::naive_rips_persistence(cloud), 1e-12));
    }
}

TEST_CASE("H0 deaths are the minimum spanning tree edge lengths") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> size(2, 50);
    for (int trial = 0; trial < 100; ++trial) {
        const auto cloud = random_cloud(rng, static_cast<std::size_t>(size(rng)), 3);
        const auto d = rips_persistence(cloud, 0);
        auto deaths = Vec{};
        for (auto k : d.finite_indices(0)) deaths.push_back(d.pairs[k].death);
        auto mst = oracle::mst_edge_lengths(cloud);
        std::sort(deaths.begin(), deaths.end());
        std::sort(mst.begin(), mst.end());
        REQUIRE(deaths.size() == mst.size());
        for (std::size_t k = 0; k < mst.size(); ++k) CHECK(std::abs(deaths[k] - mst[k]) <= 1e-12);
    }
}

TEST_CASE("critical edges reproduce births and deaths") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const auto cloud = random_cloud(rng, 40, 2);
        const auto d = rips_persistence(cloud);
        double diameter = 0.0;
        for (std::uint32_t i = 0; i < cloud.size(); ++i)
            for (std::uint32_t j = i + 1; j < cloud.size(); ++j)
                diameter = std::max(diameter, edge_length(cloud, Edge{i, j}));
        int essential = 0;
        for (const auto& p : d.pairs) {
            CHECK(p.birth <= p.death);
            if (p.dim == 0 && p.essential()) ++essential;
            if (p.dim == 1) {
                REQUIRE_FALSE(p.essential());
                REQUIRE(p.birth_edge);
                REQUIRE(p.death_edge);
                CHECK(testing_support::rel_err(p.birth, edge_length(cloud, *p.birth_edge)) < 1e-12);
                CHECK(testing_support::rel_err(p.death, edge_length(cloud, *p.death_edge)) < 1e-12);
                CHECK(p.death <= diameter);
            }
        }
        CHECK(essential == 1);
    }
}

TEST_CASE("translation leaves the diagram unchanged") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto cloud = random_cloud(rng, 30, 3);
        const auto before = rips_persistence(cloud);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            cloud.points(i, 0) += 3.5;
            cloud.points(i, 1) -= 1.25;
            cloud.points(i, 2) += 0.75;
        }
        const auto after = rips_persistence(cloud);
        REQUIRE(before.pairs.size() == after.pairs.size());
        for (std::size_t k = 0; k < before.pairs.size(); ++k) {
            CHECK(std::abs(before.pairs[k].birth - after.pairs[k].birth) <= 1e-12);
            if (!before.pairs[k].essential()) {
                CHECK(std::abs(before.pairs[k].death - after.pairs[k].death) <= 1e-12);
            }
        }
    }
}

TEST_CASE("small perturbations move matched pairs by at most twice the perturbation") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 1.0);
    for (double eps : {1e-3, 1e-2}) {
        for (int trial = 0; trial < 20; ++trial) {
            const auto cloud = random_cloud(rng, 25, 2);
            auto moved = cloud;
            for (std::size_t i = 0; i < cloud.size(); ++i) {
                const double a = g(rng), b = g(rng);
                const double s = eps * std::uniform_real_distribution<double>(0.0, 1.0)(rng) / std::hypot(a, b);
                moved.points(i, 0) += a * s;
                moved.points(i, 1) += b * s;
            }
            const auto d0 = rips_persistence(cloud);
            const auto d1 = rips_persistence(moved);
            const auto idx = index_by_edges(d1);
            for (const auto& p : d0.pairs) {
                auto it = idx.find({p.dim, p.birth_edge, p.death_edge});
                if (it == idx.end()) continue;
                const auto& q = d1.pairs[it->second];
                CHECK(std::abs(p.birth - q.birth) <= 2.0 * eps);
                if (!p.essential()) CHECK(std::abs(p.death - q.death) <= 2.0 * eps);
            }
        }
    }
}

TEST_CASE("general position report") {
    const auto dup = check_general_position(make_cloud({{0, 0}, {0, 0}, {1, 0.3}}), 1e-9);
    CHECK(dup.coincident.size() == 1);
    const auto sq = check_general_position(unit_square(), 1e-9);
    CHECK(sq.coincident.empty());
    CHECK_FALSE(sq.equidistant.empty());
    std::mt19937_64 rng(5);
    CHECK(check_general_position(random_cloud(rng, 20, 2), 1e-12).clean());
}

TEST_CASE("death gradient of the unit square points along the diagonal") {
    const auto cloud = unit_square();
    const auto d = rips_persistence(cloud);
    const auto grad = diagram_gradient(cloud, d);
    const auto h1 = d.finite_indices(1);
    REQUIRE(h1.size() == 1);
    const auto& death = grad.pairs[h1[0]].death;
    REQUIRE(death);
    // d|p2 - p0| / dp2 with p2 = (1, 1)
    CHECK(death->edge == Edge{0, 2});
    CHECK(death->direction[0] == doctest::Approx(-1.0 / std::sqrt(2.0)));
    Matrix seeds(d.size(), 2);
    seeds(h1[0], 1) = 1.0;
    const Matrix pg = pullback(grad, seeds);
    CHECK(pg(2, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(pg(2, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(pg(0, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(pg(1, 0) == 0.0);
    CHECK(pg(3, 1) == 0.0);
}

TEST_CASE("gradients are translation invariant") {
    std::mt19937_64 rng(17);
    const auto cloud = random_cloud(rng, 20, 2);
    const auto d = rips_persistence(cloud);
    const auto grad = diagram_gradient(cloud, d);
    Matrix seeds(d.size(), 2, 1.0);
    const Matrix pg = pullback(grad, seeds);
    for (std::size_t c = 0; c < 2; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < pg.rows; ++i) s += pg(i, c);
        CHECK(std::abs(s) < 1e-12);
    }
}

TEST_CASE("directional derivatives match finite differences") {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> g(0.0, 1.0);
    const double h = 1e-6;
    int checked = 0;
    while (checked < 50) {
        const auto cloud = random_cloud(rng, 10, 2);
        if (!check_general_position(cloud, 1e-4).clean()) continue;
        Matrix u(cloud.size(), 2);
        for (double& v : u.data) v = g(rng);
        auto shifted = [&](double s) {
            auto c = cloud;
            for (std::size_t k = 0; k < c.points.data.size(); ++k) c.points.data[k] += s * u.data[k];
            return c;
        };
        const auto d0 = rips_persistence(cloud);
        const auto dp = rips_persistence(shifted(h));
        const auto dm = rips_persistence(shifted(-h));
        const auto ip = index_by_edges(dp), im = index_by_edges(dm);
        const auto grad = diagram_gradient(cloud, d0);
        for (std::size_t k = 0; k < d0.size(); ++k) {
            const auto& p = d0.pairs[k];
            if (p.essential()) continue;
            const PairKey key{p.dim, p.birth_edge, p.death_edge};
            REQUIRE(ip.count(key));
            REQUIRE(im.count(key));
            auto directional = [&](const std::optional<EdgeGradient>& eg) {
                if (!eg) return 0.0;
                double s = 0.0;
                for (std::size_t c = 0; c < 2; ++c) {
                    s += eg->direction[c] * (u(eg->edge.i, c) - u(eg->edge.j, c));
                }
                return s;
            };
            const double fd_birth = (dp.pairs[ip.at(key)].birth - dm.pairs[im.at(key)].birth) / (2 * h);
            const double fd_death = (dp.pairs[ip.at(key)].death - dm.pairs[im.at(key)].death) / (2 * h);
            CHECK(testing_support::rel_err(directional(grad.pairs[k].birth), fd_birth, 1e-8) < 1e-4);
            CHECK(testing_support::rel_err(directional(grad.pairs[k].death), fd_death, 1e-8) < 1e-4);
        }
        ++checked;
    }
}

TEST_CASE("zero-length critical edge is a singularity") {
    PersistenceDiagram d;
    d.pairs.push_back({1, 0.0, 1.0, Edge{0, 1}, Edge{1, 2}});
    const auto cloud = make_cloud({{0, 0}, {0, 0}, {1, 1}});
    CHECK_THROWS_AS(diagram_gradient(cloud, d), SingularityError);
}

TEST_CASE("pullback checks shapes and sparsity") {
    const auto cloud = unit_square();
    const auto d = rips_persistence(cloud);
    const auto grad = diagram_gradient(cloud, d);
    CHECK_THROWS_AS(pullback(grad, Matrix(d.size() + 1, 2)), InputError);
    const Matrix zero = pullback(grad, Matrix(d.size(), 2));
    for (double v : zero.data) CHECK(v == 0.0);
}
