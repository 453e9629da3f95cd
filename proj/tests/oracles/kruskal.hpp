#pragma once

// Test-only oracle: minimum spanning tree edge lengths by Kruskal's algorithm
// over all pairs, with its own disjoint-set forest.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "topnav/tda.hpp"

namespace oracle {

inline std::vector<double> mst_edge_lengths(const topnav::PointCloud& cloud) {
    const std::size_t n = cloud.size();
    struct E {
        double w;
        std::size_t a, b;
    };
    std::vector<E> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < cloud.dim(); ++c) {
                const double d = cloud.points(i, c) - cloud.points(j, c);
                s += d * d;
            }
            edges.push_back({std::sqrt(s), i, j});
        }
    }
    std::sort(edges.begin(), edges.end(), [](const E& x, const E& y) { return x.w < y.w; });
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto root = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x];
        return x;
    };
    std::vector<double> out;
    for (const auto& e : edges) {
        const auto ra = root(e.a), rb = root(e.b);
        if (ra != rb) {
            parent[ra] = rb;
            out.push_back(e.w);
        }
    }
    return out;
}

}  // namespace oracle
