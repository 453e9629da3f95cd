#include "topnav/common.hpp"

#include <cmath>

namespace topnav {

Vec Box::center() const {
    Vec c(lower.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
    return c;
}

bool Box::contains(std::span<const double> p) const {
    if (p.size() != lower.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < lower[i] || p[i] > upper[i]) return false;
    }
    return true;
}

double Box::area() const {
    double a = 1.0;
    bool any = false;
    for (std::size_t i = 0; i < lower.size(); ++i) {
        const double w = upper[i] - lower[i];
        if (w > 0.0) {
            a *= w;
            any = true;
        }
    }
    return any ? a : 0.0;
}

std::size_t SimulationConfig::sample_count() const {
    if (!(dt > 0.0) || tf < t0) return 0;
    const double steps = (tf - t0) / dt;
    return static_cast<std::size_t>(std::floor(steps + 1e-9)) + 1;
}

void SimulationConfig::validate() const {
    if (!std::isfinite(t0) || !std::isfinite(tf) || !(tf > t0)) {
        throw InputError("simulation span must satisfy tf > t0");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("simulation dt must be positive");
    if (tail_count < 2) throw InputError("tail_count must be at least 2");
    if (tail_count > sample_count()) {
        throw InputError("tail_count " + std::to_string(tail_count) + " exceeds sample count " +
                         std::to_string(sample_count()));
    }
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace topnav
