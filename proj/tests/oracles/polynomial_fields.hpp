#pragma once

#include <array>

// Hand-written right-hand sides, kept apart from the library models.
namespace oracle {

inline std::array<double, 3> lorenz(const std::array<double, 3>& s, double sigma, double rho, double beta) {
    const auto [x, y, z] = s;
    return {sigma * (y - x), x * (rho - z) - y, x * y - beta * z};
}

inline std::array<double, 3> rossler(const std::array<double, 3>& s, double a, double b, double c) {
    const auto [x, y, z] = s;
    return {-y - z, x + a * y, b + z * (x - c)};
}

}  // namespace oracle
