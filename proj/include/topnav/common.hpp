#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace topnav {

using Vec = std::vector<double>;

/// Dense row-major matrix. Rows are points or time samples throughout the library.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, empty input, bad config values.
class InputError : public Error {
public:
    using Error::Error;
};

/// A state or adjoint became non-finite during integration.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, double last_finite_time)
        : Error(what), last_finite_time_(last_finite_time) {}
    double last_finite_time() const noexcept { return last_finite_time_; }

private:
    double last_finite_time_;
};

/// A critical edge has zero length, so its length is not differentiable.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// A feature is undefined for the given diagram (e.g. entropy of no pairs).
class UndefinedFeatureError : public Error {
public:
    using Error::Error;
};

/// Closed interval. lower == upper marks a frozen parameter.
struct Bounds {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    bool frozen() const noexcept { return lower == upper; }
    double width() const noexcept { return upper - lower; }
    bool contains(double v) const noexcept { return v >= lower && v <= upper; }
    bool operator==(const Bounds&) const = default;
};

/// Axis-aligned box in parameter space.
struct Box {
    Vec lower;
    Vec upper;

    std::size_t dim() const noexcept { return lower.size(); }
    Vec center() const;
    bool contains(std::span<const double> p) const;
    /// Product of the extents over dimensions with nonzero width.
    double area() const;
    bool operator==(const Box&) const = default;
};

struct SimulationConfig {
    double t0 = 0.0;
    double tf = 1.0;
    double dt = 0.01;
    std::size_t tail_count = 2;

    /// floor((tf - t0) / dt) + 1, robust to roundoff in the ratio.
    std::size_t sample_count() const;
    /// Throws InputError unless tf > t0, dt > 0 and 2 <= tail_count <= sample_count().
    void validate() const;
    bool operator==(const SimulationConfig&) const = default;
};

double norm2(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> v);

}  // namespace topnav
