#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "topnav/common.hpp"

namespace topnav {

/// Named parameter values with optional per-component box limits.
struct ParameterVector {
    Vec values;
    std::vector<std::string> names;
    std::vector<std::optional<Bounds>> bounds;

    std::size_t size() const noexcept { return values.size(); }
    /// Index of a named parameter; throws InputError when absent.
    std::size_t index_of(const std::string& name) const;
    bool is_frozen(std::size_t i) const { return bounds[i] && bounds[i]->frozen(); }
    /// Mask with true for components that may move.
    std::vector<bool> free_mask() const;
    /// Box over all components; unbounded components get +-inf, frozen ones zero width.
    Box box() const;
    /// Throws InputError on empty, duplicate names, mismatched sizes or inverted bounds.
    void validate() const;
};

/// Parameterized vector field x' = f(x, t, mu) with analytic partial derivatives.
///
/// Callbacks write into caller-provided storage so the integrators never allocate
/// per step. jac_state fills an n x n matrix, jac_param an n x D matrix.
struct SystemModel {
    using Field = std::function<void(std::span<const double> x, double t,
                                     std::span<const double> mu, std::span<double> out)>;
    using Jacobian = std::function<void(std::span<const double> x, double t,
                                        std::span<const double> mu, Matrix& out)>;

    std::string name;
    std::size_t state_dim = 0;
    std::size_t param_dim = 0;
    std::vector<std::string> state_names;
    ParameterVector parameters;
    Field field;
    Jacobian jac_state;
    Jacobian jac_param;
    Vec default_initial_state;
    SimulationConfig default_sim;
    bool nonautonomous = false;
};

/// Physical constants of the base-excited magnetic pendulum, SI units.
struct MagneticPendulumParams {
    double M = 0.1038;        // total mass, kg
    double l = 0.208;         // pendulum length, m
    double g = 9.81;          // m/s^2
    double r_cm = 0.18775;    // hinge to centre of mass, m
    double I_cm = 1.919e-5;   // kg m^2
    double mu_v = 0.003;      // viscous damping coefficient
    double m_dipole = 1.2;    // A m^2
    double mu_0 = 1.257e-6;   // N / A^2
    double d = 0.032;         // minimum magnet separation, m
};

/// Intermediate geometry and torques of the pendulum at one state.
struct PendulumTerms {
    double r = 0.0;
    double phi = 0.0;
    double F_r = 0.0;
    double F_phi = 0.0;
    double tau_m = 0.0;
    double tau_v = 0.0;
};

PendulumTerms pendulum_terms(const MagneticPendulumParams& p, double theta, double theta_dot);

/// Lorenz system, parameters (sigma, rho, beta); beta frozen at 8/3.
SystemModel lorenz_model();
/// Rossler system, parameters (a, b, c); c frozen at 5.7.
SystemModel rossler_model();
/// Base-excited magnetic pendulum, state (theta, theta_dot), parameters (A_cm, omega).
/// A_cm is the base amplitude in centimetres.
SystemModel magnetic_pendulum_model(const MagneticPendulumParams& constants = {});

/// Lookup by name: "lorenz", "rossler", "magnetic_pendulum".
SystemModel make_model(const std::string& name);
std::vector<std::string> model_names();

Vec eval_field(const SystemModel& model, std::span<const double> x, double t,
               std::span<const double> mu);
Matrix eval_jac_state(const SystemModel& model, std::span<const double> x, double t,
                      std::span<const double> mu);
Matrix eval_jac_param(const SystemModel& model, std::span<const double> x, double t,
                      std::span<const double> mu);

}  // namespace topnav
