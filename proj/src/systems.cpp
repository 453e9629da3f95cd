#include "topnav/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace topnav {

std::size_t ParameterVector::index_of(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InputError("unknown parameter '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
}

std::vector<bool> ParameterVector::free_mask() const {
    std::vector<bool> mask(values.size(), true);
    for (std::size_t i = 0; i < values.size(); ++i) mask[i] = !is_frozen(i);
    return mask;
}

Box ParameterVector::box() const {
    Box b;
    b.lower.resize(values.size());
    b.upper.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        b.lower[i] = bounds[i] ? bounds[i]->lower : -std::numeric_limits<double>::infinity();
        b.upper[i] = bounds[i] ? bounds[i]->upper : std::numeric_limits<double>::infinity();
    }
    return b;
}

void ParameterVector::validate() const {
    if (values.empty()) throw InputError("parameter vector must have at least one component");
    if (names.size() != values.size() || bounds.size() != values.size()) {
        throw InputError("parameter names/bounds size mismatch");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!seen.insert(names[i]).second) throw InputError("duplicate parameter name '" + names[i] + "'");
        if (bounds[i] && !(bounds[i]->lower <= bounds[i]->upper)) {
            throw InputError("parameter '" + names[i] + "' has lower bound above upper bound");
        }
    }
}

namespace {

void check_dims(const SystemModel& model, std::span<const double> x, std::span<const double> mu) {
    if (x.size() != model.state_dim) {
        throw InputError(model.name + ": state has " + std::to_string(x.size()) +
                         " components, expected " + std::to_string(model.state_dim));
    }
    if (mu.size() != model.param_dim) {
        throw InputError(model.name + ": parameter vector has " + std::to_string(mu.size()) +
                         " components, expected " + std::to_string(model.param_dim));
    }
}

}  // namespace

SystemModel lorenz_model() {
    SystemModel m;
    m.name = "lorenz";
    m.state_dim = 3;
    m.param_dim = 3;
    m.state_names = {"x", "y", "z"};
    m.parameters.names = {"sigma", "rho", "beta"};
    m.parameters.values = {20.0, 190.0, 8.0 / 3.0};
    m.parameters.bounds = {Bounds{4.0, 50.0}, Bounds{80.0, 300.0}, Bounds{8.0 / 3.0, 8.0 / 3.0}};

    m.field = [](std::span<const double> x, double, std::span<const double> mu, std::span<double> out) {
        const double sigma = mu[0], rho = mu[1], beta = mu[2];
        out[0] = sigma * (x[1] - x[0]);
        out[1] = x[0] * (rho - x[2]) - x[1];
        out[2] = x[0] * x[1] - beta * x[2];
    };
    m.jac_state = [](std::span<const double> x, double, std::span<const double> mu, Matrix& J) {
        const double sigma = mu[0], rho = mu[1], beta = mu[2];
        J(0, 0) = -sigma;       J(0, 1) = sigma; J(0, 2) = 0.0;
        J(1, 0) = rho - x[2];   J(1, 1) = -1.0;  J(1, 2) = -x[0];
        J(2, 0) = x[1];         J(2, 1) = x[0];  J(2, 2) = -beta;
    };
    m.jac_param = [](std::span<const double> x, double, std::span<const double>, Matrix& J) {
        J(0, 0) = x[1] - x[0]; J(0, 1) = 0.0;  J(0, 2) = 0.0;
        J(1, 0) = 0.0;         J(1, 1) = x[0]; J(1, 2) = 0.0;
        J(2, 0) = 0.0;         J(2, 1) = 0.0;  J(2, 2) = -x[2];
    };
    m.default_initial_state = {1.0, 1.0, 1.0};
    m.default_sim = SimulationConfig{0.0, 10.0, 0.01, 500};
    return m;
}

SystemModel rossler_model() {
    SystemModel m;
    m.name = "rossler";
    m.state_dim = 3;
    m.param_dim = 3;
    m.state_names = {"x", "y", "z"};
    m.parameters.names = {"a", "b", "c"};
    m.parameters.values = {0.2, 0.2, 5.7};
    m.parameters.bounds = {Bounds{-0.1, 0.3}, Bounds{0.0, 0.6}, Bounds{5.7, 5.7}};

    m.field = [](std::span<const double> x, double, std::span<const double> mu, std::span<double> out) {
        const double a = mu[0], b = mu[1], c = mu[2];
        out[0] = -x[1] - x[2];
        out[1] = x[0] + a * x[1];
        out[2] = b + x[2] * (x[0] - c);
    };
    m.jac_state = [](std::span<const double> x, double, std::span<const double> mu, Matrix& J) {
        const double a = mu[0], c = mu[2];
        J(0, 0) = 0.0;  J(0, 1) = -1.0; J(0, 2) = -1.0;
        J(1, 0) = 1.0;  J(1, 1) = a;    J(1, 2) = 0.0;
        J(2, 0) = x[2]; J(2, 1) = 0.0;  J(2, 2) = x[0] - c;
    };
    m.jac_param = [](std::span<const double> x, double, std::span<const double>, Matrix& J) {
        J(0, 0) = 0.0;  J(0, 1) = 0.0; J(0, 2) = 0.0;
        J(1, 0) = x[1]; J(1, 1) = 0.0; J(1, 2) = 0.0;
        J(2, 0) = 0.0;  J(2, 1) = 1.0; J(2, 2) = -x[2];
    };
    m.default_initial_state = {-0.4, 0.6, 1.0};
    m.default_sim = SimulationConfig{0.0, 200.0, 0.04, 500};
    return m;
}

namespace {

constexpr double kPi = std::numbers::pi;
// Angle of the base magnet's dipole and the clamp tolerance for the arcsin argument.
constexpr double kBaseDipoleAngle = 3.0 * kPi / 2.0;
constexpr double kArcsinClamp = 1e-12;

// Pendulum geometry and torque together with their theta-derivatives. The chain
// rule below was derived symbolically and is checked against finite differences
// in the unit tests.
struct PendulumDerivs {
    PendulumTerms v;
    double dtau_m = 0.0;  // d tau_m / d theta
};

PendulumDerivs pendulum_with_derivs(const MagneticPendulumParams& p, double theta, double theta_dot) {
    PendulumDerivs out;
    const double l = p.l, d = p.d;
    const double r2 = l * l + (d + l) * (d + l) - 2.0 * l * (l + d) * std::cos(theta);
    const double r = std::sqrt(std::max(r2, 0.0));
    const double dr = l * (l + d) * std::sin(theta) / r;

    double s = l * std::sin(theta) / r;
    double ds = l * std::cos(theta) / r - l * std::sin(theta) * dr / (r * r);
    // |l sin(theta) / r| <= 1 geometrically; roundoff can push it just past 1.
    s = std::clamp(s, -1.0, 1.0);
    const double phi = kPi / 2.0 - std::asin(s);
    const double root = std::sqrt(std::max(1.0 - s * s, kArcsinClamp));
    const double dphi = -ds / root;

    const double a = kBaseDipoleAngle;
    const double b = kPi / 2.0 - theta;  // db/dtheta = -1

    const double C = 3.0 * p.mu_0 * p.m_dipole * p.m_dipole / (4.0 * kPi);
    const double K = C / (r2 * r2);
    const double dK = -4.0 * C * dr / (r2 * r2 * r);

    const double u = phi - a, du = dphi;
    const double w = phi - b, dw = dphi + 1.0;
    const double G = 2.0 * std::cos(u) * std::cos(w) - std::sin(u) * std::sin(w);
    const double dG = (-2.0 * std::sin(u) * std::cos(w) - std::cos(u) * std::sin(w)) * du +
                      (-2.0 * std::cos(u) * std::sin(w) - std::sin(u) * std::cos(w)) * dw;
    const double F_r = K * G;
    const double dF_r = dK * G + K * dG;

    const double z = 2.0 * phi - a - b, dz = 2.0 * dphi + 1.0;
    const double F_phi = K * std::sin(z);
    const double dF_phi = dK * std::sin(z) + K * std::cos(z) * dz;

    const double q = phi - theta, dq = dphi - 1.0;
    const double tau_m = l * (F_r * std::cos(q) - F_phi * std::sin(q));
    const double dtau_m = l * (dF_r * std::cos(q) - F_r * std::sin(q) * dq - dF_phi * std::sin(q) -
                               F_phi * std::cos(q) * dq);

    out.v = PendulumTerms{r, phi, F_r, F_phi, tau_m, p.mu_v * theta_dot};
    out.dtau_m = dtau_m;
    return out;
}

}  // namespace

PendulumTerms pendulum_terms(const MagneticPendulumParams& p, double theta, double theta_dot) {
    return pendulum_with_derivs(p, theta, theta_dot).v;
}

SystemModel magnetic_pendulum_model(const MagneticPendulumParams& k) {
    SystemModel m;
    m.name = "magnetic_pendulum";
    m.state_dim = 2;
    m.param_dim = 2;
    m.nonautonomous = true;
    m.state_names = {"theta", "theta_dot"};
    m.parameters.names = {"A_cm", "omega"};
    m.parameters.values = {4.0, 7.5};
    m.parameters.bounds = {Bounds{0.5, 6.0}, Bounds{5.0, 10.0}};

    const double inertia = k.M * k.r_cm * k.r_cm + k.I_cm;
    constexpr double kCm = 0.01;

    m.field = [k, inertia](std::span<const double> x, double t, std::span<const double> mu,
                           std::span<double> out) {
        const double theta = x[0], theta_dot = x[1];
        const double A = mu[0] * kCm, omega = mu[1];
        const PendulumTerms pt = pendulum_terms(k, theta, theta_dot);
        const double base_acc = -A * omega * omega * std::sin(omega * t);
        out[0] = theta_dot;
        out[1] = (-pt.tau_v - pt.tau_m - k.M * k.r_cm * base_acc * std::cos(theta) -
                  k.M * k.g * k.r_cm * std::sin(theta)) /
                 inertia;
    };
    m.jac_state = [k, inertia](std::span<const double> x, double t, std::span<const double> mu,
                               Matrix& J) {
        const double theta = x[0], theta_dot = x[1];
        const double A = mu[0] * kCm, omega = mu[1];
        const PendulumDerivs pd = pendulum_with_derivs(k, theta, theta_dot);
        const double base_acc = -A * omega * omega * std::sin(omega * t);
        J(0, 0) = 0.0;
        J(0, 1) = 1.0;
        J(1, 0) = (-pd.dtau_m + k.M * k.r_cm * base_acc * std::sin(theta) -
                   k.M * k.g * k.r_cm * std::cos(theta)) /
                  inertia;
        J(1, 1) = -k.mu_v / inertia;
    };
    m.jac_param = [k, inertia](std::span<const double> x, double t, std::span<const double> mu,
                               Matrix& J) {
        const double theta = x[0];
        const double A = mu[0] * kCm, omega = mu[1];
        const double c = k.M * k.r_cm * std::cos(theta) / inertia;
        const double s = std::sin(omega * t);
        J(0, 0) = 0.0;
        J(0, 1) = 0.0;
        // -M r_cm x''_base cos(theta) with x''_base = -A omega^2 sin(omega t)
        J(1, 0) = c * kCm * omega * omega * s;
        J(1, 1) = c * A * (2.0 * omega * s + omega * omega * t * std::cos(omega * t));
    };
    m.default_initial_state = {0.0, 0.0};
    m.default_sim = SimulationConfig{0.0, 100.0, 0.03, 500};
    return m;
}

std::vector<std::string> model_names() { return {"lorenz", "rossler", "magnetic_pendulum"}; }

SystemModel make_model(const std::string& name) {
    if (name == "lorenz") return lorenz_model();
    if (name == "rossler") return rossler_model();
    if (name == "magnetic_pendulum") return magnetic_pendulum_model();
    throw InputError("unknown model '" + name + "'");
}

Vec eval_field(const SystemModel& model, std::span<const double> x, double t,
               std::span<const double> mu) {
    check_dims(model, x, mu);
    Vec out(model.state_dim);
    model.field(x, t, mu, out);
    return out;
}

Matrix eval_jac_state(const SystemModel& model, std::span<const double> x, double t,
                      std::span<const double> mu) {
    check_dims(model, x, mu);
    Matrix J(model.state_dim, model.state_dim);
    model.jac_state(x, t, mu, J);
    return J;
}

Matrix eval_jac_param(const SystemModel& model, std::span<const double> x, double t,
                      std::span<const double> mu) {
    check_dims(model, x, mu);
    Matrix J(model.state_dim, model.param_dim);
    model.jac_param(x, t, mu, J);
    return J;
}

}  // namespace topnav
