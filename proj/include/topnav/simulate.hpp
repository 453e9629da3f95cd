#pragma once

#include <functional>
#include <span>

#include "topnav/common.hpp"
#include "topnav/systems.hpp"
#include "topnav/tda.hpp"

namespace topnav {

/// Uniformly sampled solution; one row of `states` per entry of `times`.
struct Trajectory {
    Vec times;
    Matrix states;

    std::size_t size() const noexcept { return times.size(); }
};

/// Loss gradients with respect to the states at selected trajectory samples.
struct StateGradientSeed {
    std::vector<std::size_t> sample_indices;  // strictly increasing
    Matrix gradients;                         // one row per index, state_dim columns
};

/// Classic fixed-step RK4; the step equals the sampling interval. Throws
/// DivergenceError on a non-finite state and InputError on bad dimensions.
Trajectory integrate(const SystemModel& model, std::span<const double> mu,
                     std::span<const double> x0, const SimulationConfig& cfg);

/// The last `tail_count` states in trajectory order, with their sample indices
/// recorded as the cloud's source indices.
PointCloud tail_point_cloud(const Trajectory& traj, std::size_t tail_count);

/// dL/dmu by the continuous adjoint method.
///
/// The adjoint a(t) = dL/dx(t) is integrated backward from tf with the same RK4
/// step, jumping by the seeded gradient at each observed sample. The state is
/// re-integrated backward alongside it from the stored checkpoint at every
/// sample, and a^T df/dmu is accumulated into the parameter gradient.
Vec adjoint_gradient(const SystemModel& model, const Trajectory& traj, std::span<const double> mu,
                     const StateGradientSeed& seed);

/// Central differences of a scalar map; the test oracle for adjoint_gradient.
Vec finite_difference_gradient(const std::function<double(std::span<const double>)>& fn,
                               std::span<const double> mu, double h);

}  // namespace topnav
