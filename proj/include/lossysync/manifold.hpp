#pragma once

#include "lossysync/dynamics.hpp"
#include "lossysync/network.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lossysync {

/// min over c of ||delta - delta_star - c 1||_2, i.e. the norm of the
/// component of (delta - delta_star) orthogonal to 1_N.
[[nodiscard]] double distance_to_manifold(const Vector& delta, const Vector& delta_star);

/// Best-fit offset along the manifold: mean(delta - delta_star).
[[nodiscard]] double manifold_offset(const Vector& delta, const Vector& delta_star);

struct ManifoldProbe {
    std::size_t index = 0;
    double perturbation_norm = 0.0;
    bool converged = false;
    bool diverged = false;
    std::string failure;  // set when diverged
    Vector limit_point;
    double offset = 0.0;
    double distance = 0.0;
    double residual = 0.0;  // ||rhs(limit_point)||_inf
    double final_time = 0.0;
};

struct ProbeOptions {
    std::size_t n_probes = 100;
    double perturbation_norm = 0.05;
    std::uint64_t seed = 0;
    double t_max = 50.0;
    double dt = 1e-3;
    double distance_tol = 1e-6;
    double residual_tol = 1e-6;
    /// Convergence thresholds are checked every this many steps.
    std::size_t check_every = 50;
    std::size_t jobs = 1;
};

/// Uniform direction on the sphere of radius `norm` in R^N.
[[nodiscard]] Vector sphere_perturbation(std::size_t n, double norm, std::uint64_t seed);

/// Integrates from delta_star + perturbation for each probe, stopping early
/// once both the distance to the manifold and the frequency residual are
/// below tolerance. Requires delta_star to be an equilibrium inside the
/// synchronization set (ValidationError otherwise). Divergence is recorded
/// per probe.
[[nodiscard]] std::vector<ManifoldProbe> probe_convergence(const DerivedModel& model, const Vector& delta_star,
                                                           const ProbeOptions& options);

}  // namespace lossysync
