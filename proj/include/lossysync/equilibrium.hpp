#pragma once

#include "lossysync/dynamics.hpp"
#include "lossysync/error.hpp"
#include "lossysync/network.hpp"

#include <cstdint>
#include <vector>

namespace lossysync {

struct EquilibriumResult {
    Vector delta_star;  // gauge: delta_star[0] == 0, components wrapped into (-pi, pi]
    double residual_norm = 0.0;
    int iterations = 0;
    Vector edge_differences;
};

struct SolverOptions {
    double tol = 1e-10;  // rad/s, on ||rhs||_inf
    int max_iter = 100;
    int max_halvings = 30;
};

/// Newton iteration did not reach tolerance; carries the best iterate.
class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, EquilibriumResult best) : Error(what), best_(std::move(best)) {}
    [[nodiscard]] const EquilibriumResult& best() const { return best_; }

private:
    EquilibriumResult best_;
};

/// Reduced Jacobian numerically singular: the iterate is close to a saddle-node.
class NearBifurcation : public Error {
public:
    using Error::Error;
};

/// No equilibrium inside the synchronization set was found.
class Inconclusive : public Error {
public:
    using Error::Error;
};

/// Damped Newton on rhs(delta) = 0 with delta_1 pinned to zero. The reduced
/// Jacobian is -diag(gain) L~ with the first row and column removed; steps
/// are halved until the reduced residual decreases.
[[nodiscard]] EquilibriumResult solve(const DerivedModel& model, const Vector& guess,
                                      const SolverOptions& options = {});

struct UniquenessOptions {
    std::size_t n_starts = 20;
    std::uint64_t seed = 0;
    double tol = 1e-8;  // rad, pairwise agreement of edge-difference vectors
    SolverOptions solver;
    std::size_t jobs = 1;
};

struct UniquenessResult {
    bool unique = false;
    std::size_t attempted = 0;
    std::size_t retained = 0;
    double max_pairwise_deviation = 0.0;
    /// Representatives of the distinct edge-difference vectors (clustered at tol).
    std::vector<Vector> witnesses;
    /// Retained solutions, ordered by start index.
    std::vector<EquilibriumResult> solutions;
};

/// Multi-start Newton from random guesses with ||B^T guess||_inf below
/// pi/2 - psi_max; keeps solutions inside that set. Throws Inconclusive when
/// none is retained.
[[nodiscard]] UniquenessResult check_uniqueness(const DerivedModel& model, const UniquenessOptions& options);

}  // namespace lossysync
