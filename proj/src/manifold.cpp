#include "lossysync/manifold.hpp"

#include "lossysync/error.hpp"
#include "lossysync/parallel.hpp"
#include "lossysync/random.hpp"
#include "lossysync/stability.hpp"

#include <fmt/format.h>

#include <cmath>

namespace lossysync {

namespace {

void check_same_size(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw DimensionError("manifold: state dimensions differ");
}

}  // namespace

double distance_to_manifold(const Vector& delta, const Vector& delta_star) {
    check_same_size(delta, delta_star);
    const Vector diff = delta - delta_star;
    return (diff.array() - diff.mean()).matrix().norm();
}

double manifold_offset(const Vector& delta, const Vector& delta_star) {
    check_same_size(delta, delta_star);
    return (delta - delta_star).mean();
}

Vector sphere_perturbation(std::size_t n, double norm, std::uint64_t seed) {
    Rng rng(seed);
    Vector v(static_cast<Eigen::Index>(n));
    do {
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
    } while (v.norm() == 0.0);
    return norm * v / v.norm();
}

std::vector<ManifoldProbe> probe_convergence(const DerivedModel& model, const Vector& delta_star,
                                             const ProbeOptions& options) {
    if (static_cast<std::size_t>(delta_star.size()) != model.node_count) {
        throw DimensionError("probe_convergence: equilibrium dimension does not match the model");
    }
    const double residual = rhs(model, delta_star).cwiseAbs().maxCoeff();
    if (!(residual < options.residual_tol)) {
        throw ValidationError(fmt::format("probe_convergence: reference point is not an equilibrium (residual {:.3e})", residual));
    }
    if (!sync_condition_met(max_edge_difference(model, delta_star), model.psi_max)) {
        throw ValidationError("probe_convergence: equilibrium lies outside the synchronization set");
    }
    if (options.check_every == 0) throw ValidationError("probe_convergence: check_every must be positive");

    std::vector<ManifoldProbe> probes(options.n_probes);
    parallel_for(options.n_probes, options.jobs, [&](std::size_t k) {
        ManifoldProbe& p = probes[k];
        p.index = k;
        p.perturbation_norm = options.perturbation_norm;

        PhaseState start;
        start.delta = delta_star + sphere_perturbation(model.node_count, options.perturbation_norm,
                                                       Rng::substream(options.seed, k));
        IntegrationOptions integ;
        integ.t_max = options.t_max;
        integ.dt = options.dt;
        integ.decimation = options.check_every;
        integ.stop = [&](const Sample& s) {
            return distance_to_manifold(s.delta, delta_star) < options.distance_tol &&
                   s.ddelta.cwiseAbs().maxCoeff() < options.residual_tol;
        };
        try {
            const Trajectory traj = integrate(model, start, integ);
            const Sample& last = traj.back();
            p.limit_point = last.delta;
            p.final_time = last.time;
            p.residual = last.ddelta.cwiseAbs().maxCoeff();
        } catch (const IntegrationDiverged& e) {
            p.diverged = true;
            p.failure = e.what();
            p.limit_point = e.last_good().delta;
            p.final_time = e.last_good().time;
            p.residual = e.last_good().ddelta.cwiseAbs().maxCoeff();
        }
        p.distance = distance_to_manifold(p.limit_point, delta_star);
        p.offset = manifold_offset(p.limit_point, delta_star);
        p.converged = !p.diverged && p.distance < options.distance_tol && p.residual < options.residual_tol;
    });
    return probes;
}

}  // namespace lossysync
