#include "lossysync/equilibrium.hpp"

#include "lossysync/parallel.hpp"
#include "lossysync/random.hpp"
#include "lossysync/stability.hpp"

#include <fmt/format.h>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <optional>

namespace lossysync {

namespace {

EquilibriumResult finalize(const DerivedModel& model, Vector delta, int iterations) {
    const double pin = delta[0];
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta[i] = wrap_angle(delta[i] - pin);
    delta[0] = 0.0;
    EquilibriumResult out;
    out.residual_norm = rhs(model, delta).cwiseAbs().maxCoeff();
    out.edge_differences = edge_differences(model, delta);
    out.delta_star = std::move(delta);
    out.iterations = iterations;
    return out;
}

Matrix reduced_jacobian(const DerivedModel& model, const Vector& delta) {
    const auto n = static_cast<Eigen::Index>(model.node_count);
    Matrix j = laplacian_split_form(model, delta).total();
    for (Eigen::Index i = 0; i < n; ++i) j.row(i) *= -model.gain[static_cast<std::size_t>(i)];
    return j.bottomRightCorner(n - 1, n - 1);
}

}  // namespace

EquilibriumResult solve(const DerivedModel& model, const Vector& guess, const SolverOptions& options) {
    if (!(options.tol > 0.0)) throw ValidationError("solve: tol must be positive");
    if (options.max_iter < 0) throw ValidationError("solve: max_iter must be non-negative");
    if (static_cast<std::size_t>(guess.size()) != model.node_count) {
        throw DimensionError(fmt::format("guess has {} phases, model has {} nodes", guess.size(), model.node_count));
    }
    const auto n = static_cast<Eigen::Index>(model.node_count);

    double coupling_scale = 0.0;
    for (std::size_t z = 0; z < model.edge_count(); ++z) {
        const double w = std::hypot(model.a[z], model.b[z]);
        coupling_scale = std::max({coupling_scale, w * model.gain[model.edges[z].first], w * model.gain[model.edges[z].second]});
    }

    Vector x = guess.array() - guess[0];
    x[0] = 0.0;
    Vector f = rhs(model, x);

    for (int iter = 0;; ++iter) {
        const double full_norm = f.cwiseAbs().maxCoeff();
        if (full_norm < options.tol) return finalize(model, x, iter);

        const double reduced_norm = f.tail(n - 1).cwiseAbs().maxCoeff();
        if (reduced_norm < 1e-2 * options.tol) {
            throw NoConvergence(
                fmt::format("reduced system solved but the pinned node keeps a residual of {:.3e} rad/s; "
                            "no zero-frequency equilibrium (power imbalance)",
                            full_norm),
                finalize(model, x, iter));
        }
        if (iter >= options.max_iter) {
            throw NoConvergence(fmt::format("Newton did not converge in {} iterations (residual {:.3e})",
                                            options.max_iter, full_norm),
                                finalize(model, x, iter));
        }

        const Matrix jr = reduced_jacobian(model, x);
        const Eigen::PartialPivLU<Matrix> lu(jr);
        // rcond is scale free; 1 / ||J^-1|| is compared against the coupling scale.
        const double rcond = lu.rcond();
        const double inverse_norm_recip = rcond * jr.cwiseAbs().colwise().sum().maxCoeff();
        if (!(rcond > 1e-13) || !(inverse_norm_recip > 1e-13 * coupling_scale)) {
            throw NearBifurcation(fmt::format("reduced Jacobian is singular (rcond {:.3e}) at iteration {}", rcond, iter));
        }
        const Vector step = lu.solve(-f.tail(n - 1));

        const double current = f.norm();
        double scale = 1.0;
        bool accepted = false;
        for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
            Vector trial = x;
            trial.tail(n - 1) += scale * step;
            Vector f_trial = rhs(model, trial);
            if (f_trial.norm() < current) {
                x = std::move(trial);
                f = std::move(f_trial);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            throw NoConvergence(fmt::format("line search failed at iteration {} (residual {:.3e})", iter, full_norm),
                                finalize(model, x, iter));
        }
    }
}

UniquenessResult check_uniqueness(const DerivedModel& model, const UniquenessOptions& options) {
    if (options.n_starts < 2) throw ValidationError("check_uniqueness: need at least 2 starts");
    const double bound = model.gamma_bound();
    const auto n = static_cast<Eigen::Index>(model.node_count);

    std::vector<std::optional<EquilibriumResult>> attempts(options.n_starts);
    parallel_for(options.n_starts, options.jobs, [&](std::size_t k) {
        Rng rng(Rng::substream(options.seed, k));
        Vector guess(n);
        for (Eigen::Index i = 0; i < n; ++i) guess[i] = rng.uniform(-0.5 * bound, 0.5 * bound);
        try {
            EquilibriumResult r = solve(model, guess, options.solver);
            if (r.residual_norm < options.solver.tol && max_edge_difference(model, r.delta_star) < bound) {
                attempts[k] = std::move(r);
            }
        } catch (const NoConvergence&) {
        } catch (const NearBifurcation&) {
        }
    });

    UniquenessResult out;
    out.attempted = options.n_starts;
    for (auto& a : attempts) {
        if (a) out.solutions.push_back(std::move(*a));
    }
    out.retained = out.solutions.size();
    if (out.retained == 0) {
        throw Inconclusive(fmt::format("none of {} starts produced an equilibrium with ||B^T delta||_inf < {:.6f}",
                                       options.n_starts, bound));
    }

    auto distance = [](const Vector& p, const Vector& q) {
        double worst = 0.0;
        for (Eigen::Index z = 0; z < p.size(); ++z) worst = std::max(worst, std::abs(wrap_angle(p[z] - q[z])));
        return worst;
    };
    for (std::size_t i = 0; i < out.solutions.size(); ++i) {
        for (std::size_t j = i + 1; j < out.solutions.size(); ++j) {
            out.max_pairwise_deviation = std::max(
                out.max_pairwise_deviation, distance(out.solutions[i].edge_differences, out.solutions[j].edge_differences));
        }
        const bool known = std::any_of(out.witnesses.begin(), out.witnesses.end(), [&](const Vector& w) {
            return distance(w, out.solutions[i].edge_differences) < options.tol;
        });
        if (!known) out.witnesses.push_back(out.solutions[i].edge_differences);
    }
    out.unique = out.max_pairwise_deviation < options.tol;
    return out;
}

}  // namespace lossysync
