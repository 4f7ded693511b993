#include "lossysync/dynamics.hpp"

#include "lossysync/error.hpp"
#include "lossysync/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>

namespace lossysync {

namespace {

void check_dimension(const DerivedModel& model, const Vector& delta) {
    if (static_cast<std::size_t>(delta.size()) != model.node_count) {
        throw DimensionError(
            fmt::format("state has {} phases, model has {} nodes", delta.size(), model.node_count));
    }
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

double wrap_angle(double x) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::remainder(x, two_pi);  // [-pi, pi]
    if (r <= -std::numbers::pi) r += two_pi;
    return r;
}

Vector edge_differences(const DerivedModel& model, const Vector& delta) {
    check_dimension(model, delta);
    Vector out(static_cast<Eigen::Index>(model.edge_count()));
    for (std::size_t z = 0; z < model.edge_count(); ++z) {
        const auto [i, j] = model.edges[z];
        out[static_cast<Eigen::Index>(z)] = wrap_angle(delta[static_cast<Eigen::Index>(i)] - delta[static_cast<Eigen::Index>(j)]);
    }
    return out;
}

double max_edge_difference(const DerivedModel& model, const Vector& delta) {
    const Vector d = edge_differences(model, delta);
    return d.size() == 0 ? 0.0 : d.cwiseAbs().maxCoeff();
}

void rhs_into(const DerivedModel& model, const Vector& delta, Vector& out) {
    check_dimension(model, delta);
    const auto n = static_cast<Eigen::Index>(model.node_count);
    out.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = model.natural_frequency[static_cast<std::size_t>(i)];
    for (std::size_t z = 0; z < model.edge_count(); ++z) {
        const auto i = static_cast<Eigen::Index>(model.edges[z].first);
        const auto j = static_cast<Eigen::Index>(model.edges[z].second);
        const double d = wrap_angle(delta[i] - delta[j]);
        const double s = std::sin(d);
        const double c = std::cos(d);
        // delta_ji = -delta_ij: the sine term is antisymmetric, the cosine term is not.
        out[i] -= model.b[z] * s - model.a[z] * c;
        out[j] -= -model.b[z] * s - model.a[z] * c;
    }
    for (Eigen::Index i = 0; i < n; ++i) out[i] *= model.gain[static_cast<std::size_t>(i)];
}

Vector rhs(const DerivedModel& model, const Vector& delta) {
    Vector out;
    rhs_into(model, delta, out);
    return out;
}

Vector rhs_sine_form(const DerivedModel& model, const Vector& delta) {
    check_dimension(model, delta);
    const auto n = static_cast<Eigen::Index>(model.node_count);
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = model.natural_frequency[static_cast<std::size_t>(i)];
    for (std::size_t z = 0; z < model.edge_count(); ++z) {
        const auto i = static_cast<Eigen::Index>(model.edges[z].first);
        const auto j = static_cast<Eigen::Index>(model.edges[z].second);
        const double d = wrap_angle(delta[i] - delta[j]);
        const double weight = std::hypot(model.a[z], model.b[z]);
        out[i] -= weight * std::sin(d - model.psi[z]);
        out[j] -= weight * std::sin(-d - model.psi[z]);
    }
    for (Eigen::Index i = 0; i < n; ++i) out[i] *= model.gain[static_cast<std::size_t>(i)];
    return out;
}

double active_power(const DerivedModel& model, const NetworkSpec& spec, const Vector& delta, std::size_t i) {
    check_dimension(model, delta);
    if (i >= model.node_count) throw ValidationError(fmt::format("node index {} out of range", i));
    double p = spec.load[i];
    for (const Line& line : spec.lines) {
        std::size_t other = 0;
        if (line.from == i) {
            other = line.to;
        } else if (line.to == i) {
            other = line.from;
        } else {
            continue;
        }
        const double vi = spec.voltage[i];
        const double vj = spec.voltage[other];
        const double d = wrap_angle(delta[static_cast<Eigen::Index>(i)] - delta[static_cast<Eigen::Index>(other)]);
        p += line.conductance * vi * vi - line.conductance * vi * vj * std::cos(d) +
             line.susceptance * vi * vj * std::sin(d);
    }
    return p;
}

Trajectory integrate(const DerivedModel& model, const PhaseState& initial, const IntegrationOptions& options) {
    check_dimension(model, initial.delta);
    if (!(options.dt > 0.0)) throw ValidationError("integrate: dt must be positive");
    if (!(options.t_max >= options.dt)) throw ValidationError("integrate: t_max must be at least dt");
    if (options.decimation == 0) throw ValidationError("integrate: decimation must be at least 1");
    if (!all_finite(initial.delta)) throw ValidationError("integrate: initial state is not finite");

    const double dt = options.dt;
    const auto steps = static_cast<std::size_t>(std::ceil(options.t_max / dt - 1e-9));

    Trajectory traj;
    traj.dt = dt;
    traj.decimation = options.decimation;

    Vector y = initial.delta;
    Vector k1, k2, k3, k4, tmp;
    rhs_into(model, y, k1);
    traj.samples.push_back({initial.time, y, k1});
    if (options.stop && options.stop(traj.samples.back())) return traj;

    for (std::size_t step = 1; step <= steps; ++step) {
        tmp = y + 0.5 * dt * k1;
        rhs_into(model, tmp, k2);
        tmp = y + 0.5 * dt * k2;
        rhs_into(model, tmp, k3);
        tmp = y + dt * k3;
        rhs_into(model, tmp, k4);
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        const double t = initial.time + static_cast<double>(step) * dt;
        if (!all_finite(y)) {
            Sample last = traj.samples.back();
            throw IntegrationDiverged(fmt::format("integration diverged at t = {:.6g} s", t), std::move(last));
        }
        rhs_into(model, y, k1);
        if (!all_finite(k1)) {
            throw IntegrationDiverged(fmt::format("vector field not finite at t = {:.6g} s", t), traj.samples.back());
        }

        if (step % options.decimation == 0 || step == steps) {
            traj.samples.push_back({t, y, k1});
            if (options.stop && options.stop(traj.samples.back())) break;
        }
    }
    return traj;
}

Vector random_initial_phases(const DerivedModel& model, std::uint64_t seed, double fraction) {
    const double half_width = 0.5 * fraction * model.gamma_bound();
    Rng rng(seed);
    Vector delta(static_cast<Eigen::Index>(model.node_count));
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta[i] = rng.uniform(-half_width, half_width);
    return delta;
}

std::optional<double> detect_synchronization(const Trajectory& traj, double tol) {
    const std::size_t count = traj.samples.size();
    if (count == 0) return std::nullopt;
    const std::size_t window = std::max<std::size_t>(1, count / 10);

    double lowest = std::numeric_limits<double>::infinity();
    double highest = -std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t k = count - window; k < count; ++k) {
        const Vector& f = traj.samples[k].ddelta;
        const double mean = f.mean();
        if ((f.array() - mean).abs().maxCoeff() >= tol) return std::nullopt;
        lowest = std::min(lowest, mean);
        highest = std::max(highest, mean);
        total += mean;
    }
    if (highest - lowest >= tol) return std::nullopt;
    return total / static_cast<double>(window);
}

}  // namespace lossysync
