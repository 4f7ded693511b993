#pragma once

#include "lossysync/error.hpp"
#include "lossysync/network.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lossysync {

using Vector = Eigen::VectorXd;

/// Phases are stored unwrapped; differences are wrapped only where used.
struct PhaseState {
    Vector delta;
    double time = 0.0;
};

/// Maps an angle into (-pi, pi].
[[nodiscard]] double wrap_angle(double x);

/// Wrapped edge differences delta_source - delta_sink, i.e. B^T delta on the torus.
[[nodiscard]] Vector edge_differences(const DerivedModel& model, const Vector& delta);

/// max_z |(B^T delta)_z| with wrapped differences.
[[nodiscard]] double max_edge_difference(const DerivedModel& model, const Vector& delta);

/// Vector field of the lossy phase dynamics, cosine/sine coupling form.
[[nodiscard]] Vector rhs(const DerivedModel& model, const Vector& delta);
void rhs_into(const DerivedModel& model, const Vector& delta, Vector& out);

/// Same vector field written as sqrt(a^2+b^2) sin(delta_ij - psi_ij).
[[nodiscard]] Vector rhs_sine_form(const DerivedModel& model, const Vector& delta);

/// Active power injected at node i (0-based); at any state
/// gain_i * (P_set_i - P_i) equals rhs component i.
[[nodiscard]] double active_power(const DerivedModel& model, const NetworkSpec& spec, const Vector& delta,
                                  std::size_t i);

struct Sample {
    double time = 0.0;
    Vector delta;
    Vector ddelta;
};

struct Trajectory {
    std::vector<Sample> samples;
    double dt = 0.0;
    std::string method = "rk4";
    std::size_t decimation = 1;

    [[nodiscard]] const Sample& back() const { return samples.back(); }
};

struct IntegrationOptions {
    double t_max = 20.0;
    double dt = 1e-3;
    /// Keep every k-th step (the initial and final states are always kept).
    std::size_t decimation = 1;
    /// Evaluated on each retained sample; returning true ends the run early.
    std::function<bool(const Sample&)> stop;
};

class IntegrationDiverged : public Error {
public:
    IntegrationDiverged(const std::string& what, Sample last_good)
        : Error(what), last_good_(std::move(last_good)) {}
    [[nodiscard]] const Sample& last_good() const { return last_good_; }

private:
    Sample last_good_;
};

/// Classical fixed-step RK4. The step count is ceil(t_max/dt), so the final
/// time lies in [t_max, t_max + dt).
[[nodiscard]] Trajectory integrate(const DerivedModel& model, const PhaseState& initial,
                                   const IntegrationOptions& options);

/// Default initial phases: node angles uniform in (-r/2, r/2) with
/// r = fraction * (pi/2 - psi_max), so every edge difference is below r.
[[nodiscard]] Vector random_initial_phases(const DerivedModel& model, std::uint64_t seed, double fraction = 0.9);

/// Common frequency over the trailing 10% of samples, if all oscillators
/// agree within tol there and that common value is constant within tol.
[[nodiscard]] std::optional<double> detect_synchronization(const Trajectory& traj, double tol = 1e-6);

}  // namespace lossysync
