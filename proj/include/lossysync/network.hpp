#pragma once

// =============================================================================
// Oscillator coupling network: static parameters and derived coupling model
// =============================================================================
// Units: angles rad, time s, power pu, admittance S. `gain` is the multiplier
// applied to the power mismatch in the phase dynamics, i.e. rad/s per pu.
// =============================================================================

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace lossysync {

/// 2*pi: converts a droop gain quoted in Hz/pu into rad/s per pu.
inline constexpr double kHzToRadPerSecond = 6.283185307179586476925286766559;

struct Line {
    std::size_t from = 0;  // source node (0-based)
    std::size_t to = 0;    // sink node (0-based)
    double conductance = 0.0;
    double susceptance = 0.0;
};

struct NetworkSpec {
    std::size_t node_count = 0;
    std::vector<Line> lines;
    std::vector<double> voltage;
    std::vector<double> power_setpoint;
    std::vector<double> load;
    std::vector<double> gain;

    [[nodiscard]] std::size_t edge_count() const { return lines.size(); }

    /// Throws ValidationError / StructuralError / DimensionError on any violated invariant.
    void validate() const;
};

/// Connectivity test over undirected adjacency (BFS from node 0).
[[nodiscard]] bool is_connected(std::size_t node_count,
                                const std::vector<std::pair<std::size_t, std::size_t>>& edges);

struct DerivedModel {
    std::size_t node_count = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // (source, sink)
    std::vector<double> a;    // V_i V_j G_ij
    std::vector<double> b;    // V_i V_j B_ij
    std::vector<double> psi;  // arctan(a/b)
    std::vector<double> natural_frequency;
    std::vector<double> gain;
    double psi_max = 0.0;
    Eigen::MatrixXd incidence;
    Eigen::MatrixXd abs_incidence;

    [[nodiscard]] std::size_t edge_count() const { return edges.size(); }
    /// pi/2 - psi_max: supremum of admissible gamma for the synchronization set.
    [[nodiscard]] double gamma_bound() const;
};

[[nodiscard]] DerivedModel derive(const NetworkSpec& spec);

[[nodiscard]] double psi_max(const DerivedModel& model);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Sampling ranges for random instances. Defaults follow the 10-node,
/// 15-line benchmark: gains 0.1 Hz/pu, doubled at nodes 5 and 8, tripled at
/// node 10 (1-based). No gain is given for node 9; it gets the base value.
struct ParameterRanges {
    Interval voltage{0.9, 1.0};
    Interval conductance{0.3, 0.9};
    Interval susceptance{1.2, 2.9};
    Interval load_conductance{0.02, 0.05};
    double base_gain_hz = 0.1;
    std::vector<std::pair<std::size_t, double>> gain_multipliers{{5, 2.0}, {8, 2.0}, {10, 3.0}};
    /// Per-node gains in rad/s per pu; replaces the base/multiplier pattern when set.
    std::optional<std::vector<double>> gains;
    /// Setpoints are chosen so that a reference operating point with node
    /// angles drawn from uni(-spread, spread) rad is an equilibrium.
    double operating_angle_spread = 0.1;
};

/// Seeded random instance: random spanning tree over a permuted node order,
/// then (e - n + 1) distinct random chords. Same arguments give a bit-identical spec.
[[nodiscard]] NetworkSpec generate_random(std::size_t n, std::size_t e, const ParameterRanges& ranges,
                                          std::uint64_t seed);

/// Angles of the reference operating point used by generate_random for the
/// same (n, ranges, seed); exposed for tests.
[[nodiscard]] std::vector<double> reference_operating_angles(std::size_t n, std::size_t e,
                                                             const ParameterRanges& ranges,
                                                             std::uint64_t seed);

/// Gains for an n-node network following the ranges' pattern, in rad/s per pu.
[[nodiscard]] std::vector<double> pattern_gains(std::size_t n, const ParameterRanges& ranges);

}  // namespace lossysync
