#pragma once

// Pipelines behind the command-line tool. Each run_* validates the whole
// configuration and loads the network before creating the output directory.

#include "lossysync/dynamics.hpp"
#include "lossysync/equilibrium.hpp"
#include "lossysync/manifold.hpp"
#include "lossysync/network.hpp"
#include "lossysync/stability.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace lossysync {

struct ExperimentConfig {
    std::optional<std::filesystem::path> network_file;
    std::size_t nodes = 10;
    std::size_t edges = 15;
    ParameterRanges ranges;
    /// Required when the network is generated; also seeds initial phases,
    /// multi-start guesses and probe perturbations.
    std::optional<std::uint64_t> seed;

    double dt = 1e-3;
    double t_max = 20.0;
    std::size_t decimation = 10;
    double sync_tol = 1e-6;

    double tol = 1e-10;
    int max_iter = 100;
    std::size_t starts = 20;
    double uniqueness_tol = 1e-8;

    std::size_t probes = 100;
    double perturbation = 0.05;
    double probe_t_max = 50.0;

    std::optional<double> lambda_critical;
    std::filesystem::path output_dir = "out";
    std::size_t jobs = 1;

    /// Throws ConfigError on any invalid setting or missing file.
    void validate() const;
};

/// Reads the JSON experiment document. Relative network paths resolve
/// against the config file's directory.
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

[[nodiscard]] NetworkSpec load_network(const ExperimentConfig& config);

struct SimulationOutcome {
    NetworkSpec spec;
    Trajectory trajectory;
    std::optional<double> sync_frequency;
    double final_residual = 0.0;
    double final_max_edge_difference = 0.0;
};

struct AnalysisOutcome {
    NetworkSpec spec;
    EquilibriumResult equilibrium;
    UniquenessResult uniqueness;
    JacobianReport jacobian;
    LaplacianCheck laplacian;
    StabilityVerdict verdict;
};

struct ProbeOutcome {
    AnalysisOutcome analysis;
    std::vector<ManifoldProbe> probes;
    std::size_t converged = 0;
    double offset_spread = 0.0;  // max offset - min offset over converged probes
};

/// Every pipeline writes network.json.
/// Writes trajectory.csv, sync.txt, phases.svg, freq.svg. IntegrationDiverged propagates.
SimulationOutcome run_simulate(const ExperimentConfig& config);

/// Writes stability.txt. Throws Inconclusive (after writing an inconclusive
/// report) when no equilibrium is found inside the synchronization set.
AnalysisOutcome run_analyze(const ExperimentConfig& config);

/// Writes stability.txt, probes.csv and probe_summary.txt. Throws
/// Inconclusive when the equilibrium does not meet the synchronization condition.
ProbeOutcome run_probe(const ExperimentConfig& config);

struct ReportOutcome {
    SimulationOutcome simulation;
    ProbeOutcome probe;
};

/// All three pipelines plus summary.txt.
ReportOutcome run_report(const ExperimentConfig& config);

}  // namespace lossysync
