// lossysync: simulate, analyze and probe lossy phase-oscillator networks.
//
// Exit status: 0 success, 1 unexpected error, 2 configuration error,
// 3 integration diverged, 4 inconclusive (no admissible equilibrium).

#include "lossysync/error.hpp"
#include "lossysync/experiment.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <optional>
#include <string>

namespace {

enum ExitCode : int { kOk = 0, kUnexpected = 1, kConfig = 2, kDiverged = 3, kInconclusive = 4 };

struct Overrides {
    std::optional<std::string> config;
    std::optional<std::string> network;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> nodes;
    std::optional<std::size_t> edges;
    std::optional<double> dt;
    std::optional<double> t_max;
    std::optional<std::size_t> decimation;
    std::optional<double> tol;
    std::optional<std::size_t> starts;
    std::optional<std::size_t> probes;
    std::optional<double> perturbation;
    std::optional<double> probe_t_max;
    std::optional<double> lambda_critical;
    std::optional<std::string> out;
    std::optional<std::size_t> jobs;
};

void add_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "Experiment config (JSON)");
    cmd->add_option("--network", o.network, "Network file (JSON); overrides the generator");
    cmd->add_option("--seed", o.seed, "Seed for generation, initial phases, multi-start and probes");
    cmd->add_option("--n", o.nodes, "Generated network: node count");
    cmd->add_option("--edges", o.edges, "Generated network: line count");
    cmd->add_option("--dt", o.dt, "RK4 step [s]");
    cmd->add_option("--tmax", o.t_max, "Simulation horizon [s]");
    cmd->add_option("--decimation", o.decimation, "Keep every k-th step in trajectory.csv");
    cmd->add_option("--tol", o.tol, "Newton residual tolerance [rad/s]");
    cmd->add_option("--starts", o.starts, "Multi-start count for the uniqueness check");
    cmd->add_option("--probes", o.probes, "Number of manifold probes");
    cmd->add_option("--perturbation", o.perturbation, "Probe perturbation 2-norm [rad]");
    cmd->add_option("--probe-tmax", o.probe_t_max, "Probe horizon [s]");
    cmd->add_option("--lambda-critical", o.lambda_critical, "External lambda_2 threshold for comparison");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--jobs", o.jobs, "Worker threads for multi-start and probes");
}

lossysync::ExperimentConfig build_config(const Overrides& o) {
    lossysync::ExperimentConfig c = o.config ? lossysync::load_config(*o.config) : lossysync::ExperimentConfig{};
    if (o.network) c.network_file = *o.network;
    if (o.seed) c.seed = *o.seed;
    if (o.nodes) c.nodes = *o.nodes;
    if (o.edges) c.edges = *o.edges;
    if (o.dt) c.dt = *o.dt;
    if (o.t_max) c.t_max = *o.t_max;
    if (o.decimation) c.decimation = *o.decimation;
    if (o.tol) c.tol = *o.tol;
    if (o.starts) c.starts = *o.starts;
    if (o.probes) c.probes = *o.probes;
    if (o.perturbation) c.perturbation = *o.perturbation;
    if (o.probe_t_max) c.probe_t_max = *o.probe_t_max;
    if (o.lambda_critical) c.lambda_critical = *o.lambda_critical;
    if (o.out) c.output_dir = *o.out;
    if (o.jobs) c.jobs = *o.jobs;
    c.validate();
    return c;
}

void print_verdict(const lossysync::AnalysisOutcome& a) {
    const auto& v = a.verdict;
    fmt::print("equilibrium: residual {:.3e} rad/s after {} Newton iterations\n", a.equilibrium.residual_norm,
               a.equilibrium.iterations);
    fmt::print("||B^T delta*||_inf = {:.6f} rad, pi/2 - psi_max = {:.6f} rad (psi_max = {:.6f})\n",
               v.max_edge_difference, v.gamma_bound, v.psi_max);
    fmt::print("condition met: {}, spectral confirmation: {} (zero eigenvalues {}, Hurwitz {})\n", v.condition_met,
               v.spectral_confirmation, v.spectrum.zero_count, v.spectrum.hurwitz);
    fmt::print("unique edge differences over {} retained starts: {}\n", a.uniqueness.retained, a.uniqueness.unique);
    fmt::print("Jacobian symmetric: {}\n", !a.laplacian.asymmetric);
    fmt::print("lambda2(L_y) = {:.6f}, comparison: {}\n", v.lambda2, lossysync::to_string(v.comparison_outcome));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lossy phase-oscillator network simulator and stability analyzer"};
    app.require_subcommand(1);
    Overrides overrides;
    auto* simulate = app.add_subcommand("simulate", "Integrate from random initial phases; write trajectory and plots");
    auto* analyze = app.add_subcommand("analyze", "Solve equilibria, check uniqueness and the stability condition");
    auto* probe = app.add_subcommand("probe", "Perturb the equilibrium and test convergence to its manifold");
    auto* report = app.add_subcommand("report", "Run simulate, analyze and probe; write a combined summary");
    for (auto* cmd : {simulate, analyze, probe, report}) add_flags(cmd, overrides);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        const lossysync::ExperimentConfig config = build_config(overrides);
        if (simulate->parsed()) {
            const auto out = lossysync::run_simulate(config);
            fmt::print("final ||d delta/dt||_inf = {:.3e} rad/s at t = {:.3f} s\n", out.final_residual,
                       out.trajectory.back().time);
            if (out.sync_frequency) {
                fmt::print("synchronized, common frequency deviation {:.3e} rad/s\n", *out.sync_frequency);
            } else {
                fmt::print("not synchronized within tolerance\n");
            }
        } else if (analyze->parsed()) {
            print_verdict(lossysync::run_analyze(config));
        } else if (probe->parsed()) {
            const auto out = lossysync::run_probe(config);
            print_verdict(out.analysis);
            fmt::print("probes converged: {}/{}, offset spread {:.3e} rad\n", out.converged, out.probes.size(),
                       out.offset_spread);
        } else if (report->parsed()) {
            const auto out = lossysync::run_report(config);
            print_verdict(out.probe.analysis);
            fmt::print("final ||d delta/dt||_inf = {:.3e} rad/s; probes converged: {}/{}\n",
                       out.simulation.final_residual, out.probe.converged, out.probe.probes.size());
        }
        fmt::print("outputs written to {}\n", config.output_dir.string());
        return kOk;
    } catch (const lossysync::ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfig;
    } catch (const lossysync::ValidationError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfig;
    } catch (const lossysync::StructuralError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfig;
    } catch (const lossysync::DimensionError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfig;
    } catch (const lossysync::IntegrationDiverged& e) {
        fmt::print(stderr, "diverged: {}\n", e.what());
        return kDiverged;
    } catch (const lossysync::Inconclusive& e) {
        fmt::print(stderr, "inconclusive: {}\n", e.what());
        return kInconclusive;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kUnexpected;
    }
}
