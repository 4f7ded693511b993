#include "lossysync/experiment.hpp"

#include "lossysync/error.hpp"
#include "lossysync/io.hpp"
#include "lossysync/random.hpp"
#include "lossysync/svg_plot.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <limits>

namespace lossysync {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum SeedStream : std::uint64_t { kInitialPhases = 1, kMultiStart = 2, kProbes = 3 };

std::uint64_t stream_seed(const ExperimentConfig& c, SeedStream s) { return Rng::substream(c.seed.value_or(0), s); }

template <typename T>
void read_if(const json& obj, const char* key, T& target) {
    if (!obj.contains(key) || obj.at(key).is_null()) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config: field '{}' has the wrong type ({})", key, e.what()));
    }
}

void read_interval(const json& obj, const char* key, Interval& target) {
    if (!obj.contains(key)) return;
    const auto pair = obj.at(key).get<std::vector<double>>();
    if (pair.size() != 2) throw ConfigError(fmt::format("config: range '{}' must be [lo, hi]", key));
    target = {pair[0], pair[1]};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << text;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

void prepare_output(const ExperimentConfig& config) {
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) throw ConfigError(fmt::format("cannot create output directory '{}': {}", config.output_dir.string(), ec.message()));
}

svg::LinePlot trajectory_plot(const Trajectory& traj, bool frequencies) {
    svg::LinePlot plot;
    plot.title = frequencies ? "Frequency deviations" : "Phase angles";
    plot.x_label = "t [s]";
    plot.y_label = frequencies ? "d delta / dt [rad/s]" : "delta [rad]";
    if (traj.samples.empty()) return plot;
    const auto n = traj.samples.front().delta.size();
    const std::size_t stride = std::max<std::size_t>(1, traj.samples.size() / 1500);
    for (Eigen::Index i = 0; i < n; ++i) {
        svg::Series s;
        s.label = fmt::format("node {}", i + 1);
        for (std::size_t k = 0; k < traj.samples.size(); k += stride) {
            const Sample& sample = traj.samples[k];
            s.x.push_back(sample.time);
            s.y.push_back(frequencies ? sample.ddelta[i] : sample.delta[i]);
        }
        if ((traj.samples.size() - 1) % stride != 0) {
            s.x.push_back(traj.back().time);
            s.y.push_back(frequencies ? traj.back().ddelta[i] : traj.back().delta[i]);
        }
        plot.series.push_back(std::move(s));
    }
    return plot;
}

json network_summary(const NetworkSpec& spec, const DerivedModel& model) {
    return {{"nodes", spec.node_count}, {"edges", spec.edge_count()}, {"psi_max", model.psi_max},
            {"gamma_bound", model.gamma_bound()}};
}

AnalysisOutcome analyze(const ExperimentConfig& config, NetworkSpec spec) {
    const DerivedModel model = derive(spec);
    AnalysisOutcome out;
    out.spec = std::move(spec);

    UniquenessOptions uopts;
    uopts.n_starts = config.starts;
    uopts.seed = stream_seed(config, kMultiStart);
    uopts.tol = config.uniqueness_tol;
    uopts.solver.tol = config.tol;
    uopts.solver.max_iter = config.max_iter;
    uopts.jobs = config.jobs;
    try {
        out.uniqueness = check_uniqueness(model, uopts);
    } catch (const Inconclusive& e) {
        write_json(config.output_dir / "stability.txt",
                   {{"status", "inconclusive"}, {"reason", e.what()}, {"network", network_summary(out.spec, model)}});
        throw;
    }
    out.equilibrium = out.uniqueness.solutions.front();
    out.jacobian = jacobian(model, out.equilibrium.delta_star);
    out.laplacian = check_laplacian_structure(out.jacobian, out.equilibrium.delta_star, model);
    out.verdict = assess_stability(model, out.equilibrium.delta_star, config.lambda_critical);

    write_json(config.output_dir / "stability.txt", {{"status", "ok"},
                                                     {"network", network_summary(out.spec, model)},
                                                     {"equilibrium", io::equilibrium_to_json(out.equilibrium)},
                                                     {"uniqueness", io::uniqueness_to_json(out.uniqueness)},
                                                     {"verdict", io::verdict_to_json(out.verdict)},
                                                     {"jacobian", io::jacobian_to_json(out.jacobian, out.laplacian)}});
    return out;
}

ProbeOutcome probe(const ExperimentConfig& config, NetworkSpec spec) {
    ProbeOutcome out;
    out.analysis = analyze(config, std::move(spec));
    if (!out.analysis.verdict.condition_met) {
        throw Inconclusive(fmt::format("equilibrium has ||B^T delta*||_inf = {:.6f} >= {:.6f}; probes require the "
                                       "synchronization condition",
                                       out.analysis.verdict.max_edge_difference, out.analysis.verdict.gamma_bound));
    }
    const DerivedModel model = derive(out.analysis.spec);
    ProbeOptions popts;
    popts.n_probes = config.probes;
    popts.perturbation_norm = config.perturbation;
    popts.seed = stream_seed(config, kProbes);
    popts.t_max = config.probe_t_max;
    popts.dt = config.dt;
    popts.jobs = config.jobs;
    out.probes = probe_convergence(model, out.analysis.equilibrium.delta_star, popts);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const ManifoldProbe& p : out.probes) {
        if (!p.converged) continue;
        ++out.converged;
        lo = std::min(lo, p.offset);
        hi = std::max(hi, p.offset);
    }
    out.offset_spread = out.converged > 0 ? hi - lo : 0.0;

    std::ofstream csv(config.output_dir / "probes.csv", std::ios::binary);
    io::write_probe_csv(csv, out.probes);
    json failures = json::array();
    for (const ManifoldProbe& p : out.probes) {
        if (p.diverged) failures.push_back({{"probe_id", p.index}, {"error", p.failure}});
    }
    write_json(config.output_dir / "probe_summary.txt",
               {{"probes", out.probes.size()},
                {"converged", out.converged},
                {"fraction_converged", out.probes.empty() ? 0.0 : double(out.converged) / double(out.probes.size())},
                {"offset_spread", out.offset_spread},
                {"perturbation_norm", config.perturbation},
                {"diverged", failures}});
    return out;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (network_file) {
        if (!fs::exists(*network_file)) throw ConfigError(fmt::format("network file '{}' does not exist", network_file->string()));
    } else {
        if (!seed) throw ConfigError("a seed is required when the network is generated");
        if (nodes < 2) throw ConfigError("nodes must be at least 2");
        if (edges < nodes - 1 || edges > nodes * (nodes - 1) / 2) {
            throw ConfigError(fmt::format("edges must lie in [{}, {}] for {} nodes", nodes - 1, nodes * (nodes - 1) / 2, nodes));
        }
    }
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw ConfigError(fmt::format("{} must be positive", name));
    };
    positive(dt, "dt");
    positive(t_max, "t_max");
    positive(sync_tol, "sync_tol");
    positive(tol, "tol");
    positive(uniqueness_tol, "uniqueness_tol");
    positive(perturbation, "perturbation");
    positive(probe_t_max, "probe t_max");
    if (t_max < dt) throw ConfigError("t_max must be at least dt");
    if (probe_t_max < dt) throw ConfigError("probe t_max must be at least dt");
    if (decimation == 0) throw ConfigError("decimation must be at least 1");
    if (max_iter <= 0) throw ConfigError("max_iter must be positive");
    if (starts < 2) throw ConfigError("starts must be at least 2");
    if (probes == 0) throw ConfigError("probes must be at least 1");
    if (jobs == 0) throw ConfigError("jobs must be at least 1");
    if (lambda_critical && !(*lambda_critical > 0.0)) throw ConfigError("lambda_critical must be positive");
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config '{}': {}", path.string(), e.what()));
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");

    ExperimentConfig c;
    try {
        if (doc.contains("network")) {
            const json& net = doc.at("network");
            if (net.contains("file")) {
                fs::path file = net.at("file").get<std::string>();
                if (file.is_relative()) file = path.parent_path() / file;
                c.network_file = file;
            }
            if (net.contains("generate")) {
                const json& gen = net.at("generate");
                read_if(gen, "nodes", c.nodes);
                read_if(gen, "edges", c.edges);
                if (gen.contains("seed")) c.seed = gen.at("seed").get<std::uint64_t>();
                if (gen.contains("ranges")) {
                    const json& r = gen.at("ranges");
                    read_interval(r, "voltage", c.ranges.voltage);
                    read_interval(r, "conductance", c.ranges.conductance);
                    read_interval(r, "susceptance", c.ranges.susceptance);
                    read_interval(r, "load_conductance", c.ranges.load_conductance);
                    read_if(r, "base_gain_hz", c.ranges.base_gain_hz);
                    read_if(r, "operating_angle_spread", c.ranges.operating_angle_spread);
                    if (r.contains("gains")) c.ranges.gains = r.at("gains").get<std::vector<double>>();
                }
            }
        }
        if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("integrator")) {
            const json& s = doc.at("integrator");
            read_if(s, "dt", c.dt);
            read_if(s, "t_max", c.t_max);
            read_if(s, "decimation", c.decimation);
            read_if(s, "sync_tol", c.sync_tol);
        }
        if (doc.contains("solver")) {
            const json& s = doc.at("solver");
            read_if(s, "tol", c.tol);
            read_if(s, "max_iter", c.max_iter);
            read_if(s, "starts", c.starts);
            read_if(s, "uniqueness_tol", c.uniqueness_tol);
        }
        if (doc.contains("probe")) {
            const json& s = doc.at("probe");
            read_if(s, "count", c.probes);
            read_if(s, "perturbation", c.perturbation);
            read_if(s, "t_max", c.probe_t_max);
        }
        if (doc.contains("lambda_critical") && !doc.at("lambda_critical").is_null()) {
            c.lambda_critical = doc.at("lambda_critical").get<double>();
        }
        if (doc.contains("output")) c.output_dir = doc.at("output").get<std::string>();
        read_if(doc, "jobs", c.jobs);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config '{}': {}", path.string(), e.what()));
    }
    return c;
}

NetworkSpec load_network(const ExperimentConfig& config) {
    config.validate();
    if (config.network_file) return io::read_network(*config.network_file);
    try {
        return generate_random(config.nodes, config.edges, config.ranges, *config.seed);
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
}

SimulationOutcome run_simulate(const ExperimentConfig& config) {
    NetworkSpec spec = load_network(config);
    const DerivedModel model = derive(spec);
    prepare_output(config);
    io::write_network(config.output_dir / "network.json", spec);

    PhaseState start{random_initial_phases(model, stream_seed(config, kInitialPhases)), 0.0};
    IntegrationOptions opts;
    opts.dt = config.dt;
    opts.t_max = config.t_max;
    opts.decimation = config.decimation;

    SimulationOutcome out;
    out.trajectory = integrate(model, start, opts);
    out.spec = std::move(spec);
    out.sync_frequency = detect_synchronization(out.trajectory, config.sync_tol);
    out.final_residual = out.trajectory.back().ddelta.cwiseAbs().maxCoeff();
    out.final_max_edge_difference = max_edge_difference(model, out.trajectory.back().delta);

    {
        std::ofstream csv(config.output_dir / "trajectory.csv", std::ios::binary);
        io::write_trajectory_csv(csv, out.trajectory);
    }
    write_json(config.output_dir / "sync.txt",
               {{"synchronized", out.sync_frequency.has_value()},
                {"sync_frequency", out.sync_frequency ? json(*out.sync_frequency) : json(nullptr)},
                {"tolerance", config.sync_tol},
                {"final_time", out.trajectory.back().time},
                {"final_frequency_residual", out.final_residual},
                {"final_max_edge_difference", out.final_max_edge_difference},
                {"initial_max_edge_difference", max_edge_difference(model, start.delta)},
                {"gamma_bound", model.gamma_bound()}});
    write_text(config.output_dir / "phases.svg", svg::render(trajectory_plot(out.trajectory, false)));
    write_text(config.output_dir / "freq.svg", svg::render(trajectory_plot(out.trajectory, true)));
    return out;
}

AnalysisOutcome run_analyze(const ExperimentConfig& config) {
    NetworkSpec spec = load_network(config);
    prepare_output(config);
    io::write_network(config.output_dir / "network.json", spec);
    return analyze(config, std::move(spec));
}

ProbeOutcome run_probe(const ExperimentConfig& config) {
    NetworkSpec spec = load_network(config);
    prepare_output(config);
    io::write_network(config.output_dir / "network.json", spec);
    return probe(config, std::move(spec));
}

ReportOutcome run_report(const ExperimentConfig& config) {
    ReportOutcome out;
    out.simulation = run_simulate(config);
    out.probe = probe(config, out.simulation.spec);
    const auto& v = out.probe.analysis.verdict;
    write_json(config.output_dir / "summary.txt",
               {{"synchronized", out.simulation.sync_frequency.has_value()},
                {"final_frequency_residual", out.simulation.final_residual},
                {"max_edge_difference", v.max_edge_difference},
                {"gamma_bound", v.gamma_bound},
                {"psi_max", v.psi_max},
                {"condition_met", v.condition_met},
                {"spectral_confirmation", v.spectral_confirmation},
                {"unique_edge_differences", out.probe.analysis.uniqueness.unique},
                {"lambda2", v.lambda2},
                {"comparison_outcome", to_string(v.comparison_outcome)},
                {"probes_converged", out.probe.converged},
                {"probes", out.probe.probes.size()},
                {"offset_spread", out.probe.offset_spread}});
    return out;
}

}  // namespace lossysync
