#include "lossysync/io.hpp"

#include "lossysync/error.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <ostream>

namespace lossysync::io {

namespace {

using nlohmann::json;

template <typename T>
T field(const json& doc, const char* name) {
    if (!doc.contains(name)) throw ConfigError(fmt::format("network file: missing field '{}'", name));
    try {
        return doc.at(name).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("network file: field '{}' has the wrong type ({})", name, e.what()));
    }
}

json vector_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return rows;
}

json optional_number(std::optional<double> x) { return x ? json(*x) : json(nullptr); }

}  // namespace

json network_to_json(const NetworkSpec& spec) {
    json doc;
    doc["nodes"] = spec.node_count;
    doc["edges"] = json::array();
    for (const Line& l : spec.lines) {
        doc["edges"].push_back({{"i", l.from}, {"j", l.to}, {"g", l.conductance}, {"b", l.susceptance}});
    }
    doc["v"] = spec.voltage;
    doc["p_set"] = spec.power_setpoint;
    doc["p_load"] = spec.load;
    doc["k_p"] = spec.gain;
    return doc;
}

NetworkSpec network_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("network file: top level must be an object");
    NetworkSpec spec;
    spec.node_count = field<std::size_t>(doc, "nodes");
    if (!doc.contains("edges")) throw ConfigError("network file: missing field 'edges'");
    const json& edges = doc.at("edges");
    if (!edges.is_array()) throw ConfigError("network file: 'edges' must be an array");
    for (const json& e : edges) {
        spec.lines.push_back({field<std::size_t>(e, "i"), field<std::size_t>(e, "j"), field<double>(e, "g"),
                              field<double>(e, "b")});
    }
    spec.voltage = field<std::vector<double>>(doc, "v");
    spec.power_setpoint = field<std::vector<double>>(doc, "p_set");
    spec.load = field<std::vector<double>>(doc, "p_load");
    spec.gain = field<std::vector<double>>(doc, "k_p");
    spec.validate();
    return spec;
}

NetworkSpec read_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open network file '{}'", path.string()));
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("network file '{}': {}", path.string(), e.what()));
    }
    return network_from_json(doc);
}

void write_network(const std::filesystem::path& path, const NetworkSpec& spec) {
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << network_to_json(spec).dump(2) << '\n';
}

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    const Eigen::Index n = traj.samples.empty() ? 0 : traj.samples.front().delta.size();
    out << 't';
    for (Eigen::Index i = 1; i <= n; ++i) out << ",delta_" << i;
    for (Eigen::Index i = 1; i <= n; ++i) out << ",ddelta_" << i;
    out << '\n';
    for (const Sample& s : traj.samples) {
        out << format_double(s.time);
        for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(s.delta[i]);
        for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(s.ddelta[i]);
        out << '\n';
    }
}

void write_probe_csv(std::ostream& out, const std::vector<ManifoldProbe>& probes) {
    out << "probe_id,perturbation_norm,converged,final_distance,offset_delta0\n";
    for (const ManifoldProbe& p : probes) {
        out << p.index << ',' << format_double(p.perturbation_norm) << ',' << (p.converged ? "true" : "false")
            << ',' << format_double(p.distance) << ',' << format_double(p.offset) << '\n';
    }
}

json equilibrium_to_json(const EquilibriumResult& eq) {
    return {{"delta_star", vector_json(eq.delta_star)},
            {"residual", eq.residual_norm},
            {"edge_differences", vector_json(eq.edge_differences)},
            {"iterations", eq.iterations}};
}

json verdict_to_json(const StabilityVerdict& v) {
    return {{"psi_max", v.psi_max},
            {"gamma_bound", v.gamma_bound},
            {"max_edge_difference", v.max_edge_difference},
            {"condition_met", v.condition_met},
            {"spectral_confirmation", v.spectral_confirmation},
            {"zero_eigenvalue_count", v.spectrum.zero_count},
            {"hurwitz", v.spectrum.hurwitz},
            {"zero_mode_angle", v.spectrum.zero_mode_angle},
            {"max_imaginary_part", v.spectrum.max_imag},
            {"slowest_real_part", v.spectrum.slowest_real},
            {"lambda2", v.lambda2},
            {"lambda_critical", optional_number(v.lambda_critical)},
            {"comparison_outcome", to_string(v.comparison_outcome)}};
}

json jacobian_to_json(const JacobianReport& report, const LaplacianCheck& check) {
    json spectrum = json::array();
    for (Eigen::Index k = 0; k < report.spectrum.size(); ++k) {
        spectrum.push_back({report.spectrum[k].real(), report.spectrum[k].imag()});
    }
    json violations = json::array();
    for (const auto& [i, j] : check.structure.sign_violations) violations.push_back({i + 1, j + 1});
    return {{"l_tilde", matrix_json(report.l_tilde)},
            {"symmetric_part", matrix_json(report.split.symmetric)},
            {"lossy_part", matrix_json(report.split.lossy)},
            {"form_discrepancy", report.form_discrepancy},
            {"zero_mode_error", report.zero_mode_error},
            {"spectrum", spectrum},
            {"laplacian",
             {{"holds", check.holds},
              {"in_sync_set", check.in_sync_set},
              {"row_sums_vanish", check.structure.row_sums_vanish},
              {"diagonal_positive", check.structure.diagonal_positive},
              {"neighbors_negative", check.structure.neighbors_negative},
              {"non_neighbors_zero", check.structure.non_neighbors_zero},
              {"symmetric", !check.asymmetric},
              {"asymmetry", check.structure.asymmetry},
              {"sign_violations_1based", violations}}}};
}

json uniqueness_to_json(const UniquenessResult& r) {
    json witnesses = json::array();
    for (const Vector& w : r.witnesses) witnesses.push_back(vector_json(w));
    return {{"unique", r.unique},
            {"starts", r.attempted},
            {"retained", r.retained},
            {"max_pairwise_deviation", r.max_pairwise_deviation},
            {"witnesses", witnesses}};
}

}  // namespace lossysync::io
