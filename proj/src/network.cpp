#include "lossysync/network.hpp"

#include "lossysync/error.hpp"
#include "lossysync/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>

namespace lossysync {

namespace {

void require_size(const std::vector<double>& v, std::size_t n, const char* name) {
    if (v.size() != n) {
        throw DimensionError(fmt::format("{}: expected {} entries, got {}", name, n, v.size()));
    }
}

struct GeneratedInstance {
    NetworkSpec spec;
    std::vector<double> operating_angles;
};

GeneratedInstance generate_instance(std::size_t n, std::size_t e, const ParameterRanges& ranges,
                                    std::uint64_t seed) {
    if (n < 2) throw ValidationError("generate_random: need at least 2 nodes");
    const std::size_t max_edges = n * (n - 1) / 2;
    if (e < n - 1 || e > max_edges) {
        throw ValidationError(
            fmt::format("generate_random: edge count {} outside [{}, {}]", e, n - 1, max_edges));
    }

    Rng rng(seed);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);

    std::set<std::pair<std::size_t, std::size_t>> edges;
    auto key = [](std::size_t i, std::size_t j) { return std::make_pair(std::min(i, j), std::max(i, j)); };
    for (std::size_t k = 1; k < n; ++k) {
        edges.insert(key(order[k], order[rng.index(k)]));
    }

    std::vector<std::pair<std::size_t, std::size_t>> chords;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!edges.contains({i, j})) chords.emplace_back(i, j);
        }
    }
    for (std::size_t k = 0; k + n - 1 < e; ++k) {
        const std::size_t pick = k + rng.index(chords.size() - k);
        std::swap(chords[k], chords[pick]);
        edges.insert(chords[k]);
    }

    GeneratedInstance out;
    NetworkSpec& spec = out.spec;
    spec.node_count = n;
    for (const auto& [i, j] : edges) {
        Line line{i, j, 0.0, 0.0};
        line.conductance = rng.uniform(ranges.conductance.lo, ranges.conductance.hi);
        line.susceptance = rng.uniform(ranges.susceptance.lo, ranges.susceptance.hi);
        spec.lines.push_back(line);
    }
    spec.voltage.resize(n);
    spec.load.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        spec.voltage[i] = rng.uniform(ranges.voltage.lo, ranges.voltage.hi);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double g_load = rng.uniform(ranges.load_conductance.lo, ranges.load_conductance.hi);
        spec.load[i] = g_load * spec.voltage[i] * spec.voltage[i];
    }

    out.operating_angles.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.operating_angles[i] = rng.uniform(-ranges.operating_angle_spread, ranges.operating_angle_spread);
    }

    // Setpoint = active power injection at the operating point, so that point
    // has zero power mismatch at every node.
    spec.power_setpoint = spec.load;
    const auto& theta = out.operating_angles;
    for (const Line& line : spec.lines) {
        const double vi = spec.voltage[line.from];
        const double vj = spec.voltage[line.to];
        const double d = theta[line.from] - theta[line.to];
        const double g = line.conductance;
        const double bb = line.susceptance;
        spec.power_setpoint[line.from] += g * vi * vi - g * vi * vj * std::cos(d) + bb * vi * vj * std::sin(d);
        spec.power_setpoint[line.to] += g * vj * vj - g * vi * vj * std::cos(d) - bb * vi * vj * std::sin(d);
    }

    spec.gain = ranges.gains ? *ranges.gains : pattern_gains(n, ranges);
    spec.validate();
    return out;
}

}  // namespace

bool is_connected(std::size_t node_count, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    if (node_count == 0) return false;
    std::vector<std::vector<std::size_t>> adj(node_count);
    for (const auto& [i, j] : edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    std::vector<bool> seen(node_count, false);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t visited = 1;
    while (!frontier.empty()) {
        const std::size_t u = frontier.front();
        frontier.pop();
        for (std::size_t v : adj[u]) {
            if (!seen[v]) {
                seen[v] = true;
                ++visited;
                frontier.push(v);
            }
        }
    }
    return visited == node_count;
}

void NetworkSpec::validate() const {
    if (node_count < 2) throw ValidationError("network needs at least 2 nodes");
    require_size(voltage, node_count, "voltage");
    require_size(power_setpoint, node_count, "power_setpoint");
    require_size(load, node_count, "load");
    require_size(gain, node_count, "gain");

    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::vector<std::pair<std::size_t, std::size_t>> endpoints;
    for (std::size_t z = 0; z < lines.size(); ++z) {
        const Line& l = lines[z];
        if (l.from >= node_count || l.to >= node_count) {
            throw StructuralError(fmt::format("line {} references a node outside [0, {})", z, node_count));
        }
        if (l.from == l.to) throw StructuralError(fmt::format("line {} is a self-loop", z));
        if (!seen.insert({std::min(l.from, l.to), std::max(l.from, l.to)}).second) {
            throw StructuralError(fmt::format("line {} duplicates ({}, {})", z, l.from + 1, l.to + 1));
        }
        if (!(l.susceptance > 0.0) || !std::isfinite(l.susceptance)) {
            throw ValidationError(fmt::format("line {}: susceptance must be positive", z));
        }
        if (!(l.conductance >= 0.0) || !std::isfinite(l.conductance)) {
            throw ValidationError(fmt::format("line {}: conductance must be non-negative", z));
        }
        endpoints.emplace_back(l.from, l.to);
    }
    for (std::size_t i = 0; i < node_count; ++i) {
        if (!(voltage[i] > 0.0) || !std::isfinite(voltage[i])) {
            throw ValidationError(fmt::format("node {}: voltage must be positive", i + 1));
        }
        if (!(load[i] >= 0.0) || !std::isfinite(load[i])) {
            throw ValidationError(fmt::format("node {}: load must be non-negative", i + 1));
        }
        if (!(gain[i] > 0.0) || !std::isfinite(gain[i])) {
            throw ValidationError(fmt::format("node {}: gain must be positive", i + 1));
        }
        if (!std::isfinite(power_setpoint[i])) {
            throw ValidationError(fmt::format("node {}: power setpoint must be finite", i + 1));
        }
    }
    if (!is_connected(node_count, endpoints)) throw StructuralError("coupling graph is not connected");
}

double DerivedModel::gamma_bound() const { return std::numbers::pi / 2.0 - psi_max; }

DerivedModel derive(const NetworkSpec& spec) {
    spec.validate();
    const std::size_t n = spec.node_count;
    const std::size_t m = spec.edge_count();

    DerivedModel model;
    model.node_count = n;
    model.gain = spec.gain;
    model.incidence = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    model.natural_frequency.resize(n);
    for (std::size_t i = 0; i < n; ++i) model.natural_frequency[i] = spec.power_setpoint[i] - spec.load[i];

    for (std::size_t z = 0; z < m; ++z) {
        const Line& l = spec.lines[z];
        const double vi = spec.voltage[l.from];
        const double vj = spec.voltage[l.to];
        model.edges.emplace_back(l.from, l.to);
        model.a.push_back(vi * vj * l.conductance);
        model.b.push_back(vi * vj * l.susceptance);
        model.psi.push_back(std::atan(model.a.back() / model.b.back()));
        model.natural_frequency[l.from] -= l.conductance * vi * vi;
        model.natural_frequency[l.to] -= l.conductance * vj * vj;
        model.incidence(static_cast<Eigen::Index>(l.from), static_cast<Eigen::Index>(z)) = 1.0;
        model.incidence(static_cast<Eigen::Index>(l.to), static_cast<Eigen::Index>(z)) = -1.0;
    }
    model.abs_incidence = model.incidence.cwiseAbs();
    model.psi_max = psi_max(model);
    return model;
}

double psi_max(const DerivedModel& model) {
    double out = 0.0;
    for (double p : model.psi) out = std::max(out, p);
    return out;
}

std::vector<double> pattern_gains(std::size_t n, const ParameterRanges& ranges) {
    std::vector<double> gains(n, ranges.base_gain_hz * kHzToRadPerSecond);
    for (const auto& [node, factor] : ranges.gain_multipliers) {
        if (node >= 1 && node <= n) gains[node - 1] *= factor;
    }
    return gains;
}

NetworkSpec generate_random(std::size_t n, std::size_t e, const ParameterRanges& ranges, std::uint64_t seed) {
    return generate_instance(n, e, ranges, seed).spec;
}

std::vector<double> reference_operating_angles(std::size_t n, std::size_t e, const ParameterRanges& ranges,
                                               std::uint64_t seed) {
    return generate_instance(n, e, ranges, seed).operating_angles;
}

}  // namespace lossysync
