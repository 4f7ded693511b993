#pragma once

#include "lossysync/dynamics.hpp"
#include "lossysync/equilibrium.hpp"
#include "lossysync/manifold.hpp"
#include "lossysync/network.hpp"
#include "lossysync/stability.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lossysync::io {

// Network document: {"nodes": N, "edges": [{"i","j","g","b"}], "v", "p_set",
// "p_load", "k_p"}; node indices are 0-based. Schema in docs/network.schema.json.
[[nodiscard]] nlohmann::json network_to_json(const NetworkSpec& spec);
[[nodiscard]] NetworkSpec network_from_json(const nlohmann::json& doc);
[[nodiscard]] NetworkSpec read_network(const std::filesystem::path& path);
void write_network(const std::filesystem::path& path, const NetworkSpec& spec);

/// 17 significant digits, locale independent.
[[nodiscard]] std::string format_double(double x);

/// Header: t,delta_1..delta_N,ddelta_1..ddelta_N; one row per sample.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Header: probe_id,perturbation_norm,converged,final_distance,offset_delta0.
void write_probe_csv(std::ostream& out, const std::vector<ManifoldProbe>& probes);

[[nodiscard]] nlohmann::json equilibrium_to_json(const EquilibriumResult& eq);
[[nodiscard]] nlohmann::json verdict_to_json(const StabilityVerdict& verdict);
[[nodiscard]] nlohmann::json jacobian_to_json(const JacobianReport& report, const LaplacianCheck& check);
[[nodiscard]] nlohmann::json uniqueness_to_json(const UniquenessResult& result);

}  // namespace lossysync::io
