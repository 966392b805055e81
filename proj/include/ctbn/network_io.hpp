#pragma once

#include "ctbn/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace ctbn {

// Network file schema (JSON):
//   {
//     "format": "ctbn-network/1",
//     "nodes": [{"label": "X0", "states": 2}, ...],
//     "edges": [[from, to], ...],
//     "cims":  [{"node": n, "config": u, "from": x, "to": y, "rate": r}, ...]
//   }
// Every off-diagonal entry is written; missing entries read as 0 and the
// diagonal is always re-derived from the row sums.

nlohmann::json network_to_json(const NetworkModel& model);
NetworkModel network_from_json(const nlohmann::json& doc);

std::string serialize_network(const NetworkModel& model);
NetworkModel parse_network(const std::string& text);

void write_network(const std::filesystem::path& path, const NetworkModel& model);
NetworkModel read_network(const std::filesystem::path& path);

}  // namespace ctbn
