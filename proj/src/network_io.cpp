#include "ctbn/network_io.hpp"

#include <fstream>
#include <sstream>

namespace ctbn {

using nlohmann::json;

json network_to_json(const NetworkModel& model) {
  json doc;
  doc["format"] = "ctbn-network/1";
  const auto& space = model.space();
  doc["nodes"] = json::array();
  for (int n = 0; n < space.size(); ++n) {
    doc["nodes"].push_back({{"label", space.label(n)}, {"states", space.cardinality(n)}});
  }
  doc["edges"] = json::array();
  for (auto [from, to] : model.graph().edges()) doc["edges"].push_back({from, to});
  doc["cims"] = json::array();
  for (int n = 0; n < space.size(); ++n) {
    const auto& cim = model.cim(n);
    for (int u = 0; u < cim.configs(); ++u) {
      for (int x = 0; x < cim.states; ++x) {
        for (int y = 0; y < cim.states; ++y) {
          if (x == y) continue;
          doc["cims"].push_back({{"node", n}, {"config", u}, {"from", x}, {"to", y}, {"rate", cim.rate(u, x, y)}});
        }
      }
    }
  }
  return doc;
}

NetworkModel network_from_json(const json& doc) {
  try {
    std::vector<int> cards;
    std::vector<std::string> labels;
    for (const auto& node : doc.at("nodes")) {
      cards.push_back(node.at("states").get<int>());
      labels.push_back(node.value("label", "X" + std::to_string(labels.size())));
    }
    StateSpace space(cards, labels);
    Graph graph(space.size());
    for (const auto& e : doc.at("edges")) graph.add_edge(e.at(0).get<int>(), e.at(1).get<int>());

    std::vector<Cim> cims;
    for (int n = 0; n < space.size(); ++n) {
      ConfigIndexer ix(space, graph.parents(n));
      cims.emplace_back(space.cardinality(n), ix.count());
    }
    for (const auto& entry : doc.at("cims")) {
      const int n = entry.at("node").get<int>();
      const int u = entry.at("config").get<int>();
      const int x = entry.at("from").get<int>();
      const int y = entry.at("to").get<int>();
      if (n < 0 || n >= space.size()) throw Error("network file: node index out of range");
      auto& cim = cims[n];
      if (u < 0 || u >= cim.configs() || x < 0 || y < 0 || x >= cim.states || y >= cim.states || x == y) {
        throw Error("network file: CIM entry out of range for node " + std::to_string(n));
      }
      cim.by_config[u](x, y) = entry.at("rate").get<double>();
    }
    for (auto& cim : cims) cim.fix_diagonals();
    return NetworkModel(std::move(space), std::move(graph), std::move(cims));
  } catch (const json::exception& e) {
    throw Error(std::string("network file: ") + e.what());
  }
}

std::string serialize_network(const NetworkModel& model) { return network_to_json(model).dump(2); }

NetworkModel parse_network(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("network file: ") + e.what());
  }
  return network_from_json(doc);
}

void write_network(const std::filesystem::path& path, const NetworkModel& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize_network(model) << '\n';
}

NetworkModel read_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

}  // namespace ctbn
