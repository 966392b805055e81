#include "ctbn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ctbn {

StateSpace::StateSpace(std::vector<int> cardinalities, std::vector<std::string> labels)
    : cards_(std::move(cardinalities)), labels_(std::move(labels)) {
  if (labels_.empty()) {
    for (std::size_t n = 0; n < cards_.size(); ++n) labels_.push_back("X" + std::to_string(n));
  }
  if (labels_.size() != cards_.size()) throw Error("state space: label count mismatch");
  for (int c : cards_) {
    if (c < 2) throw Error("state space: every cardinality must be >= 2");
  }
}

StateSpace StateSpace::binary(int nodes) { return StateSpace(std::vector<int>(nodes, 2)); }

std::size_t StateSpace::joint_size(std::size_t cap) const {
  std::size_t total = 1;
  for (int c : cards_) {
    if (total > cap / static_cast<std::size_t>(c)) {
      throw Error("joint state space exceeds cap of " + std::to_string(cap) + " states");
    }
    total *= static_cast<std::size_t>(c);
  }
  if (total > cap) throw Error("joint state space exceeds cap of " + std::to_string(cap) + " states");
  return total;
}

double state_value(int state, int cardinality) {
  if (cardinality == 2) return state == 0 ? -1.0 : 1.0;
  return static_cast<double>(state);
}

Graph::Graph(int nodes) : parents_(nodes), children_(nodes) {}

Graph Graph::from_edges(int nodes, std::span<const std::pair<int, int>> edges) {
  Graph g(nodes);
  for (auto [from, to] : edges) g.add_edge(from, to);
  return g;
}

void Graph::add_edge(int from, int to) {
  if (from < 0 || to < 0 || from >= size() || to >= size()) throw Error("graph: edge endpoint out of range");
  if (from == to) throw Error("graph: self-loops are not allowed");
  auto& pa = parents_[to];
  if (std::find(pa.begin(), pa.end(), from) != pa.end()) return;
  pa.insert(std::lower_bound(pa.begin(), pa.end(), from), from);
  auto& ch = children_[from];
  ch.insert(std::lower_bound(ch.begin(), ch.end(), to), to);
}

void Graph::set_parents(int node, std::vector<int> parents) {
  for (int p : parents_.at(node)) {
    auto& ch = children_[p];
    ch.erase(std::remove(ch.begin(), ch.end(), node), ch.end());
  }
  parents_[node].clear();
  for (int p : parents) add_edge(p, node);
}

bool Graph::has_edge(int from, int to) const {
  const auto& pa = parents_.at(to);
  return std::binary_search(pa.begin(), pa.end(), from);
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int to = 0; to < size(); ++to) {
    for (int from : parents_[to]) out.emplace_back(from, to);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ConfigIndexer::ConfigIndexer(const StateSpace& space, std::span<const int> parents) {
  radix_.reserve(parents.size());
  for (int p : parents) radix_.push_back(space.cardinality(p));
  stride_.assign(radix_.size(), 1);
  count_ = 1;
  for (int s = static_cast<int>(radix_.size()) - 1; s >= 0; --s) {
    stride_[s] = count_;
    count_ *= radix_[s];
  }
}

int ConfigIndexer::index(std::span<const int> parent_states) const {
  int idx = 0;
  for (std::size_t s = 0; s < radix_.size(); ++s) idx += parent_states[s] * stride_[s];
  return idx;
}

std::vector<int> ConfigIndexer::decode(int config) const {
  std::vector<int> out(radix_.size());
  for (int s = 0; s < slots(); ++s) out[s] = digit(config, s);
  return out;
}

Cim::Cim(int states_, int configs) : states(states_), by_config(configs, Eigen::MatrixXd::Zero(states_, states_)) {}

void Cim::set_rate(int config, int from, int to, double value) {
  auto& r = by_config.at(config);
  r(from, to) = value;
  double sum = 0.0;
  for (int y = 0; y < states; ++y) {
    if (y != from) sum += r(from, y);
  }
  r(from, from) = -sum;
}

void Cim::fix_diagonals() {
  for (auto& r : by_config) {
    for (int x = 0; x < states; ++x) {
      double sum = 0.0;
      for (int y = 0; y < states; ++y) {
        if (y != x) sum += r(x, y);
      }
      r(x, x) = -sum;
    }
  }
}

NetworkModel::NetworkModel(StateSpace space, Graph graph, std::vector<Cim> cims)
    : space_(std::move(space)), graph_(std::move(graph)), cims_(std::move(cims)) {
  auto report = validate_model(space_, graph_, cims_);
  if (!report.ok()) {
    std::ostringstream os;
    os << "invalid network model:";
    for (const auto& v : report.violations) os << "\n  " << v;
    throw Error(os.str());
  }
  for (int n = 0; n < space_.size(); ++n) indexers_.emplace_back(space_, graph_.parents(n));
}

int NetworkModel::parent_config(int node, std::span<const int> joint_state) const {
  const auto& pa = graph_.parents(node);
  const auto& ix = indexers_[node];
  int idx = 0;
  for (std::size_t s = 0; s < pa.size(); ++s) idx += joint_state[pa[s]] * ix.stride(static_cast<int>(s));
  return idx;
}

bool NetworkModel::operator==(const NetworkModel& other) const {
  if (!(space_ == other.space_) || !(graph_ == other.graph_) || cims_.size() != other.cims_.size()) return false;
  for (std::size_t n = 0; n < cims_.size(); ++n) {
    const auto& a = cims_[n];
    const auto& b = other.cims_[n];
    if (a.states != b.states || a.configs() != b.configs()) return false;
    for (int u = 0; u < a.configs(); ++u) {
      if (a.by_config[u] != b.by_config[u]) return false;
    }
  }
  return true;
}

ValidationReport validate_model(const StateSpace& space, const Graph& graph, const std::vector<Cim>& cims) {
  ValidationReport rep;
  auto flag = [&](std::string msg) { rep.violations.push_back(std::move(msg)); };
  const int n_nodes = space.size();
  for (int n = 0; n < n_nodes; ++n) {
    if (space.cardinality(n) < 2) flag("node " + std::to_string(n) + ": cardinality < 2");
  }
  if (graph.size() != n_nodes) {
    flag("graph has " + std::to_string(graph.size()) + " nodes, state space has " + std::to_string(n_nodes));
    return rep;
  }
  for (int n = 0; n < n_nodes; ++n) {
    for (int p : graph.parents(n)) {
      if (p == n) flag("node " + std::to_string(n) + ": self-loop");
      const auto& ch = graph.children(p);
      if (std::find(ch.begin(), ch.end(), n) == ch.end()) {
        flag("node " + std::to_string(n) + ": parent/child sets inconsistent");
      }
    }
  }
  if (static_cast<int>(cims.size()) != n_nodes) {
    flag("expected " + std::to_string(n_nodes) + " CIMs, got " + std::to_string(cims.size()));
    return rep;
  }
  for (int n = 0; n < n_nodes; ++n) {
    const auto& cim = cims[n];
    const std::string tag = "node " + std::to_string(n);
    long expected = 1;
    for (int p : graph.parents(n)) expected *= space.cardinality(p);
    if (cim.configs() != expected) {
      flag(tag + ": dimension mismatch, expected " + std::to_string(expected) + " parent configurations, got " +
           std::to_string(cim.configs()));
    }
    if (cim.states != space.cardinality(n)) flag(tag + ": CIM state count does not match cardinality");
    for (int u = 0; u < cim.configs(); ++u) {
      const auto& r = cim.by_config[u];
      if (r.rows() != cim.states || r.cols() != cim.states) {
        flag(tag + " config " + std::to_string(u) + ": matrix has wrong shape");
        continue;
      }
      for (int x = 0; x < cim.states; ++x) {
        double sum = 0.0;
        for (int y = 0; y < cim.states; ++y) {
          const double v = r(x, y);
          if (!std::isfinite(v)) flag(tag + " config " + std::to_string(u) + ": non-finite entry");
          if (y != x && v < 0.0) {
            flag(tag + " config " + std::to_string(u) + ": negative rate " + std::to_string(x) + "->" +
                 std::to_string(y));
          }
          sum += v;
        }
        if (std::abs(sum) > 1e-12 * std::max(1.0, std::abs(r(x, x)))) {
          flag(tag + " config " + std::to_string(u) + ": row " + std::to_string(x) + " sums to " +
               std::to_string(sum));
        }
      }
    }
  }
  return rep;
}

ValidationReport validate_model(const NetworkModel& model) {
  return validate_model(model.space(), model.graph(), model.cims());
}

FamilyPrior FamilyPrior::uniform(int states, int configs, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw Error("gamma prior: alpha and beta must be positive");
  FamilyPrior p;
  p.alpha.assign(configs, Eigen::MatrixXd::Constant(states, states, alpha));
  p.beta.assign(configs, Eigen::VectorXd::Constant(states, beta));
  return p;
}

GammaPrior GammaPrior::uniform(const StateSpace& space, const Graph& graph, double alpha, double beta) {
  GammaPrior g;
  for (int n = 0; n < space.size(); ++n) {
    ConfigIndexer ix(space, graph.parents(n));
    g.nodes.push_back(FamilyPrior::uniform(space.cardinality(n), ix.count(), alpha, beta));
  }
  return g;
}

Cim glauber_cim(double a, double b, int parent_count) {
  if (!(a > 0.0)) throw Error("glauber_cim: rate scale a must be positive");
  if (parent_count < 0) throw Error("glauber_cim: negative parent count");
  const int configs = 1 << parent_count;
  Cim cim(2, configs);
  for (int u = 0; u < configs; ++u) {
    double field = 0.0;
    for (int s = 0; s < parent_count; ++s) {
      // first parent is the most significant bit
      const int bit = (u >> (parent_count - 1 - s)) & 1;
      field += state_value(bit, 2);
    }
    const double t = std::tanh(b * field);
    for (int x = 0; x < 2; ++x) {
      const double spin = state_value(x, 2);
      cim.set_rate(u, x, 1 - x, 0.5 * a * (1.0 + spin * t));
    }
  }
  return cim;
}

NetworkModel glauber_model(const Graph& graph, double a, double b) {
  std::vector<Cim> cims;
  for (int n = 0; n < graph.size(); ++n) cims.push_back(glauber_cim(a, b, static_cast<int>(graph.parents(n).size())));
  return NetworkModel(StateSpace::binary(graph.size()), graph, std::move(cims));
}

std::vector<int> decode_joint(const StateSpace& space, std::size_t index) {
  std::vector<int> out(space.size());
  for (int n = 0; n < space.size(); ++n) {
    const auto c = static_cast<std::size_t>(space.cardinality(n));
    out[n] = static_cast<int>(index % c);
    index /= c;
  }
  return out;
}

std::size_t encode_joint(const StateSpace& space, std::span<const int> states) {
  std::size_t idx = 0;
  for (int n = space.size() - 1; n >= 0; --n) idx = idx * space.cardinality(n) + states[n];
  return idx;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> amalgamate(const NetworkModel& model, std::size_t cap) {
  const auto& space = model.space();
  const std::size_t total = space.joint_size(cap);
  std::vector<std::size_t> stride(space.size(), 1);
  for (int n = 1; n < space.size(); ++n) stride[n] = stride[n - 1] * space.cardinality(n - 1);

  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t i = 0; i < total; ++i) {
    const auto x = decode_joint(space, i);
    double exit = 0.0;
    for (int n = 0; n < space.size(); ++n) {
      const int u = model.parent_config(n, x);
      const auto& r = model.cim(n).by_config[u];
      for (int y = 0; y < space.cardinality(n); ++y) {
        if (y == x[n] || r(x[n], y) == 0.0) continue;
        const auto j = static_cast<std::ptrdiff_t>(i) + (y - x[n]) * static_cast<std::ptrdiff_t>(stride[n]);
        trips.emplace_back(static_cast<int>(i), static_cast<int>(j), r(x[n], y));
        exit += r(x[n], y);
      }
    }
    trips.emplace_back(static_cast<int>(i), static_cast<int>(i), -exit);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> q(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  q.setFromTriplets(trips.begin(), trips.end());
  return q;
}

}  // namespace ctbn
