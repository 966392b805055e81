#include "ctbn/stats.hpp"

namespace ctbn {

FamilyStats::FamilyStats(int states_, int configs_)
    : states(states_),
      configs(configs_),
      dwell(static_cast<std::size_t>(states_ * configs_), 0.0),
      transitions(static_cast<std::size_t>(states_ * states_ * configs_), 0.0) {}

double FamilyStats::total_time() const {
  double s = 0.0;
  for (double v : dwell) s += v;
  return s;
}

FamilyStats& FamilyStats::operator+=(const FamilyStats& other) {
  if (other.states != states || other.configs != configs) throw Error("FamilyStats: shape mismatch in sum");
  for (std::size_t i = 0; i < dwell.size(); ++i) dwell[i] += other.dwell[i];
  for (std::size_t i = 0; i < transitions.size(); ++i) transitions[i] += other.transitions[i];
  return *this;
}

SufficientStats SufficientStats::zeros(const NetworkModel& model) {
  SufficientStats s;
  for (int n = 0; n < model.size(); ++n) s.nodes.emplace_back(model.space().cardinality(n), model.indexer(n).count());
  return s;
}

SufficientStats& SufficientStats::operator+=(const SufficientStats& other) {
  if (nodes.empty()) {
    nodes = other.nodes;
    return *this;
  }
  if (nodes.size() != other.nodes.size()) throw Error("SufficientStats: node count mismatch in sum");
  for (std::size_t n = 0; n < nodes.size(); ++n) nodes[n] += other.nodes[n];
  return *this;
}

StatsError stats_mse(const SufficientStats& estimate, const SufficientStats& reference) {
  if (estimate.nodes.size() != reference.nodes.size()) throw Error("stats_mse: node count mismatch");
  double sd = 0.0, sm = 0.0;
  std::size_t nd = 0, nm = 0;
  for (std::size_t n = 0; n < estimate.nodes.size(); ++n) {
    const auto& a = estimate.nodes[n];
    const auto& b = reference.nodes[n];
    if (a.states != b.states || a.configs != b.configs) throw Error("stats_mse: shape mismatch");
    for (std::size_t i = 0; i < a.dwell.size(); ++i) {
      sd += (a.dwell[i] - b.dwell[i]) * (a.dwell[i] - b.dwell[i]);
      ++nd;
    }
    for (int u = 0; u < a.configs; ++u) {
      for (int x = 0; x < a.states; ++x) {
        for (int y = 0; y < a.states; ++y) {
          if (x == y) continue;
          const double d = a.M(u, x, y) - b.M(u, x, y);
          sm += d * d;
          ++nm;
        }
      }
    }
  }
  StatsError e;
  e.dwell_mse = nd ? sd / static_cast<double>(nd) : 0.0;
  e.transition_mse = nm ? sm / static_cast<double>(nm) : 0.0;
  e.combined_mse = (nd + nm) ? (sd + sm) / static_cast<double>(nd + nm) : 0.0;
  return e;
}

}  // namespace ctbn
