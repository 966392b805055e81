#pragma once

#include "ctbn/model.hpp"

#include <vector>

namespace ctbn {

/// Expected sufficient statistics of one node under one parent set.
struct FamilyStats {
  int states = 0;
  int configs = 0;
  std::vector<double> dwell;        // E[T^u(x)], index u*S + x
  std::vector<double> transitions;  // E[M^u(x,y)], index (u*S + x)*S + y

  FamilyStats() = default;
  FamilyStats(int states, int configs);

  double& T(int u, int x) { return dwell[static_cast<std::size_t>(u * states + x)]; }
  double T(int u, int x) const { return dwell[static_cast<std::size_t>(u * states + x)]; }
  double& M(int u, int x, int y) { return transitions[static_cast<std::size_t>((u * states + x) * states + y)]; }
  double M(int u, int x, int y) const {
    return transitions[static_cast<std::size_t>((u * states + x) * states + y)];
  }
  double total_time() const;

  FamilyStats& operator+=(const FamilyStats& other);
};

/// Per-node statistics; additive across trajectories.
struct SufficientStats {
  std::vector<FamilyStats> nodes;

  static SufficientStats zeros(const NetworkModel& model);
  SufficientStats& operator+=(const SufficientStats& other);
};

/// Mean squared difference over all dwell-time entries and over all
/// transition-count entries (off-diagonal only) of two statistics sets.
struct StatsError {
  double dwell_mse = 0.0;
  double transition_mse = 0.0;
  double combined_mse = 0.0;
};
StatsError stats_mse(const SufficientStats& estimate, const SufficientStats& reference);

}  // namespace ctbn
