#pragma once

#include "ctbn/model.hpp"
#include "ctbn/observations.hpp"
#include "ctbn/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ctbn {

struct TrajectoryEvent {
  double time = 0.0;
  int node = 0;
  int state = 0;
  bool operator==(const TrajectoryEvent&) const = default;
};

/// Piecewise-constant sample path on [0, T].
struct Trajectory {
  std::vector<int> initial;
  std::vector<TrajectoryEvent> events;
  double horizon = 0.0;

  /// Joint state at time t (right-continuous).
  std::vector<int> state_at(double t) const;
  bool operator==(const Trajectory&) const = default;
};

/// Exact CTMC sample path, node-local (the joint generator is never built).
Trajectory gillespie_sample(const NetworkModel& model, std::vector<int> initial, double horizon, std::uint64_t seed);

struct ObservationPlan {
  std::vector<double> times;     // explicit times; used when non-empty
  int count = 10;                // otherwise this many uniform times on [0, T]
  bool independent_per_node = false;
  NoiseModel model = NoiseModel::Gaussian;
  double sigma = 0.2;
};

ObservationSet make_observations(const Trajectory& traj, const StateSpace& space, const ObservationPlan& plan,
                                 std::uint64_t seed);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const std::vector<std::string>& extra_header = {});
Trajectory read_trajectory_csv(const std::filesystem::path& path);

// Benchmark topologies.
Graph tree_graph(int nodes);            // binary tree, edges point from parent i to 2i+1, 2i+2
Graph periodic_chain_graph(int nodes);  // ring with edges in both directions
Graph tree_with_feedback_graph(int nodes);  // binary tree plus one leaf-to-root edge
/// Each node draws its parent set uniformly from all sets of size <= k_max.
Graph random_graph(int nodes, int k_max, Rng& rng);
Graph named_graph(const std::string& topology, int nodes, int k_max, Rng& rng);

}  // namespace ctbn
