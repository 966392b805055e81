#pragma once

#include "ctbn/exact.hpp"
#include "ctbn/learning.hpp"
#include "ctbn/metrics.hpp"
#include "ctbn/simulate.hpp"
#include "ctbn/star.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ctbn {

/// Runs fn(0..count-1) on up to `workers` threads. The first exception is rethrown.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

// Three-node chain 0 -> 1 -> 2 under Gaussian noise; the middle node is never observed.
struct Figure2Config {
  double a = 1.0;
  double b = 0.6;
  double sigma = 0.8;
  double horizon = 5.0;
  int observations = 8;
  double grid_step = 1e-3;
  std::uint64_t seed = 7;
};

struct Figure2Result {
  NetworkModel model;
  Trajectory truth;
  ObservationSet observations;
  std::vector<double> times;
  std::vector<std::vector<double>> star_mean;   // per node, per grid point
  std::vector<std::vector<double>> exact_mean;
  double mse = 0.0;  // time-averaged squared difference of posterior means, averaged over nodes
  double star_energy = 0.0;
  double log_evidence = 0.0;
  ConvergenceReport report;
  InvariantReport invariants;
};

Figure2Result run_figure2(const Figure2Config& config);

// Eight-node tree or periodic chain with noiseless evidence at both ends.
struct Figure3Config {
  std::string topology = "tree";
  int nodes = 8;
  double a = 8.0;
  double horizon = 1.0;
  std::vector<double> temperatures{0.2, 0.4, 0.6, 0.8, 1.0};
  double grid_step = 1e-3;
  double damping = 0.5;
  double tolerance = 1e-6;
  int max_sweeps = 5000;
  int workers = 1;
};

/// Evidence used by the sweep: every node at +1 at t = 0 and at -1 at t = T.
ObservationSet figure3_evidence(int nodes, double horizon);

struct Figure3Row {
  double b = 0.0;
  std::string method;  // "star" or "mf"
  double dwell_mse = 0.0;
  double transition_mse = 0.0;
  double stats_mse = 0.0;
  double energy = 0.0;
  double log_evidence = 0.0;
  bool converged = false;
  int sweeps = 0;
  InvariantReport invariants;
};

std::vector<Figure3Row> run_figure3(const Figure3Config& config);

// Random five-node networks learned by greedy hill climbing.
struct Table1Config {
  int nodes = 5;
  int k_max = 1;     // generator in-degree bound
  int search_k = 2;  // parents considered per family during the search
  int trajectories = 10;  // D
  int observations = 10;
  double a = 1.0;
  double b = 0.6;
  double sigma = 0.2;
  double horizon = 10.0;
  double grid_step = 0.02;
  double alpha = 5.0;
  double beta = 10.0;
  int replicates = 5;
  int max_sweeps = 10;
  double marginal_tolerance = 1e-4;
  double inference_tolerance = 1e-6;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct Table1Dataset {
  NetworkModel model;
  std::vector<Trajectory> trajectories;
  std::vector<ObservationSet> observations;
};

Table1Dataset make_table1_dataset(const Table1Config& config, int replicate);

struct Table1Replicate {
  Graph truth;
  LearnResult learned;
  CurveAreas areas;
};

struct Table1Result {
  std::vector<Table1Replicate> replicates;
  double mean_auroc = 0.0;
  double mean_aupr = 0.0;
};

LearnConfig table1_learn_config(const Table1Config& config);
Table1Result run_table1(const Table1Config& config);

}  // namespace ctbn
