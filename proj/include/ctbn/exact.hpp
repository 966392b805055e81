#pragma once

#include "ctbn/model.hpp"
#include "ctbn/observations.hpp"
#include "ctbn/stats.hpp"
#include "ctbn/time_grid.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ctbn {

struct ExactConfig {
  double grid_step = 0.0;  // <= 0 falls back to steps_per_segment
  int steps_per_segment = 200;
  std::size_t joint_cap = 4096;
  double truncation = 1e-14;  // Poisson tail mass dropped by uniformization
  /// Product-form prior at t = 0, one vector per node; empty means uniform.
  std::vector<std::vector<double>> initial_distribution;
};

/// Forward-backward solution on the joint chain, stored on the same grid
/// layout the variational solver uses (interior observation times appear as
/// a left and a right limit).
struct JointPosterior {
  TimeGrid grid;
  StateSpace space;
  std::vector<Eigen::VectorXd> forward;   // filtered, sums to 1 per point
  std::vector<Eigen::VectorXd> backward;  // max-normalised per point
  std::vector<Eigen::VectorXd> smoothed;  // sums to 1 per point
  double log_evidence = 0.0;
  /// node_marginals[n][p * |X_n| + x]
  std::vector<std::vector<double>> node_marginals;

  /// Posterior mean of the +-1 spin value (or state value) of a node.
  std::vector<double> mean_value(int node) const;
};

JointPosterior exact_smoothing(const NetworkModel& model, const GriddedEvidence& evidence, const ExactConfig& config);
JointPosterior exact_smoothing(const NetworkModel& model, const ObservationSet& obs, const ExactConfig& config);

/// Trapezoidal quadrature of smoothed occupancy and posterior flux.
/// Throws when the dwell times of some node fail to add up to the horizon.
SufficientStats exact_expected_stats(const NetworkModel& model, const JointPosterior& posterior);

double exact_evidence(const NetworkModel& model, const GriddedEvidence& evidence, const ExactConfig& config);
double exact_evidence(const NetworkModel& model, const ObservationSet& obs, const ExactConfig& config);

/// Prior marginals obtained by pure forward propagation (no evidence).
std::vector<std::vector<double>> exact_prior_marginals(const NetworkModel& model, double horizon,
                                                       const ExactConfig& config);

}  // namespace ctbn
