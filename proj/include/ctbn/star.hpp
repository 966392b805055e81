#pragma once

#include "ctbn/model.hpp"
#include "ctbn/observations.hpp"
#include "ctbn/stats.hpp"
#include "ctbn/time_grid.hpp"

#include <span>
#include <string>
#include <vector>

namespace ctbn {

/// Cluster choice: star clusters {node, parents} or fully local mean field.
enum class Cluster { Star, MeanField };
enum class Schedule { Sequential, Synchronous };

struct InferenceConfig {
  double grid_step = 0.0;       // absolute step; <= 0 falls back to steps_per_segment
  int steps_per_segment = 200;
  int max_sweeps = 200;
  double tolerance = 1e-8;      // sup-norm change of m between sweeps
  double damping = 1.0;         // ln rho <- (1-g) ln rho_old + g ln rho_new from the second sweep on
  Schedule schedule = Schedule::Sequential;
  Cluster cluster = Cluster::Star;
  double rate_floor = 1e-10;    // mean field takes logs of rates
  bool track_energy = false;
  /// Prior distribution of each node at t = 0; empty means uniform.
  std::vector<std::vector<double>> initial_distribution;
};

/// Trajectories of one node on the shared grid. Arrays are point-major:
/// value(p, x) lives at index p * states + x.
struct NodeTrajectory {
  int states = 0;
  std::vector<double> m;          // marginals
  std::vector<double> rho;        // backward multipliers, max-normalised per point
  std::vector<double> log_scale;  // ln rho_true(p, x) = ln rho(p, x) + log_scale[p]
  std::vector<double> alpha;      // forward factor, m = alpha * rho elementwise

  std::span<const double> m_at(std::size_t p) const { return {m.data() + p * states, static_cast<std::size_t>(states)}; }
  std::span<const double> rho_at(std::size_t p) const {
    return {rho.data() + p * states, static_cast<std::size_t>(states)};
  }
  std::span<const double> alpha_at(std::size_t p) const {
    return {alpha.data() + p * states, static_cast<std::size_t>(states)};
  }
};

struct MarginalTrajectories {
  TimeGrid grid;
  std::vector<NodeTrajectory> nodes;

  /// Uniform marginals, unit multipliers.
  static MarginalTrajectories uniform(const StateSpace& space, const TimeGrid& grid);
  /// Expected local state value (+-1 spins for binary nodes) at every point.
  std::vector<double> mean_value(int node) const;
};

struct ConvergenceReport {
  int sweeps = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> residual_trace;
  std::vector<double> energy_trace;
  std::vector<std::string> warnings;
};

struct InferenceResult {
  MarginalTrajectories trajectories;
  ConvergenceReport report;
};

/// Product of parent marginals m^u for every configuration of `node`.
std::vector<double> parent_weights(const NetworkModel& model, const MarginalTrajectories& traj, int node,
                                   std::size_t point);

/// Effective rates of `node` at one point: off-diagonals are E[R(x,y)] (star)
/// or exp(E[ln R(x,y)]) (mean field); diagonals are E[R(x,x)] in both cases.
std::vector<double> expected_rates(const Cim& cim, std::span<const double> weights, Cluster cluster,
                                   double rate_floor);

/// Child coupling term psi_n(x') at one grid point.
std::vector<double> compute_psi(const NetworkModel& model, const MarginalTrajectories& traj, int node,
                                std::size_t point, Cluster cluster = Cluster::Star, double rate_floor = 1e-10);

/// tau^u(x,y) = m(x) m^u R^u(x,y) rho(y)/rho(x), index (u*S + x)*S + y, with
/// diagonals set to minus the row sums.
std::vector<double> compute_tau(const Cim& cim, std::span<const double> weights, std::span<const double> m,
                                std::span<const double> rho);

/// Right-hand side of the forward equation for m given effective rates.
std::vector<double> master_drift(std::span<const double> m, std::span<const double> rho,
                                 std::span<const double> rates);

/// Coefficients of node n's linear equations at every grid point:
///   d rho/dt = -A rho,   d alpha/dt = A^T alpha,
/// where A(x,x) = E[R(x,x)] + psi(x) and A(x,y) is the effective rate.
struct NodeCoefficients {
  int states = 0;
  std::vector<double> generator;  // A, S*S per point
  std::vector<double> diagonal;   // E[R(x,x)], S per point
  std::vector<double> psi;        // S per point
  bool floored = false;           // mean field clipped a zero rate
};

NodeCoefficients node_coefficients(const NetworkModel& model, const MarginalTrajectories& view, int node,
                                   Cluster cluster, double rate_floor);

/// Integrates rho backward from T with multiplicative resets at observation times.
void backward_sweep(const NetworkModel& model, const GriddedEvidence& evidence, const MarginalTrajectories& view,
                    int node, NodeTrajectory& out, const InferenceConfig& config);

/// Integrates the forward equation given the node's current rho.
void forward_sweep(const NetworkModel& model, const GriddedEvidence& evidence, const MarginalTrajectories& view,
                   int node, NodeTrajectory& out, const InferenceConfig& config);

/// Backward then forward sweep of one node with its neighbours read from `view`.
/// Returns true if the mean-field rate floor was hit.
bool update_node(const NetworkModel& model, const GriddedEvidence& evidence, const MarginalTrajectories& view,
                 int node, NodeTrajectory& out, const InferenceConfig& config);

InferenceResult fixed_point(const NetworkModel& model, const ObservationSet& obs, const InferenceConfig& config);
InferenceResult fixed_point(const NetworkModel& model, const GriddedEvidence& evidence, const InferenceConfig& config,
                            const MarginalTrajectories* warm_start = nullptr);
InferenceResult mean_field_fixed_point(const NetworkModel& model, const ObservationSet& obs, InferenceConfig config);

struct NodeEnergy {
  double entropy = 0.0;  // H_n
  double energy = 0.0;   // E_n
};

struct EnergyBreakdown {
  std::vector<NodeEnergy> nodes;
  double likelihood = 0.0;  // F_0
  double initial = 0.0;     // sum_n KL-type term of m(0) against the initial prior
  double total = 0.0;
};

EnergyBreakdown variational_energy(const NetworkModel& model, const GriddedEvidence& evidence,
                                   const MarginalTrajectories& traj, const InferenceConfig& config);
EnergyBreakdown variational_energy(const NetworkModel& model, const ObservationSet& obs,
                                   const MarginalTrajectories& traj, const InferenceConfig& config);

/// H_n + E_n of one node, split into its two parts.
NodeEnergy node_energy(const NetworkModel& model, const MarginalTrajectories& traj, int node, Cluster cluster,
                       double rate_floor);

FamilyStats node_expected_stats(const NetworkModel& model, const MarginalTrajectories& traj, int node,
                                Cluster cluster = Cluster::Star, double rate_floor = 1e-10);
SufficientStats expected_stats(const NetworkModel& model, const MarginalTrajectories& traj,
                               Cluster cluster = Cluster::Star, double rate_floor = 1e-10);

struct InvariantReport {
  double max_normalization_error = 0.0;  // |sum_x m - 1|
  double max_flux_error = 0.0;           // forward drift vs continuity from tau
  double min_rho = 0.0;
};
InvariantReport check_invariants(const NetworkModel& model, const MarginalTrajectories& traj,
                                 Cluster cluster = Cluster::Star, double rate_floor = 1e-10);

/// Initial prior of every node (uniform when the config leaves it empty).
std::vector<std::vector<double>> initial_priors(const StateSpace& space, const InferenceConfig& config);

void write_marginals_csv(const std::string& path, const MarginalTrajectories& traj,
                         const std::vector<std::string>& header = {});

}  // namespace ctbn
