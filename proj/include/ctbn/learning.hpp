#pragma once

#include "ctbn/model.hpp"
#include "ctbn/observations.hpp"
#include "ctbn/star.hpp"
#include "ctbn/stats.hpp"

#include <limits>
#include <string>
#include <vector>

namespace ctbn {

/// Maximum-likelihood rates E[M]/E[T]. `unidentified` marks entries, index
/// (u*S + x)*S + y, for which neither dwell time nor transitions were seen.
struct FamilyRates {
  Cim cim;
  std::vector<bool> unidentified;
};
FamilyRates estimate_family_rates(const FamilyStats& stats);
std::vector<FamilyRates> estimate_rates(const SufficientStats& stats);

/// Posterior-mean rates (E[M] + alpha) / (E[T] + beta).
Cim posterior_family_rates(const FamilyStats& stats, const FamilyPrior& prior);
std::vector<Cim> posterior_rates(const SufficientStats& stats, const GammaPrior& prior);

/// Sum over transitions of alpha ln beta - ln G(alpha) + ln G(M + alpha) - (M + alpha) ln(T + beta).
double gamma_terms(const FamilyStats& stats, const FamilyPrior& prior);
double family_log_score(const FamilyStats& stats, const FamilyPrior& prior, double entropy);

/// Stirling form of gamma_terms. Appends a warning when some E[M] + alpha < 5.
double stirling_energy(const FamilyStats& stats, const FamilyPrior& prior, std::vector<std::string>* warnings = nullptr);

struct EmConfig {
  InferenceConfig inference;
  int max_rounds = 50;
  double tolerance = 1e-4;   // sup-norm change of the rates between rounds
  bool use_prior = false;    // posterior-mean M-step instead of maximum likelihood
  double alpha = 5.0;
  double beta = 10.0;
};

struct EmResult {
  NetworkModel model;
  std::vector<double> energy_trace;  // summed F_S after each E-step
  int rounds = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Alternates the variational E-step with a rate M-step, starting from `initial`.
EmResult em_fit(const NetworkModel& initial, const std::vector<ObservationSet>& data, const EmConfig& config);

struct MarginalConfig {
  InferenceConfig inference;
  int max_rounds = 100;
  double tolerance = 1e-6;  // sup-norm |R - (E[M]+alpha)/(E[T]+beta)|
};

struct MarginalResult {
  NetworkModel model;  // carries the posterior rates used in the last inference
  std::vector<MarginalTrajectories> trajectories;
  SufficientStats stats;  // pooled over trajectories
  std::vector<double> entropy;  // per node, summed over trajectories
  double residual = std::numeric_limits<double>::infinity();
  int rounds = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Parameter-free posterior dynamics: inference with the running posterior
/// rates, iterated to self-consistency. `initial` defaults to the prior mean.
MarginalResult marginal_dynamics(const Graph& graph, const StateSpace& space, const std::vector<ObservationSet>& data,
                                 const GammaPrior& prior, const MarginalConfig& config,
                                 const std::vector<Cim>* initial = nullptr,
                                 const std::vector<MarginalTrajectories>* warm_start = nullptr);

struct FamilyScore {
  int node = 0;
  std::vector<int> parents;
  double log_score = -std::numeric_limits<double>::infinity();
  FamilyStats stats;
  bool failed = false;
  std::string error;
};

struct LearnConfig {
  MarginalConfig marginal;
  int max_parents = 1;  // k
  int max_sweeps = 10;
  double alpha = 5.0;
  double beta = 10.0;
};

struct LearnResult {
  Graph graph;
  std::vector<Graph> history;                    // graph after every sweep
  std::vector<std::vector<FamilyScore>> scores;  // last sweep, per node
  std::vector<std::vector<double>> edge_probability;  // [from][to]
  int sweeps = 0;
  bool converged = false;
  MarginalResult marginal;  // marginal dynamics on the final graph
  std::vector<std::string> warnings;
};

/// Scores one candidate family of `node` against frozen neighbour marginals.
FamilyScore score_family(const MarginalResult& current, const StateSpace& space,
                         const std::vector<ObservationSet>& data, int node, const std::vector<int>& parents,
                         const LearnConfig& config);

/// All parent sets of `node` with at most k members, smallest first, then lexicographic.
std::vector<std::vector<int>> candidate_families(int nodes, int node, int k);

LearnResult greedy_hill_climb(const StateSpace& space, const std::vector<ObservationSet>& data,
                              const LearnConfig& config);

/// Per-node softmax over family scores, summed over families containing each edge.
std::vector<std::vector<double>> edge_probabilities(int nodes, const std::vector<std::vector<FamilyScore>>& scores);

}  // namespace ctbn
