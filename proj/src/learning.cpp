#include "ctbn/learning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ctbn {

namespace {

void check_prior(const FamilyStats& stats, const FamilyPrior& prior) {
  if (prior.configs() != stats.configs) throw Error("prior: configuration count does not match the statistics");
  for (int u = 0; u < prior.configs(); ++u) {
    if (prior.alpha[u].rows() != stats.states || prior.beta[u].size() != stats.states) {
      throw Error("prior: state count does not match the statistics");
    }
    for (int x = 0; x < stats.states; ++x) {
      if (!(prior.beta[u][x] > 0.0)) throw Error("prior: beta must be positive");
      for (int y = 0; y < stats.states; ++y) {
        if (x != y && !(prior.alpha[u](x, y) > 0.0)) throw Error("prior: alpha must be positive");
      }
    }
  }
}

Cim prior_mean(const FamilyPrior& prior, int states) {
  Cim c(states, prior.configs());
  for (int u = 0; u < prior.configs(); ++u) {
    for (int x = 0; x < states; ++x) {
      for (int y = 0; y < states; ++y) {
        if (x != y) c.by_config[u](x, y) = prior.alpha[u](x, y) / prior.beta[u][x];
      }
    }
  }
  c.fix_diagonals();
  return c;
}

double rate_distance(const Cim& a, const Cim& b) {
  double d = 0.0;
  for (int u = 0; u < a.configs(); ++u) d = std::max(d, (a.by_config[u] - b.by_config[u]).cwiseAbs().maxCoeff());
  return d;
}

std::vector<GriddedEvidence> grid_all(const StateSpace& space, const std::vector<ObservationSet>& data,
                                      const InferenceConfig& config) {
  if (data.empty()) throw Error("learning: empty dataset");
  std::vector<GriddedEvidence> out;
  out.reserve(data.size());
  for (const auto& obs : data) out.push_back(GriddedEvidence::build(space, obs, config.grid_step, config.steps_per_segment));
  return out;
}

MarginalResult marginal_dynamics_impl(const Graph& graph, const StateSpace& space,
                                      const std::vector<GriddedEvidence>& evidence, const GammaPrior& prior,
                                      const MarginalConfig& config, const std::vector<Cim>* initial,
                                      const std::vector<MarginalTrajectories>* warm_start) {
  if (static_cast<int>(prior.nodes.size()) != space.size()) throw Error("marginal_dynamics: prior has wrong node count");
  std::vector<Cim> cims;
  if (initial) {
    cims = *initial;
  } else {
    for (int n = 0; n < space.size(); ++n) cims.push_back(prior_mean(prior.nodes[n], space.cardinality(n)));
  }
  MarginalResult res;
  if (warm_start && warm_start->size() == evidence.size()) res.trajectories = *warm_start;
  else res.trajectories.assign(evidence.size(), MarginalTrajectories{});

  for (int round = 1; round <= config.max_rounds; ++round) {
    NetworkModel model(space, graph, cims);
    SufficientStats stats = SufficientStats::zeros(model);
    bool inner_failed = false;
    for (std::size_t d = 0; d < evidence.size(); ++d) {
      const bool warm = res.trajectories[d].grid.points() == evidence[d].grid.points() && !res.trajectories[d].nodes.empty();
      auto fp = fixed_point(model, evidence[d], config.inference, warm ? &res.trajectories[d] : nullptr);
      if (!fp.report.converged) inner_failed = true;
      res.trajectories[d] = std::move(fp.trajectories);
      stats += expected_stats(model, res.trajectories[d], config.inference.cluster, config.inference.rate_floor);
    }
    const auto next = posterior_rates(stats, prior);
    double residual = 0.0;
    for (int n = 0; n < space.size(); ++n) residual = std::max(residual, rate_distance(next[n], cims[n]));
    res.rounds = round;
    res.residual = residual;
    res.stats = std::move(stats);
    res.model = std::move(model);
    if (inner_failed && round == config.max_rounds) res.warnings.push_back("inner fixed point not converged");
    if (residual < config.tolerance) {
      res.converged = true;
      break;
    }
    cims = next;
  }
  res.entropy.assign(space.size(), 0.0);
  for (const auto& tr : res.trajectories) {
    for (int n = 0; n < space.size(); ++n) {
      res.entropy[n] += node_energy(res.model, tr, n, config.inference.cluster, config.inference.rate_floor).entropy;
    }
  }
  if (!res.converged) {
    std::ostringstream msg;
    msg << "marginal dynamics not converged after " << res.rounds << " rounds (residual " << res.residual << ")";
    res.warnings.push_back(msg.str());
  }
  return res;
}

FamilyScore score_family_impl(const MarginalResult& current, const StateSpace& space,
                              const std::vector<GriddedEvidence>& evidence, int node, const std::vector<int>& parents,
                              const LearnConfig& config) {
  FamilyScore fs;
  fs.node = node;
  fs.parents = parents;
  try {
    Graph g = current.model.graph();
    g.set_parents(node, parents);
    int configs = 1;
    for (int p : parents) configs *= space.cardinality(p);
    const auto prior = FamilyPrior::uniform(space.cardinality(node), configs, config.alpha, config.beta);
    std::vector<Cim> cims = current.model.cims();
    cims[node] = prior_mean(prior, space.cardinality(node));

    std::vector<MarginalTrajectories> traj = current.trajectories;
    const auto& inf = config.marginal.inference;
    FamilyStats stats;
    bool converged = false;
    for (int round = 1; round <= config.marginal.max_rounds; ++round) {
      const NetworkModel model(space, g, cims);
      stats = FamilyStats(space.cardinality(node), configs);
      for (std::size_t d = 0; d < evidence.size(); ++d) {
        // With neighbours frozen, one backward/forward pass is the exact node optimum.
        update_node(model, evidence[d], traj[d], node, traj[d].nodes[node], inf);
        stats += node_expected_stats(model, traj[d], node, inf.cluster, inf.rate_floor);
      }
      const Cim next = posterior_family_rates(stats, prior);
      const double residual = rate_distance(next, cims[node]);
      if (residual < config.marginal.tolerance) {
        converged = true;
        break;
      }
      cims[node] = next;
    }
    const NetworkModel model(space, g, cims);
    double entropy = 0.0;
    for (const auto& tr : traj) entropy += node_energy(model, tr, node, inf.cluster, inf.rate_floor).entropy;
    fs.log_score = family_log_score(stats, prior, entropy);
    fs.stats = std::move(stats);
    if (!converged) fs.error = "posterior rates not self-consistent within the round limit";
  } catch (const Error& e) {
    fs.failed = true;
    fs.error = e.what();
    fs.log_score = -std::numeric_limits<double>::infinity();
  }
  return fs;
}

void combinations(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out, int skip) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < n; ++i) {
    if (i == skip) continue;
    cur.push_back(i);
    combinations(n, k, i + 1, cur, out, skip);
    cur.pop_back();
  }
}

}  // namespace

FamilyRates estimate_family_rates(const FamilyStats& stats) {
  FamilyRates out{Cim(stats.states, stats.configs), std::vector<bool>(stats.transitions.size(), false)};
  for (int u = 0; u < stats.configs; ++u) {
    for (int x = 0; x < stats.states; ++x) {
      const double t = stats.T(u, x);
      for (int y = 0; y < stats.states; ++y) {
        if (x == y) continue;
        const double m = stats.M(u, x, y);
        if (t > 0.0) {
          out.cim.by_config[u](x, y) = m / t;
        } else if (m > 0.0) {
          throw Error("estimate_rates: transitions recorded with zero dwell time");
        } else {
          out.unidentified[static_cast<std::size_t>((u * stats.states + x) * stats.states + y)] = true;
        }
      }
    }
  }
  out.cim.fix_diagonals();
  return out;
}

std::vector<FamilyRates> estimate_rates(const SufficientStats& stats) {
  std::vector<FamilyRates> out;
  for (const auto& f : stats.nodes) out.push_back(estimate_family_rates(f));
  return out;
}

Cim posterior_family_rates(const FamilyStats& stats, const FamilyPrior& prior) {
  check_prior(stats, prior);
  Cim c(stats.states, stats.configs);
  for (int u = 0; u < stats.configs; ++u) {
    for (int x = 0; x < stats.states; ++x) {
      for (int y = 0; y < stats.states; ++y) {
        if (x != y) c.by_config[u](x, y) = (stats.M(u, x, y) + prior.alpha[u](x, y)) / (stats.T(u, x) + prior.beta[u][x]);
      }
    }
  }
  c.fix_diagonals();
  return c;
}

std::vector<Cim> posterior_rates(const SufficientStats& stats, const GammaPrior& prior) {
  if (stats.nodes.size() != prior.nodes.size()) throw Error("posterior_rates: prior has wrong node count");
  std::vector<Cim> out;
  for (std::size_t n = 0; n < stats.nodes.size(); ++n) out.push_back(posterior_family_rates(stats.nodes[n], prior.nodes[n]));
  return out;
}

double gamma_terms(const FamilyStats& stats, const FamilyPrior& prior) {
  check_prior(stats, prior);
  double s = 0.0;
  for (int u = 0; u < stats.configs; ++u) {
    for (int x = 0; x < stats.states; ++x) {
      const double b = prior.beta[u][x];
      const double t = stats.T(u, x);
      for (int y = 0; y < stats.states; ++y) {
        if (x == y) continue;
        const double a = prior.alpha[u](x, y);
        const double m = stats.M(u, x, y);
        s += a * std::log(b) - std::lgamma(a) + std::lgamma(m + a) - (m + a) * std::log(t + b);
      }
    }
  }
  return s;
}

double family_log_score(const FamilyStats& stats, const FamilyPrior& prior, double entropy) {
  return entropy + gamma_terms(stats, prior);
}

double stirling_energy(const FamilyStats& stats, const FamilyPrior& prior, std::vector<std::string>* warnings) {
  check_prior(stats, prior);
  double s = 0.0;
  bool small = false;
  for (int u = 0; u < stats.configs; ++u) {
    for (int x = 0; x < stats.states; ++x) {
      const double b = prior.beta[u][x];
      const double t = stats.T(u, x);
      for (int y = 0; y < stats.states; ++y) {
        if (x == y) continue;
        const double a = prior.alpha[u](x, y);
        const double m = stats.M(u, x, y);
        small = small || m + a < 5.0;
        s += (m + a - 0.5) * std::log(m + a) - (a - 0.5) * std::log(a) + a * std::log(b) - (m + a) * std::log(t + b) - m;
      }
    }
  }
  if (small && warnings) warnings->push_back("Stirling approximation used with E[M] + alpha < 5");
  return s;
}

EmResult em_fit(const NetworkModel& initial, const std::vector<ObservationSet>& data, const EmConfig& config) {
  const auto& space = initial.space();
  const auto evidence = grid_all(space, data, config.inference);
  const auto prior = GammaPrior::uniform(space, initial.graph(), config.alpha, config.beta);
  EmResult res;
  res.model = initial;
  std::vector<MarginalTrajectories> traj(evidence.size());
  bool inner_failed = false;
  for (int round = 1; round <= config.max_rounds; ++round) {
    SufficientStats stats = SufficientStats::zeros(res.model);
    double energy = 0.0;
    for (std::size_t d = 0; d < evidence.size(); ++d) {
      const bool warm = !traj[d].nodes.empty();
      auto fp = fixed_point(res.model, evidence[d], config.inference, warm ? &traj[d] : nullptr);
      inner_failed = inner_failed || !fp.report.converged;
      traj[d] = std::move(fp.trajectories);
      stats += expected_stats(res.model, traj[d], config.inference.cluster, config.inference.rate_floor);
      energy += variational_energy(res.model, evidence[d], traj[d], config.inference).total;
    }
    res.energy_trace.push_back(energy);
    std::vector<Cim> next;
    if (config.use_prior) {
      next = posterior_rates(stats, prior);
    } else {
      for (auto& fr : estimate_rates(stats)) next.push_back(std::move(fr.cim));
    }
    double change = 0.0;
    for (int n = 0; n < space.size(); ++n) change = std::max(change, rate_distance(next[n], res.model.cim(n)));
    res.model = NetworkModel(space, initial.graph(), next);
    res.rounds = round;
    if (change < config.tolerance) {
      res.converged = true;
      break;
    }
  }
  if (inner_failed) res.warnings.push_back("an E-step fixed point did not converge");
  if (!res.converged) res.warnings.push_back("EM not converged within the round limit");
  return res;
}

MarginalResult marginal_dynamics(const Graph& graph, const StateSpace& space, const std::vector<ObservationSet>& data,
                                 const GammaPrior& prior, const MarginalConfig& config, const std::vector<Cim>* initial,
                                 const std::vector<MarginalTrajectories>* warm_start) {
  const auto evidence = grid_all(space, data, config.inference);
  return marginal_dynamics_impl(graph, space, evidence, prior, config, initial, warm_start);
}

FamilyScore score_family(const MarginalResult& current, const StateSpace& space,
                         const std::vector<ObservationSet>& data, int node, const std::vector<int>& parents,
                         const LearnConfig& config) {
  const auto evidence = grid_all(space, data, config.marginal.inference);
  return score_family_impl(current, space, evidence, node, parents, config);
}

std::vector<std::vector<int>> candidate_families(int nodes, int node, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  for (int size = 0; size <= std::min(k, nodes - 1); ++size) combinations(nodes, size, 0, cur, out, node);
  return out;
}

std::vector<std::vector<double>> edge_probabilities(int nodes, const std::vector<std::vector<FamilyScore>>& scores) {
  std::vector<std::vector<double>> p(nodes, std::vector<double>(nodes, 0.0));
  for (const auto& fam : scores) {
    if (fam.empty()) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& f : fam) mx = std::max(mx, f.log_score);
    if (!std::isfinite(mx)) continue;
    double z = 0.0;
    for (const auto& f : fam) z += std::exp(f.log_score - mx);
    for (const auto& f : fam) {
      const double w = std::exp(f.log_score - mx) / z;
      for (int par : f.parents) p[par][f.node] += w;
    }
  }
  for (auto& row : p) {
    for (double& v : row) v = std::min(v, 1.0);
  }
  return p;
}

LearnResult greedy_hill_climb(const StateSpace& space, const std::vector<ObservationSet>& data,
                              const LearnConfig& config) {
  if (config.max_parents < 0) throw Error("greedy_hill_climb: k must be non-negative");
  const int n_nodes = space.size();
  const auto evidence = grid_all(space, data, config.marginal.inference);
  Graph graph(n_nodes);
  auto prior_for = [&](const Graph& g) { return GammaPrior::uniform(space, g, config.alpha, config.beta); };
  MarginalResult current = marginal_dynamics_impl(graph, space, evidence, prior_for(graph), config.marginal, nullptr, nullptr);

  LearnResult res;
  for (const auto& w : current.warnings) res.warnings.push_back(w);
  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    Graph next(n_nodes);
    res.scores.assign(n_nodes, {});
    for (int n = 0; n < n_nodes; ++n) {
      const FamilyScore* best = nullptr;
      for (const auto& fam : candidate_families(n_nodes, n, config.max_parents)) {
        res.scores[n].push_back(score_family_impl(current, space, evidence, n, fam, config));
        const auto& fs = res.scores[n].back();
        if (fs.failed) res.warnings.push_back("family scoring failed: " + fs.error);
      }
      // Candidates are ordered smaller-first then lexicographic, so a strict
      // comparison keeps the preferred family on ties.
      for (const auto& fs : res.scores[n]) {
        if (!best || fs.log_score > best->log_score) best = &fs;
      }
      next.set_parents(n, best->parents);
    }
    res.sweeps = sweep;
    res.history.push_back(next);
    if (next == graph) {
      res.converged = true;
      break;
    }
    graph = next;
    // Re-solve with fresh rates: the old posterior rates belong to other parent sets.
    current = marginal_dynamics_impl(graph, space, evidence, prior_for(graph), config.marginal, nullptr,
                                     &current.trajectories);
    for (const auto& w : current.warnings) res.warnings.push_back(w);
  }
  res.graph = graph;
  res.marginal = std::move(current);
  res.edge_probability = edge_probabilities(n_nodes, res.scores);
  if (!res.converged) res.warnings.push_back("structure search stopped at the sweep limit");
  return res;
}

}  // namespace ctbn
