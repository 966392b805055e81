#include "doctest.h"

#include "ctbn/learning.hpp"
#include "ctbn/simulate.hpp"

#include <cmath>

using namespace ctbn;

namespace {

FamilyStats binary_stats(double m01, double t0, double m10 = 0.0, double t1 = 0.0) {
  FamilyStats s(2, 1);
  s.M(0, 0, 1) = m01;
  s.T(0, 0) = t0;
  s.M(0, 1, 0) = m10;
  s.T(0, 1) = t1;
  return s;
}

/// Sufficient statistics read straight off a fully observed path.
SufficientStats path_stats(const NetworkModel& m, const Trajectory& t) {
  auto s = SufficientStats::zeros(m);
  std::vector<int> state = t.initial;
  double last = 0.0;
  auto dwell = [&](double until) {
    for (int n = 0; n < m.size(); ++n) s.nodes[n].T(m.parent_config(n, state), state[n]) += until - last;
    last = until;
  };
  for (const auto& e : t.events) {
    dwell(e.time);
    s.nodes[e.node].M(m.parent_config(e.node, state), state[e.node], e.state) += 1.0;
    state[e.node] = e.state;
  }
  dwell(t.horizon);
  return s;
}

std::vector<ObservationSet> simulate_data(const NetworkModel& m, int D, double horizon, int count, double sigma,
                                          std::uint64_t seed) {
  std::vector<ObservationSet> out;
  ObservationPlan plan;
  plan.count = count;
  plan.sigma = sigma;
  for (int d = 0; d < D; ++d) {
    Rng r = substream(seed, static_cast<std::uint64_t>(d));
    std::vector<int> start(m.size());
    for (auto& x : start) x = static_cast<int>(r() % 2);
    const auto t = gillespie_sample(m, start, horizon, mix64(seed + 100 + d));
    out.push_back(make_observations(t, m.space(), plan, mix64(seed + 200 + d)));
  }
  return out;
}

}  // namespace

TEST_SUITE("learning") {
  TEST_CASE("maximum-likelihood rates") {
    const auto r = estimate_family_rates(binary_stats(2.0, 4.0, 1.0, 3.0));
    CHECK(r.cim.rate(0, 0, 1) == 0.5);
    CHECK(r.cim.rate(0, 1, 0) == doctest::Approx(1.0 / 3.0));
    CHECK_FALSE(r.unidentified[1]);

    const auto z = estimate_family_rates(FamilyStats(2, 2));
    for (const auto& c : z.cim.by_config) CHECK(c.cwiseAbs().maxCoeff() == 0.0);
    for (int u = 0; u < 2; ++u)
      for (int x = 0; x < 2; ++x) CHECK(z.unidentified[(u * 2 + x) * 2 + (1 - x)]);
  }

  TEST_CASE("complete-data rates recover a long Glauber path") {
    const auto m = glauber_model(Graph::from_edges(2, std::vector<std::pair<int, int>>{{0, 1}}), 1.0, 0.6);
    // At T = 500 the rarer transitions fire only ~40 times, so 10% is about one standard error.
    // Check that path against its own sampling error and the 10% bound on a path long enough to meet it.
    const auto t = gillespie_sample(m, {0, 0}, 500.0, 41);
    const auto s = path_stats(m, t);
    const auto rates = estimate_rates(s);
    const auto long_rates = estimate_rates(path_stats(m, gillespie_sample(m, {0, 0}, 20000.0, 41)));
    for (int n = 0; n < 2; ++n)
      for (int u = 0; u < m.cim(n).configs(); ++u)
        for (int x = 0; x < 2; ++x) {
          const double truth = m.cim(n).rate(u, x, 1 - x);
          const double se = truth / std::sqrt(truth * s.nodes[n].T(u, x));
          CHECK(std::abs(rates[n].cim.rate(u, x, 1 - x) - truth) < 4.0 * se);
          CHECK(std::abs(long_rates[n].cim.rate(u, x, 1 - x) - truth) < 0.1 * truth);
        }
  }

  TEST_CASE("posterior-mean rates") {
    const auto prior = FamilyPrior::uniform(2, 1, 5.0, 10.0);
    CHECK(posterior_family_rates(FamilyStats(2, 1), prior).rate(0, 0, 1) == 0.5);
    CHECK(posterior_family_rates(binary_stats(3.0, 2.0), prior).rate(0, 0, 1) == doctest::Approx(8.0 / 12.0));
    const auto pinned = FamilyPrior::uniform(2, 1, 0.7e12, 1e12);
    CHECK(posterior_family_rates(binary_stats(40.0, 3.0), pinned).rate(0, 0, 1) == doctest::Approx(0.7).epsilon(1e-9));
    for (double m : {0.0, 1e-9, 2.0, 1e6}) CHECK(posterior_family_rates(binary_stats(m, 1.0), prior).rate(0, 0, 1) > 0.0);
  }

  TEST_CASE("family score") {
    const auto prior = FamilyPrior::uniform(2, 2, 5.0, 10.0);
    CHECK(family_log_score(FamilyStats(2, 2), prior, 0.0) == 0.0);
    CHECK(family_log_score(FamilyStats(2, 2), prior, -3.25) == -3.25);

    // Single transition term with alpha = beta = M = T = 1: ln(Gamma(2) / 2^2).
    FamilyStats one(2, 1);
    one.M(0, 0, 1) = 1.0;
    one.T(0, 0) = 1.0;
    FamilyPrior p1 = FamilyPrior::uniform(2, 1, 1.0, 1.0);
    const double other = gamma_terms(FamilyStats(2, 1), p1);  // the untouched 1 -> 0 term is zero
    CHECK(other == 0.0);
    CHECK(gamma_terms(one, p1) == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
    CHECK(std::abs(gamma_terms(one, p1) + std::log(4.0)) < 1e-12);
  }

  TEST_CASE("Stirling energy") {
    const auto prior = FamilyPrior::uniform(2, 1, 50.0, 50.0);
    CHECK(stirling_energy(FamilyStats(2, 1), prior) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    const auto s = binary_stats(10.0, 10.0, 10.0, 10.0);
    CHECK(std::abs(stirling_energy(s, prior) - gamma_terms(s, prior)) < 0.05);
    CHECK(stirling_energy(binary_stats(10.0, 20.0, 10.0, 10.0), prior) < stirling_energy(s, prior));
    std::vector<std::string> warnings;
    stirling_energy(FamilyStats(2, 1), FamilyPrior::uniform(2, 1, 1.0, 1.0), &warnings);
    CHECK(warnings.size() == 1);
  }

  TEST_CASE("candidate families are ordered") {
    const auto c = candidate_families(4, 1, 2);
    const std::vector<std::vector<int>> expected{{}, {0}, {2}, {3}, {0, 2}, {0, 3}, {2, 3}};
    CHECK(c == expected);
    CHECK(candidate_families(1, 0, 3).size() == 1);
  }

  TEST_CASE("EM") {
    SUBCASE("starting at the truth stays near the truth") {
      const auto m = glauber_model(Graph::from_edges(2, std::vector<std::pair<int, int>>{{0, 1}}), 1.0, 0.6);
      const auto data = simulate_data(m, 10, 300.0, 3000, 0.0, 3);
      EmConfig cfg;
      cfg.inference.grid_step = 0.02;
      cfg.max_rounds = 1;
      const auto r = em_fit(m, data, cfg);
      for (int n = 0; n < 2; ++n)
        for (int u = 0; u < m.cim(n).configs(); ++u)
          for (int x = 0; x < 2; ++x) {
            const double truth = m.cim(n).rate(u, x, 1 - x);
            CHECK(std::abs(r.model.cim(n).rate(u, x, 1 - x) - truth) < 0.1 * truth);
          }
    }
    SUBCASE("a node pinned to one state loses its rate") {
      Cim c(2, 1);
      c.set_rate(0, 0, 1, 1.0);
      c.set_rate(0, 1, 0, 1.0);
      const NetworkModel m(StateSpace::binary(1), Graph(1), {c});
      ObservationSet obs;
      obs.horizon = 1.0;
      obs.model = NoiseModel::Noiseless;
      obs.add(0.0, 0, 1.0);
      obs.add(1.0, 0, 1.0);
      EmConfig cfg;
      cfg.inference.steps_per_segment = 200;
      cfg.max_rounds = 200;
      cfg.tolerance = 1e-6;
      const auto r = em_fit(m, {obs}, cfg);
      CHECK(r.model.cim(0).rate(0, 1, 0) < 0.02);
    }
    SUBCASE("five-node run has a finite energy trace") {
      Rng rng(4);
      const auto m = glauber_model(random_graph(5, 1, rng), 1.0, 0.6);
      const auto data = simulate_data(m, 10, 10.0, 10, 0.2, 5);
      EmConfig cfg;
      cfg.inference.grid_step = 0.02;
      cfg.inference.tolerance = 1e-6;
      cfg.use_prior = true;
      cfg.tolerance = 1e-3;
      cfg.max_rounds = 100;
      const auto r = em_fit(glauber_model(m.graph(), 0.5, 0.0), data, cfg);
      CHECK(r.converged);
      for (double f : r.energy_trace) CHECK(std::isfinite(f));
    }
  }

  TEST_CASE("marginal dynamics") {
    const Graph chain = Graph::from_edges(3, std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
    const auto space = StateSpace::binary(3);

    SUBCASE("self-consistent posterior rates without observations") {
      ObservationSet empty;
      empty.horizon = 2.0;
      MarginalConfig cfg;
      cfg.inference.steps_per_segment = 100;
      cfg.tolerance = 1e-9;
      cfg.max_rounds = 200;
      const auto r = marginal_dynamics(chain, space, {empty}, GammaPrior::uniform(space, chain, 5.0, 10.0), cfg);
      CHECK(r.converged);
      CHECK(r.residual < 1e-6);
    }
    SUBCASE("a very strong prior pins the rates") {
      const auto truth = glauber_model(chain, 1.0, 0.6);
      const auto data = simulate_data(truth, 2, 5.0, 10, 0.4, 8);
      // Gamma prior with mean R_true and beta = 1e10 per entry.
      GammaPrior prior = GammaPrior::uniform(space, chain, 1.0, 1e10);
      for (int n = 0; n < 3; ++n)
        for (int u = 0; u < truth.cim(n).configs(); ++u)
          for (int x = 0; x < 2; ++x) prior.nodes[n].alpha[u](x, 1 - x) = 1e10 * truth.cim(n).rate(u, x, 1 - x);
      MarginalConfig cfg;
      cfg.inference.grid_step = 0.01;
      cfg.inference.tolerance = 1e-10;
      const auto r = marginal_dynamics(chain, space, data, prior, cfg);
      for (std::size_t d = 0; d < data.size(); ++d) {
        const auto plain = fixed_point(truth, data[d], cfg.inference);
        double worst = 0.0;
        for (int n = 0; n < 3; ++n)
          for (std::size_t i = 0; i < plain.trajectories.nodes[n].m.size(); ++i)
            worst = std::max(worst, std::abs(plain.trajectories.nodes[n].m[i] - r.trajectories[d].nodes[n].m[i]));
        CHECK(worst < 1e-6);
      }
    }
    SUBCASE("noisy chain data converges quickly") {
      const auto truth = glauber_model(chain, 1.0, 0.6);
      const auto data = simulate_data(truth, 10, 10.0, 10, 0.2, 9);
      MarginalConfig cfg;
      cfg.inference.grid_step = 0.02;
      cfg.inference.tolerance = 1e-6;
      cfg.tolerance = 1e-4;
      cfg.max_rounds = 50;
      const auto r = marginal_dynamics(chain, space, data, GammaPrior::uniform(space, chain, 5.0, 10.0), cfg);
      CHECK(r.converged);
      CHECK(r.rounds <= 50);
    }
  }

  TEST_CASE("structure search") {
    LearnConfig cfg;
    cfg.marginal.inference.grid_step = 0.02;
    cfg.marginal.inference.tolerance = 1e-6;
    cfg.marginal.tolerance = 1e-4;

    SUBCASE("one node") {
      ObservationSet o;
      o.horizon = 1.0;
      o.model = NoiseModel::Gaussian;
      o.sigma = 0.3;
      o.add(0.5, 0, 0.9);
      const auto r = greedy_hill_climb(StateSpace::binary(1), {o}, cfg);
      CHECK(r.graph.edges().empty());
      CHECK(r.converged);
    }
    SUBCASE("strong coupling is recovered") {
      const auto truth = glauber_model(Graph::from_edges(2, std::vector<std::pair<int, int>>{{0, 1}}), 1.0, 2.0);
      const auto data = simulate_data(truth, 20, 10.0, 10, 0.1, 12);
      cfg.max_parents = 1;
      const auto r = greedy_hill_climb(truth.space(), data, cfg);
      CHECK(r.graph.parents(1) == std::vector<int>{0});
    }
    SUBCASE("true parent outscores the empty family") {
      const auto truth = glauber_model(Graph::from_edges(2, std::vector<std::pair<int, int>>{{0, 1}}), 1.0, 2.0);
      const auto space = truth.space();
      const Graph empty(2);
      for (int run = 0; run < 10; ++run) {
        const auto data = simulate_data(truth, 10, 10.0, 10, 0.1, 500 + run);
        const auto cur = marginal_dynamics(empty, space, data, GammaPrior::uniform(space, empty, 5.0, 10.0),
                                           cfg.marginal);
        const auto with = score_family(cur, space, data, 1, {0}, cfg);
        const auto without = score_family(cur, space, data, 1, {}, cfg);
        CHECK(with.log_score > without.log_score);
      }
    }
    SUBCASE("k = 0 keeps the empty graph and scores entropy only") {
      Rng rng(2);
      const auto truth = glauber_model(random_graph(3, 1, rng), 1.0, 0.6);
      const auto data = simulate_data(truth, 3, 5.0, 10, 0.2, 13);
      cfg.max_parents = 0;
      const auto r = greedy_hill_climb(truth.space(), data, cfg);
      CHECK(r.graph.edges().empty());
      for (int n = 0; n < 3; ++n) {
        REQUIRE(r.scores[n].size() == 1);
        const auto& f = r.scores[n][0];
        const auto prior = FamilyPrior::uniform(2, 1, cfg.alpha, cfg.beta);
        // The only family is the empty one, scored against the converged marginals of the empty graph.
        CHECK(f.parents.empty());
        CHECK(f.log_score == doctest::Approx(r.marginal.entropy[n] + gamma_terms(f.stats, prior)).epsilon(1e-3));
      }
    }
    SUBCASE("deterministic and modular") {
      Rng rng(6);
      const auto truth = glauber_model(random_graph(4, 1, rng), 1.0, 0.6);
      const auto data = simulate_data(truth, 4, 5.0, 10, 0.2, 14);
      cfg.max_parents = 1;
      const auto a = greedy_hill_climb(truth.space(), data, cfg);
      const auto b = greedy_hill_climb(truth.space(), data, cfg);
      CHECK(a.graph == b.graph);
      CHECK(a.edge_probability == b.edge_probability);
      // Each node's chosen family is the argmax of its own candidate list.
      for (int n = 0; n < 4; ++n) {
        double best = -INFINITY;
        for (const auto& f : a.scores[n]) best = std::max(best, f.log_score);
        bool found = false;
        for (const auto& f : a.scores[n]) found |= f.parents == a.history.back().parents(n) && f.log_score == best;
        CHECK(found);
      }
      for (int n = 0; n < 4; ++n) {
        double col = 0.0;
        for (int p = 0; p < 4; ++p) col += a.edge_probability[p][n];
        CHECK(col <= 1.0 + 1e-12);  // with k = 1 families are disjoint events
      }
    }
  }
}
