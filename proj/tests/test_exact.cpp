#include "doctest.h"
#include "oracles.hpp"

#include "ctbn/benchmark.hpp"
#include "ctbn/exact.hpp"
#include "ctbn/simulate.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>

using namespace ctbn;

namespace {

NetworkModel single_node(double q01, double q10) {
  Cim c(2, 1);
  c.set_rate(0, 0, 1, q01);
  c.set_rate(0, 1, 0, q10);
  return NetworkModel(StateSpace::binary(1), Graph(1), {c});
}

double normal_pdf(double y, double mean, double sigma) {
  const double z = (y - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// Oracle evidence list for Gaussian readouts of binary nodes.
std::vector<oracle::Evidence> gaussian_evidence(const ObservationSet& obs, int nodes) {
  std::vector<oracle::Evidence> out;
  for (const auto& o : obs.entries) {
    if (out.empty() || std::abs(out.back().time - o.time) > 1e-12) {
      out.push_back({o.time, std::vector<std::vector<double>>(nodes)});
    }
    auto& v = out.back().per_node[o.node];
    const std::vector<double> l{normal_pdf(o.value, -1.0, obs.sigma), normal_pdf(o.value, 1.0, obs.sigma)};
    if (v.empty()) v = l;
    else for (int x = 0; x < 2; ++x) v[x] *= l[x];
  }
  return out;
}

Eigen::VectorXd uniform_joint(int nodes) {
  const auto size = static_cast<Eigen::Index>(1) << nodes;
  return Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(size));
}

}  // namespace

TEST_SUITE("exact") {
  TEST_CASE("two-state relaxation from a pure start") {
    const auto m = single_node(1.0, 1.0);
    ObservationSet obs;
    obs.horizon = 1.0;
    ExactConfig cfg;
    cfg.steps_per_segment = 1000;
    cfg.initial_distribution = {{1.0, 0.0}};
    const auto post = exact_smoothing(m, obs, cfg);
    const double expected = oracle::two_state_p1(1.0, 1.0, 0.0, 0.5);
    CHECK(expected == doctest::Approx((1.0 - std::exp(-1.0)) / 2.0));
    std::size_t half = 0;
    while (post.grid.times[half] < 0.5 - 1e-12) ++half;
    CHECK(post.node_marginals[0][half * 2 + 1] == doctest::Approx(expected).epsilon(1e-10));
    CHECK(std::abs(post.log_evidence) < 1e-12);
  }

  TEST_CASE("stationary start stays put") {
    const auto m = single_node(1.0, 3.0);
    ObservationSet obs;
    obs.horizon = 2.0;
    ExactConfig cfg;
    cfg.initial_distribution = {{0.75, 0.25}};
    const auto post = exact_smoothing(m, obs, cfg);
    for (std::size_t p = 0; p < post.grid.times.size(); ++p)
      CHECK(std::abs(post.node_marginals[0][2 * p + 1] - 0.25) < 1e-12);
  }

  TEST_CASE("noiseless observation of a state with prior mass one quarter") {
    const auto m = glauber_model(Graph(2), 1.0, 0.0);
    ObservationSet obs;
    obs.horizon = 1.0;
    obs.model = NoiseModel::Noiseless;
    obs.add(0.0, 0, 1.0);
    obs.add(0.0, 1, -1.0);
    CHECK(exact_evidence(m, obs, ExactConfig{}) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
  }

  TEST_CASE("no observations give zero log evidence") {
    const auto m = glauber_model(tree_graph(4), 2.0, 0.7);
    ObservationSet obs;
    obs.horizon = 1.5;
    CHECK(std::abs(exact_evidence(m, obs, ExactConfig{})) < 1e-12);
  }

  TEST_CASE("independent nodes factorize the evidence") {
    Cim a(2, 1), b(2, 1);
    a.set_rate(0, 0, 1, 0.7);
    a.set_rate(0, 1, 0, 1.9);
    b.set_rate(0, 0, 1, 2.2);
    b.set_rate(0, 1, 0, 0.4);
    const NetworkModel joint(StateSpace::binary(2), Graph(2), {a, b});
    const NetworkModel ma(StateSpace::binary(1), Graph(1), {a});
    const NetworkModel mb(StateSpace::binary(1), Graph(1), {b});
    ObservationSet both, oa, ob;
    for (auto* o : {&both, &oa, &ob}) {
      o->horizon = 2.0;
      o->model = NoiseModel::Gaussian;
      o->sigma = 0.6;
    }
    both.add(0.3, 0, 0.8);
    oa.add(0.3, 0, 0.8);
    both.add(1.1, 1, -0.4);
    ob.add(1.1, 0, -0.4);
    both.add(1.7, 0, -1.2);
    oa.add(1.7, 0, -1.2);
    both.sort();
    const double lj = exact_evidence(joint, both, ExactConfig{});
    CHECK(lj == doctest::Approx(exact_evidence(ma, oa, ExactConfig{}) + exact_evidence(mb, ob, ExactConfig{}))
                    .epsilon(1e-10));
  }

  TEST_CASE("matches dense matrix-exponential smoothing") {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
      const int N = 3 + trial % 2;
      const auto m = glauber_model(random_graph(N, 2, rng), 1.0 + 0.3 * trial, 0.6);
      const auto t = gillespie_sample(m, std::vector<int>(N, 1), 3.0, 100 + trial);
      ObservationPlan plan;
      plan.count = 4;
      plan.sigma = 0.5;
      const auto obs = make_observations(t, m.space(), plan, 200 + trial);
      ExactConfig cfg;
      cfg.steps_per_segment = 20;
      const auto post = exact_smoothing(m, obs, cfg);
      std::vector<double> queries;
      for (std::size_t p = 0; p < post.grid.times.size(); p += 7) queries.push_back(post.grid.times[p]);
      const auto ref = oracle::dense_smoother(m, uniform_joint(N), gaussian_evidence(obs, N), 3.0, queries);
      CHECK(post.log_evidence == doctest::Approx(ref.log_evidence).epsilon(1e-9));
      for (std::size_t k = 0; k < queries.size(); ++k) {
        // Evidence times appear twice on the grid; the second copy includes the readout.
        std::size_t p = 0;
        while (p + 1 < post.grid.times.size() && post.grid.times[p + 1] <= queries[k]) ++p;
        for (int n = 0; n < N; ++n)
          CHECK(std::abs(post.node_marginals[n][2 * p + 1] - ref.marginals[k][n][1]) < 1e-9);
      }
    }
  }

  TEST_CASE("zero observations reproduce forward propagation") {
    const auto m = glauber_model(periodic_chain_graph(4), 1.5, 0.8);
    ObservationSet obs;
    obs.horizon = 2.0;
    ExactConfig cfg;
    cfg.initial_distribution = {{0.9, 0.1}, {0.2, 0.8}, {0.5, 0.5}, {0.3, 0.7}};
    const auto post = exact_smoothing(m, obs, cfg);
    const auto prior = exact_prior_marginals(m, 2.0, cfg);
    double worst = 0.0;
    for (int n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < prior[n].size(); ++i)
        worst = std::max(worst, std::abs(prior[n][i] - post.node_marginals[n][i]));
    CHECK(worst < 1e-6);
  }

  TEST_CASE("uninformative readouts leave the evidence unchanged") {
    const auto m = glauber_model(tree_graph(3), 2.0, 0.5);
    ObservationSet obs;
    obs.horizon = 1.0;
    obs.model = NoiseModel::Gaussian;
    obs.sigma = 0.5;
    obs.add(0.4, 1, 0.7);
    const double base = exact_evidence(m, obs, ExactConfig{});
    // y = 0 is equidistant from both spins; the constant density factor is removed below.
    obs.add(0.65, 2, 0.0);
    obs.sort();
    const double with_dummy = exact_evidence(m, obs, ExactConfig{}) - std::log(normal_pdf(0.0, 1.0, 0.5));
    CHECK(with_dummy == doctest::Approx(base).epsilon(1e-10));
  }

  TEST_CASE("grid refinement barely moves the evidence") {
    const auto fig = run_figure2(Figure2Config{});
    const auto ev_fine = GriddedEvidence::build(fig.model.space(), fig.observations, 5e-4, 0);
    const auto ev_coarse = GriddedEvidence::build(fig.model.space(), fig.observations, 1e-3, 0);
    const double fine = exact_evidence(fig.model, ev_fine, ExactConfig{});
    const double coarse = exact_evidence(fig.model, ev_coarse, ExactConfig{});
    CHECK(std::abs(fine - coarse) < 1e-4);
  }

  TEST_CASE("expected statistics") {
    SUBCASE("symmetric unit rate, uniform start") {
      const auto m = single_node(1.0, 1.0);
      ObservationSet obs;
      obs.horizon = 1.0;
      ExactConfig cfg;
      cfg.steps_per_segment = 400;
      const auto s = exact_expected_stats(m, exact_smoothing(m, obs, cfg));
      CHECK(s.nodes[0].M(0, 0, 1) == doctest::Approx(0.5).epsilon(1e-8));
      CHECK(s.nodes[0].T(0, 0) == doctest::Approx(0.5).epsilon(1e-10));
    }
    SUBCASE("zero rates give no transitions") {
      const auto m = single_node(0.0, 0.0);
      ObservationSet obs;
      obs.horizon = 1.0;
      const auto s = exact_expected_stats(m, exact_smoothing(m, obs, ExactConfig{}));
      for (double v : s.nodes[0].transitions) CHECK(v == 0.0);
    }
    SUBCASE("dwell times partition the horizon") {
      const auto m = glauber_model(tree_graph(5), 3.0, 0.9);
      const auto obs = figure3_evidence(5, 1.0);
      const auto s = exact_expected_stats(m, exact_smoothing(m, obs, ExactConfig{}));
      for (const auto& f : s.nodes) CHECK(f.total_time() == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("prior transition counts agree with simulation") {
      const auto m = glauber_model(Graph::from_edges(2, std::vector<std::pair<int, int>>{{0, 1}}), 2.0, 0.9);
      ObservationSet obs;
      obs.horizon = 1.0;
      ExactConfig cfg;
      cfg.initial_distribution = {{1.0, 0.0}, {1.0, 0.0}};
      const auto s = exact_expected_stats(m, exact_smoothing(m, obs, cfg));
      // Monte Carlo estimate of the child's transition count 0 -> 1 under parent state 0.
      const int runs = 40000;
      double count = 0.0, sq = 0.0;
      for (int r = 0; r < runs; ++r) {
        const auto t = gillespie_sample(m, {0, 0}, 1.0, 5000 + r);
        std::vector<int> st = t.initial;
        int c = 0;
        for (const auto& e : t.events) {
          if (e.node == 1 && st[0] == 0 && st[1] == 0) ++c;
          st[e.node] = e.state;
        }
        count += c;
        sq += c * c;
      }
      const double mean = count / runs;
      const double se = std::sqrt((sq / runs - mean * mean) / runs);
      CHECK(std::abs(s.nodes[1].M(0, 0, 1) - mean) < 4.0 * se);
    }
  }

  TEST_CASE("joint cap is enforced") {
    const auto m = glauber_model(Graph(13), 1.0, 0.5);
    ObservationSet obs;
    obs.horizon = 1.0;
    CHECK_THROWS_AS(exact_smoothing(m, obs, ExactConfig{}), Error);
  }

  TEST_CASE("golden evidence of the eight-node tree") {
    std::ifstream in(CTBN_TEST_DATA "/golden_tree_evidence.json");
    REQUIRE(in.good());
    const auto golden = nlohmann::json::parse(in);
    const auto m = glauber_model(tree_graph(8), golden.at("a").get<double>(), golden.at("b").get<double>());
    const auto obs = figure3_evidence(8, golden.at("T").get<double>());
    ExactConfig cfg;
    cfg.grid_step = golden.at("grid_step").get<double>();
    CHECK(exact_evidence(m, obs, cfg) == doctest::Approx(golden.at("log_evidence").get<double>()).epsilon(1e-10));
  }
}
