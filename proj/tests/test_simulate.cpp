#include "doctest.h"

#include "ctbn/observations.hpp"
#include "ctbn/simulate.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <tuple>

using namespace ctbn;

namespace {

NetworkModel single_node(double q01, double q10) {
  Cim c(2, 1);
  c.set_rate(0, 0, 1, q01);
  c.set_rate(0, 1, 0, q10);
  return NetworkModel(StateSpace::binary(1), Graph(1), {c});
}

}  // namespace

TEST_SUITE("simulate") {
  TEST_CASE("zero rates never jump") {
    const auto m = single_node(0.0, 0.0);
    const auto t = gillespie_sample(m, {1}, 100.0, 9);
    CHECK(t.events.empty());
    CHECK(t.state_at(50.0) == std::vector<int>{1});
  }

  TEST_CASE("exponential dwell times at flip rate 2") {
    const auto m = single_node(2.0, 2.0);
    // 10,000 events need a horizon around 5,000 at total rate 2.
    const auto t = gillespie_sample(m, {0}, 5200.0, 21);
    REQUIRE(t.events.size() >= 10000);
    const double mean = t.events[9999].time / 10000.0 - 0.0;
    // Dwell mean estimated from the first 10,000 completed dwells.
    double prev = 0.0, sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
      sum += t.events[i].time - prev;
      prev = t.events[i].time;
    }
    CHECK(sum / 10000.0 == doctest::Approx(mean));
    CHECK(std::abs(sum / 10000.0 - 0.5) < 0.02);
  }

  TEST_CASE("same seed gives the same path") {
    const auto m = glauber_model(tree_graph(7), 2.0, 0.5);
    const auto a = gillespie_sample(m, {0, 1, 0, 1, 0, 1, 0}, 10.0, 77);
    const auto b = gillespie_sample(m, {0, 1, 0, 1, 0, 1, 0}, 10.0, 77);
    CHECK(a == b);
    const auto c = gillespie_sample(m, {0, 1, 0, 1, 0, 1, 0}, 10.0, 78);
    CHECK_FALSE(a == c);
  }

  TEST_CASE("conditional dwell times match the CIM") {
    const Graph g = Graph::from_edges(3, std::vector<std::pair<int, int>>{{0, 1}, {2, 1}, {1, 2}});
    const auto m = glauber_model(g, 1.5, 0.7);
    const auto t = gillespie_sample(m, {0, 0, 0}, 4000.0, 5);
    // Collect completed dwells per (node, parent config, state).
    std::map<std::tuple<int, int, int>, std::vector<double>> dwells;
    std::vector<int> state = t.initial;
    std::vector<double> since(3, 0.0);
    std::vector<int> config(3);
    for (int n = 0; n < 3; ++n) config[n] = m.parent_config(n, state);
    for (const auto& e : t.events) {
      // A dwell of node n ends when n jumps or when its parent configuration changes.
      std::vector<int> next = state;
      next[e.node] = e.state;
      for (int n = 0; n < 3; ++n) {
        const int u = m.parent_config(n, next);
        if (n == e.node || u != config[n]) {
          if (n == e.node) dwells[{n, config[n], state[n]}].push_back(e.time - since[n]);
          else dwells[{n, config[n], state[n]}].push_back(-(e.time - since[n]));  // censored
          since[n] = e.time;
          config[n] = u;
        }
      }
      state = next;
    }
    int checked = 0;
    for (const auto& [key, list] : dwells) {
      const auto [n, u, x] = key;
      // Exposure / events is the exponential MLE and handles censoring.
      double exposure = 0.0;
      int events = 0;
      for (double d : list) {
        exposure += std::abs(d);
        events += d >= 0.0;
      }
      if (events < 200) continue;
      const double rate = -m.cim(n).rate(u, x, x);
      const double mean_dwell = exposure / events;
      const double se = (1.0 / rate) / std::sqrt(static_cast<double>(events));
      CHECK(std::abs(mean_dwell - 1.0 / rate) < 4.0 * se);
      ++checked;
    }
    CHECK(checked >= 6);
  }

  TEST_CASE("noiseless observations equal the latent states") {
    const auto m = glauber_model(tree_graph(3), 1.0, 0.5);
    const auto t = gillespie_sample(m, {1, 0, 1}, 5.0, 2);
    ObservationPlan plan;
    plan.count = 10;
    plan.sigma = 0.0;
    const auto obs = make_observations(t, m.space(), plan, 4);
    CHECK(obs.model == NoiseModel::Noiseless);
    REQUIRE(obs.entries.size() == 30);
    std::map<double, int> per_time;
    for (const auto& o : obs.entries) {
      CHECK(o.value == state_value(t.state_at(o.time)[o.node], 2));
      ++per_time[o.time];
    }
    CHECK(per_time.size() == 10);
    for (const auto& [time, count] : per_time) CHECK(count == 3);
  }

  TEST_CASE("Gaussian readout statistics") {
    Trajectory t;
    t.initial = {1};
    t.horizon = 1.0;
    ObservationPlan plan;
    plan.count = 10000;
    plan.sigma = 0.8;
    const auto obs = make_observations(t, StateSpace::binary(1), plan, 99);
    double s = 0.0, ss = 0.0;
    for (const auto& o : obs.entries) s += o.value;
    const double mean = s / 10000.0;
    for (const auto& o : obs.entries) ss += (o.value - mean) * (o.value - mean);
    CHECK(std::abs(mean - 1.0) < 0.03);
    CHECK(std::abs(std::sqrt(ss / 9999.0) - 0.8) < 0.03);
  }

  TEST_CASE("observations depend only on trajectory, plan and seed") {
    const auto m = glauber_model(tree_graph(3), 1.0, 0.5);
    const auto t = gillespie_sample(m, {1, 0, 1}, 5.0, 2);
    ObservationPlan plan;
    const auto a = make_observations(t, m.space(), plan, 4);
    const auto b = make_observations(t, m.space(), plan, 4);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      CHECK(a.entries[i].time == b.entries[i].time);
      CHECK(a.entries[i].value == b.entries[i].value);
    }
  }

  TEST_CASE("Gaussian likelihood") {
    CHECK(gaussian_likelihood(1.0, 1, 2, 0.5) == doctest::Approx(1.0 / (0.5 * std::sqrt(2 * std::numbers::pi))));
    CHECK(gaussian_likelihood(0.0, 1, 2, 0.7) == gaussian_likelihood(0.0, 0, 2, 0.7));
    const double z = (0.5 - 1.0) / 0.8;
    const double ref = std::exp(-0.5 * z * z) / (0.8 * std::sqrt(2.0 * std::numbers::pi));
    CHECK(gaussian_likelihood(0.5, 1, 2, 0.8) == doctest::Approx(ref).epsilon(1e-14));
    CHECK(std::abs(gaussian_likelihood(0.5, 1, 2, 0.8) - 0.4102) < 5e-5);
  }

  TEST_CASE("expression likelihood") {
    const auto mid = expression_likelihood(2.0, 2.0, 0.3);
    CHECK(mid.first == 0.5);
    CHECK(mid.second == 0.5);
    const auto far = expression_likelihood(1e6, 0.0, 1.0);
    CHECK(far.first == doctest::Approx(1.0));
    CHECK(far.second == doctest::Approx(0.0));
    const auto one = expression_likelihood(1.0, 0.0, 1.0);
    // Phi(1) from the error function, independent of the library helper.
    const double phi1 = 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)));
    CHECK(one.first == doctest::Approx(phi1).epsilon(1e-14));
    CHECK(one.first == doctest::Approx(0.8413).epsilon(1e-4));
    CHECK(one.second == doctest::Approx(0.1587).epsilon(1e-3));
    for (double y : {-3.0, -0.1, 0.0, 0.37, 2.5, 9.0}) {
      const auto p = expression_likelihood(y, 0.2, 0.9);
      CHECK(p.first + p.second == 1.0);
    }
  }

  TEST_CASE("basal estimation") {
    const std::vector<double> a{1, 1, 1, 3}, b{0, 2}, c{4, 4, 4};
    CHECK(estimate_basal(a).mu == 1.5);
    CHECK(estimate_basal(b).mu == 1.0);
    CHECK(estimate_basal(b).sigma == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(estimate_basal(c), Error);
    CHECK_THROWS_AS(estimate_basal(std::vector<double>{1.0}), Error);
  }

  TEST_CASE("trajectory and observation files round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "ctbn_test_io";
    std::filesystem::create_directories(dir);
    const auto m = glauber_model(tree_graph(4), 1.0, 0.5);
    const auto t = gillespie_sample(m, {1, 0, 1, 1}, 3.0, 8);
    write_trajectory_csv(dir / "t.csv", t, {"note=x"});
    CHECK(read_trajectory_csv(dir / "t.csv") == t);
    ObservationPlan plan;
    const auto obs = make_observations(t, m.space(), plan, 1);
    write_observations_csv(dir / "o.csv", obs);
    const auto back = read_observations_csv(dir / "o.csv");
    CHECK(back.horizon == obs.horizon);
    CHECK(back.sigma == obs.sigma);
    REQUIRE(back.entries.size() == obs.entries.size());
    for (std::size_t i = 0; i < obs.entries.size(); ++i) CHECK(back.entries[i].value == obs.entries[i].value);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("graph families") {
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
      const auto g = random_graph(5, 1, rng);
      for (int n = 0; n < 5; ++n) CHECK(g.parents(n).size() <= 1);
    }
    CHECK(tree_graph(8).edges().size() == 7);
    CHECK(periodic_chain_graph(8).edges().size() == 16);
    CHECK(tree_with_feedback_graph(8).edges().size() == 8);
    CHECK_THROWS_AS(named_graph("lattice", 4, 1, rng), Error);
  }
}
