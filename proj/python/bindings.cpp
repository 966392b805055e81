#include "ctbn/benchmark.hpp"
#include "ctbn/exact.hpp"
#include "ctbn/learning.hpp"
#include "ctbn/metrics.hpp"
#include "ctbn/network_io.hpp"
#include "ctbn/simulate.hpp"
#include "ctbn/star.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ctbn;

namespace {

ObservationSet make_obs(double horizon, const std::vector<std::tuple<double, int, double>>& rows, double sigma) {
  ObservationSet obs;
  obs.horizon = horizon;
  obs.model = sigma > 0.0 ? NoiseModel::Gaussian : NoiseModel::Noiseless;
  obs.sigma = sigma;
  for (const auto& [t, n, y] : rows) obs.add(t, n, y);
  obs.sort();
  return obs;
}

/// (points, nodes, states) array from per-node point-major vectors.
py::array_t<double> stack(const std::vector<std::vector<double>>& per_node, const StateSpace& space,
                          std::size_t points) {
  const auto N = static_cast<std::size_t>(space.size());
  const auto S = static_cast<std::size_t>(space.cardinality(0));
  py::array_t<double> out({points, N, S});
  auto r = out.mutable_unchecked<3>();
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t p = 0; p < points; ++p)
      for (std::size_t x = 0; x < S; ++x) r(p, n, x) = per_node[n][p * S + x];
  return out;
}

py::dict infer(const std::string& network, double horizon, const std::vector<std::tuple<double, int, double>>& rows,
               double sigma, const std::string& method, double grid_step, double tolerance, int max_sweeps) {
  const auto model = parse_network(network);
  for (int n = 0; n < model.size(); ++n)
    if (model.space().cardinality(n) != model.space().cardinality(0))
      throw Error("infer() returns a dense array and needs equal cardinalities");
  const auto obs = make_obs(horizon, rows, sigma);
  py::dict out;
  if (method == "exact") {
    ExactConfig ec;
    ec.grid_step = grid_step;
    const auto post = exact_smoothing(model, obs, ec);
    out["times"] = post.grid.times;
    out["marginals"] = stack(post.node_marginals, model.space(), post.grid.points());
    out["log_evidence"] = post.log_evidence;
    out["converged"] = true;
    return out;
  }
  if (method != "star" && method != "mf") throw Error("unknown method " + method);
  InferenceConfig ic;
  ic.grid_step = grid_step;
  ic.tolerance = tolerance;
  ic.max_sweeps = max_sweeps;
  ic.cluster = method == "mf" ? Cluster::MeanField : Cluster::Star;
  const auto res = method == "mf" ? mean_field_fixed_point(model, obs, ic) : fixed_point(model, obs, ic);
  std::vector<std::vector<double>> m;
  for (const auto& node : res.trajectories.nodes) m.push_back(node.m);
  out["times"] = res.trajectories.grid.times;
  out["marginals"] = stack(m, model.space(), res.trajectories.grid.points());
  out["energy"] = variational_energy(model, obs, res.trajectories, ic).total;
  out["converged"] = res.report.converged;
  out["sweeps"] = res.report.sweeps;
  out["residual"] = res.report.residual;
  return out;
}

}  // namespace

PYBIND11_MODULE(_ctbn, mod) {
  mod.doc() = "Continuous-time Bayesian networks: simulation, star-approximation inference and structure learning";
  py::register_exception<Error>(mod, "CtbnError", PyExc_ValueError);

  mod.def(
      "glauber_network",
      [](int nodes, const std::vector<std::pair<int, int>>& edges, double a, double b) {
        return serialize_network(glauber_model(Graph::from_edges(nodes, edges), a, b));
      },
      py::arg("nodes"), py::arg("edges"), py::arg("a") = 1.0, py::arg("b") = 0.6,
      "Binary Glauber network serialized as JSON.");

  mod.def(
      "named_graph",
      [](const std::string& topology, int nodes, int k, std::uint64_t seed) {
        Rng rng(seed);
        return named_graph(topology, nodes, k, rng).edges();
      },
      py::arg("topology"), py::arg("nodes"), py::arg("k") = 1, py::arg("seed") = 0);

  mod.def(
      "simulate",
      [](const std::string& network, const std::vector<int>& initial, double horizon, std::uint64_t seed) {
        const auto t = gillespie_sample(parse_network(network), initial, horizon, seed);
        std::vector<std::tuple<double, int, int>> events;
        for (const auto& e : t.events) events.emplace_back(e.time, e.node, e.state);
        return events;
      },
      py::arg("network"), py::arg("initial"), py::arg("horizon"), py::arg("seed"),
      "Exact Gillespie path as (time, node, new_state) events.");

  mod.def(
      "observe",
      [](const std::string& network, const std::vector<int>& initial, double horizon, int count, double sigma,
         std::uint64_t seed) {
        const auto model = parse_network(network);
        const auto t = gillespie_sample(model, initial, horizon, seed);
        ObservationPlan plan;
        plan.count = count;
        plan.sigma = sigma;
        const auto obs = make_observations(t, model.space(), plan, mix64(seed));
        std::vector<std::tuple<double, int, double>> rows;
        for (const auto& o : obs.entries) rows.emplace_back(o.time, o.node, o.value);
        return rows;
      },
      py::arg("network"), py::arg("initial"), py::arg("horizon"), py::arg("count"), py::arg("sigma"),
      py::arg("seed"), "Simulates a path and returns noisy (time, node, value) readouts of it.");

  mod.def("infer", &infer, py::arg("network"), py::arg("horizon"), py::arg("observations"), py::arg("sigma") = 0.0,
          py::arg("method") = "star", py::arg("grid_step") = 1e-3, py::arg("tolerance") = 1e-8,
          py::arg("max_sweeps") = 200,
          "Posterior marginals with method 'star', 'mf' or 'exact'. Marginals have shape (points, nodes, states).");

  mod.def(
      "learn",
      [](int nodes, double horizon, const std::vector<std::vector<std::tuple<double, int, double>>>& datasets,
         double sigma, int k, double alpha, double beta, double grid_step) {
        std::vector<ObservationSet> data;
        for (const auto& rows : datasets) data.push_back(make_obs(horizon, rows, sigma));
        LearnConfig lc;
        lc.max_parents = k;
        lc.alpha = alpha;
        lc.beta = beta;
        lc.marginal.inference.grid_step = grid_step;
        const auto res = greedy_hill_climb(StateSpace::binary(nodes), data, lc);
        py::dict out;
        out["edges"] = res.graph.edges();
        out["edge_probability"] = res.edge_probability;
        out["converged"] = res.converged;
        return out;
      },
      py::arg("nodes"), py::arg("horizon"), py::arg("datasets"), py::arg("sigma"), py::arg("k") = 1,
      py::arg("alpha") = 5.0, py::arg("beta") = 10.0, py::arg("grid_step") = 0.02,
      "Greedy structure search over binary nodes from several observation sets.");

  mod.def(
      "auroc_aupr",
      [](const std::vector<double>& scores, const std::vector<bool>& labels) {
        const auto a = auroc_aupr(scores, labels);
        return std::make_pair(a.auroc, a.aupr);
      },
      py::arg("scores"), py::arg("labels"));
}
