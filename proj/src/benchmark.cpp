#include "ctbn/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace ctbn {

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Figure2Result run_figure2(const Figure2Config& config) {
  Figure2Result res;
  const Graph g = Graph::from_edges(3, std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  res.model = glauber_model(g, config.a, config.b);

  Rng rng = substream(config.seed, 0);
  std::vector<int> initial(3);
  for (auto& x : initial) x = static_cast<int>(rng() % 2);
  res.truth = gillespie_sample(res.model, initial, config.horizon, mix64(config.seed + 1));

  std::uniform_real_distribution<double> when(0.0, config.horizon);
  std::vector<double> times(config.observations);
  for (auto& t : times) t = when(rng);
  std::sort(times.begin(), times.end());
  std::normal_distribution<double> noise(0.0, config.sigma);
  res.observations.horizon = config.horizon;
  res.observations.model = NoiseModel::Gaussian;
  res.observations.sigma = config.sigma;
  for (double t : times) {
    const auto state = res.truth.state_at(t);
    for (int n : {0, 2}) res.observations.add(t, n, state_value(state[n], 2) + noise(rng));
  }
  res.observations.sort();

  InferenceConfig inf;
  inf.grid_step = config.grid_step;
  inf.tolerance = 1e-10;
  inf.max_sweeps = 1000;
  const auto ev = GriddedEvidence::build(res.model.space(), res.observations, inf.grid_step, inf.steps_per_segment);
  auto fp = fixed_point(res.model, ev, inf);
  res.report = fp.report;
  res.invariants = check_invariants(res.model, fp.trajectories);
  res.star_energy = variational_energy(res.model, ev, fp.trajectories, inf).total;

  ExactConfig ex;
  const auto post = exact_smoothing(res.model, ev, ex);
  res.log_evidence = post.log_evidence;
  res.times = ev.grid.times;
  const auto w = ev.grid.quadrature_weights();
  for (int n = 0; n < 3; ++n) {
    res.star_mean.push_back(fp.trajectories.mean_value(n));
    res.exact_mean.push_back(post.mean_value(n));
    double acc = 0.0;
    for (std::size_t p = 0; p < w.size(); ++p) {
      const double d = res.star_mean[n][p] - res.exact_mean[n][p];
      acc += w[p] * d * d;
    }
    res.mse += acc / config.horizon / 3.0;
  }
  return res;
}

ObservationSet figure3_evidence(int nodes, double horizon) {
  ObservationSet obs;
  obs.horizon = horizon;
  obs.model = NoiseModel::Noiseless;
  for (int n = 0; n < nodes; ++n) {
    obs.add(0.0, n, 1.0);
    obs.add(horizon, n, -1.0);
  }
  obs.sort();
  return obs;
}

std::vector<Figure3Row> run_figure3(const Figure3Config& config) {
  const int cells = static_cast<int>(config.temperatures.size());
  std::vector<std::vector<Figure3Row>> rows(cells);
  Rng rng(0);  // tree and chain are deterministic; the generator is never drawn from
  const Graph g = named_graph(config.topology, config.nodes, 0, rng);
  const auto obs = figure3_evidence(config.nodes, config.horizon);

  parallel_for(cells, config.workers, [&](int i) {
    const double b = config.temperatures[i];
    const auto model = glauber_model(g, config.a, b);
    const auto ev = GriddedEvidence::build(model.space(), obs, config.grid_step, 0);
    ExactConfig ec;
    const auto post = exact_smoothing(model, ev, ec);
    const auto exact_stats = exact_expected_stats(model, post);
    for (Cluster cl : {Cluster::Star, Cluster::MeanField}) {
      InferenceConfig inf;
      inf.grid_step = config.grid_step;
      inf.cluster = cl;
      inf.damping = config.damping;
      inf.tolerance = config.tolerance;
      inf.max_sweeps = config.max_sweeps;
      const auto fp = fixed_point(model, ev, inf);
      Figure3Row row;
      row.b = b;
      row.method = cl == Cluster::Star ? "star" : "mf";
      const auto err = stats_mse(expected_stats(model, fp.trajectories, cl, inf.rate_floor), exact_stats);
      row.dwell_mse = err.dwell_mse;
      row.transition_mse = err.transition_mse;
      row.stats_mse = err.combined_mse;
      row.energy = variational_energy(model, ev, fp.trajectories, inf).total;
      row.log_evidence = post.log_evidence;
      row.converged = fp.report.converged;
      row.sweeps = fp.report.sweeps;
      row.invariants = check_invariants(model, fp.trajectories, cl, inf.rate_floor);
      rows[i].push_back(row);
    }
  });
  std::vector<Figure3Row> out;
  for (auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

Table1Dataset make_table1_dataset(const Table1Config& config, int replicate) {
  Table1Dataset ds;
  const auto rep = static_cast<std::uint64_t>(replicate);
  Rng rng = substream(config.seed, rep);
  Graph g(config.nodes);
  // An edgeless truth makes the ranking metrics undefined.
  do {
    g = random_graph(config.nodes, config.k_max, rng);
  } while (g.edges().empty());
  ds.model = glauber_model(g, config.a, config.b);
  ObservationPlan plan;
  plan.count = config.observations;
  plan.sigma = config.sigma;
  plan.model = config.sigma > 0.0 ? NoiseModel::Gaussian : NoiseModel::Noiseless;
  for (int d = 0; d < config.trajectories; ++d) {
    const std::uint64_t stream = 1000 * (rep + 1) + static_cast<std::uint64_t>(d);
    Rng init = substream(config.seed, stream);
    std::vector<int> start(config.nodes);
    for (auto& x : start) x = static_cast<int>(init() % 2);
    ds.trajectories.push_back(gillespie_sample(ds.model, start, config.horizon, mix64(config.seed ^ mix64(stream))));
    ds.observations.push_back(make_observations(ds.trajectories.back(), ds.model.space(), plan,
                                                mix64(config.seed ^ mix64(stream + 0x10000))));
  }
  return ds;
}

LearnConfig table1_learn_config(const Table1Config& config) {
  LearnConfig lc;
  lc.max_parents = config.search_k;
  lc.max_sweeps = config.max_sweeps;
  lc.alpha = config.alpha;
  lc.beta = config.beta;
  lc.marginal.tolerance = config.marginal_tolerance;
  lc.marginal.inference.grid_step = config.grid_step;
  lc.marginal.inference.tolerance = config.inference_tolerance;
  return lc;
}

Table1Result run_table1(const Table1Config& config) {
  Table1Result res;
  res.replicates.resize(config.replicates);
  const auto lc = table1_learn_config(config);
  parallel_for(config.replicates, config.workers, [&](int r) {
    const auto ds = make_table1_dataset(config, r);
    auto& rep = res.replicates[r];
    rep.truth = ds.model.graph();
    rep.learned = greedy_hill_climb(ds.model.space(), ds.observations, lc);
    rep.areas = auroc_aupr(rep.learned.edge_probability, rep.truth);
  });
  for (const auto& r : res.replicates) {
    res.mean_auroc += r.areas.auroc / config.replicates;
    res.mean_aupr += r.areas.aupr / config.replicates;
  }
  return res;
}

}  // namespace ctbn
