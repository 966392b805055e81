#include "ctbn/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "format_util.hpp"

namespace ctbn {

std::vector<int> Trajectory::state_at(double t) const {
  std::vector<int> x = initial;
  for (const auto& e : events) {
    if (e.time > t) break;
    x[e.node] = e.state;
  }
  return x;
}

Trajectory gillespie_sample(const NetworkModel& model, std::vector<int> initial, double horizon, std::uint64_t seed) {
  if (!(horizon > 0.0)) throw Error("gillespie_sample: horizon must be positive");
  const auto& space = model.space();
  if (static_cast<int>(initial.size()) != space.size()) throw Error("gillespie_sample: initial state has wrong size");
  for (int n = 0; n < space.size(); ++n) {
    if (initial[n] < 0 || initial[n] >= space.cardinality(n)) throw Error("gillespie_sample: initial state out of range");
  }
  Rng rng(mix64(seed));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Trajectory traj;
  traj.initial = initial;
  traj.horizon = horizon;
  std::vector<int> x = std::move(initial);
  std::vector<double> exit(space.size());
  double t = 0.0;
  for (;;) {
    double total = 0.0;
    for (int n = 0; n < space.size(); ++n) {
      const auto& r = model.cim(n).by_config[model.parent_config(n, x)];
      exit[n] = -r(x[n], x[n]);
      total += exit[n];
    }
    if (total <= 0.0) break;  // absorbing
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    t += -std::log(u) / total;
    if (t >= horizon) break;

    double pick = unif(rng) * total;
    int node = space.size() - 1;
    for (int n = 0; n < space.size(); ++n) {
      if (pick < exit[n]) {
        node = n;
        break;
      }
      pick -= exit[n];
    }
    const auto& r = model.cim(node).by_config[model.parent_config(node, x)];
    double target_pick = unif(rng) * exit[node];
    int target = -1;
    for (int y = 0; y < space.cardinality(node); ++y) {
      if (y == x[node]) continue;
      target = y;
      if (target_pick < r(x[node], y)) break;
      target_pick -= r(x[node], y);
    }
    // rounding can leave target on a zero-rate state; step back to the last positive one
    while (r(x[node], target) <= 0.0) {
      target = (target + space.cardinality(node) - 1) % space.cardinality(node);
    }
    x[node] = target;
    traj.events.push_back({t, node, target});
  }
  return traj;
}

ObservationSet make_observations(const Trajectory& traj, const StateSpace& space, const ObservationPlan& plan,
                                 std::uint64_t seed) {
  Rng rng(mix64(seed ^ 0x0b5e7a11ULL));
  std::uniform_real_distribution<double> unif(0.0, traj.horizon);
  std::normal_distribution<double> noise(0.0, 1.0);

  ObservationSet obs;
  obs.horizon = traj.horizon;
  obs.model = plan.model;
  obs.sigma = plan.sigma;
  if (plan.model == NoiseModel::Expression) throw Error("make_observations: expression data is not simulated");

  auto draw_times = [&] {
    std::vector<double> times = plan.times;
    if (times.empty()) {
      for (int i = 0; i < plan.count; ++i) times.push_back(unif(rng));
    }
    std::sort(times.begin(), times.end());
    for (double t : times) {
      if (t < 0.0 || t > traj.horizon) throw Error("make_observations: time outside [0, T]");
    }
    return times;
  };
  auto reading = [&](int node, double t) {
    const auto x = traj.state_at(t);
    const double v = state_value(x[node], space.cardinality(node));
    if (plan.model == NoiseModel::Gaussian && plan.sigma > 0.0) return v + plan.sigma * noise(rng);
    return v;
  };

  if (plan.independent_per_node) {
    for (int n = 0; n < space.size(); ++n) {
      for (double t : draw_times()) obs.add(t, n, reading(n, t));
    }
  } else {
    for (double t : draw_times()) {
      for (int n = 0; n < space.size(); ++n) obs.add(t, n, reading(n, t));
    }
  }
  if (plan.model == NoiseModel::Gaussian && !(plan.sigma > 0.0)) obs.model = NoiseModel::Noiseless;
  obs.sort();
  return obs;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const std::vector<std::string>& extra_header) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# ctbn-trajectory/1\n";
  out << "# T=" << fmt_double(traj.horizon) << '\n';
  out << "# initial=";
  for (std::size_t n = 0; n < traj.initial.size(); ++n) out << (n ? "," : "") << traj.initial[n];
  out << '\n';
  for (const auto& line : extra_header) out << "# " << line << '\n';
  out << "time,node,new_state\n";
  for (const auto& e : traj.events) out << fmt_double(e.time) << ',' << e.node << ',' << e.state << '\n';
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  Trajectory traj;
  std::string line;
  bool have_t = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = trim(line.substr(1));
      if (body.rfind("T=", 0) == 0) {
        traj.horizon = std::stod(body.substr(2));
        have_t = true;
      } else if (body.rfind("initial=", 0) == 0) {
        for (const auto& p : split(body.substr(8), ',')) traj.initial.push_back(std::stoi(p));
      }
      continue;
    }
    if (line.rfind("time", 0) == 0) continue;
    const auto parts = split(line, ',');
    if (parts.size() != 3) throw Error("malformed trajectory row: " + line);
    traj.events.push_back({std::stod(parts[0]), std::stoi(parts[1]), std::stoi(parts[2])});
  }
  if (!have_t) throw Error("trajectory file lacks a T header: " + path.string());
  return traj;
}

Graph tree_graph(int nodes) {
  Graph g(nodes);
  for (int i = 1; i < nodes; ++i) g.add_edge((i - 1) / 2, i);
  return g;
}

Graph periodic_chain_graph(int nodes) {
  Graph g(nodes);
  if (nodes < 2) return g;
  for (int i = 0; i < nodes; ++i) {
    const int j = (i + 1) % nodes;
    if (i == j) continue;
    g.add_edge(i, j);
    g.add_edge(j, i);
  }
  return g;
}

Graph tree_with_feedback_graph(int nodes) {
  Graph g = tree_graph(nodes);
  if (nodes > 1) g.add_edge(nodes - 1, 0);
  return g;
}

Graph random_graph(int nodes, int k_max, Rng& rng) {
  Graph g(nodes);
  for (int n = 0; n < nodes; ++n) {
    std::vector<int> others;
    for (int m = 0; m < nodes; ++m) {
      if (m != n) others.push_back(m);
    }
    // enumerate every subset of size <= k_max, pick one uniformly
    std::vector<std::vector<int>> sets{{}};
    for (int size = 1; size <= std::min<int>(k_max, static_cast<int>(others.size())); ++size) {
      std::vector<int> idx(size);
      for (int i = 0; i < size; ++i) idx[i] = i;
      for (;;) {
        std::vector<int> s;
        for (int i : idx) s.push_back(others[i]);
        sets.push_back(std::move(s));
        int i = size - 1;
        while (i >= 0 && idx[i] == static_cast<int>(others.size()) - size + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
      }
    }
    std::uniform_int_distribution<std::size_t> pick(0, sets.size() - 1);
    g.set_parents(n, sets[pick(rng)]);
  }
  return g;
}

Graph named_graph(const std::string& topology, int nodes, int k_max, Rng& rng) {
  if (topology == "tree") return tree_graph(nodes);
  if (topology == "chain") return periodic_chain_graph(nodes);
  if (topology == "tree-feedback") return tree_with_feedback_graph(nodes);
  if (topology == "random") return random_graph(nodes, k_max, rng);
  if (topology == "empty") return Graph(nodes);
  throw Error("unknown topology '" + topology + "' (expected tree, chain, tree-feedback, random, empty)");
}

}  // namespace ctbn
