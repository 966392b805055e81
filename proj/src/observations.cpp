#include "ctbn/observations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "format_util.hpp"

namespace ctbn {

std::string to_string(NoiseModel model) {
  switch (model) {
    case NoiseModel::Noiseless: return "noiseless";
    case NoiseModel::Gaussian: return "gaussian";
    case NoiseModel::Expression: return "expression";
  }
  return "unknown";
}

NoiseModel noise_model_from_string(const std::string& tag) {
  if (tag == "noiseless") return NoiseModel::Noiseless;
  if (tag == "gaussian") return NoiseModel::Gaussian;
  if (tag == "expression") return NoiseModel::Expression;
  throw Error("unknown observation model '" + tag + "'");
}

void ObservationSet::add(double time, int node, double value) { entries.push_back({time, node, value}); }

void ObservationSet::sort() {
  std::stable_sort(entries.begin(), entries.end(), [](const Observation& a, const Observation& b) {
    return a.time < b.time || (a.time == b.time && a.node < b.node);
  });
}

double ObservationSet::likelihood(const Observation& obs, int state, int cardinality) const {
  switch (model) {
    case NoiseModel::Noiseless:
      return std::abs(obs.value - state_value(state, cardinality)) < 1e-9 ? 1.0 : 0.0;
    case NoiseModel::Gaussian:
      return gaussian_likelihood(obs.value, state, cardinality, sigma);
    case NoiseModel::Expression: {
      if (cardinality != 2) throw Error("expression model requires binary nodes");
      if (obs.node >= static_cast<int>(basal.size())) throw Error("expression model: missing basal parameters");
      const auto [over, under] = expression_likelihood(obs.value, basal[obs.node].mu, basal[obs.node].sigma);
      return state == 1 ? over : under;
    }
  }
  return 0.0;
}

double gaussian_likelihood(double y, double mean, double sigma) {
  if (!(sigma > 0.0)) throw Error("gaussian likelihood: sigma must be positive");
  const double z = (y - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double gaussian_likelihood(double y, int state, int cardinality, double sigma) {
  return gaussian_likelihood(y, state_value(state, cardinality), sigma);
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::pair<double, double> expression_likelihood(double y, double mu_b, double sigma_b) {
  if (!(sigma_b > 0.0)) throw Error("expression likelihood: sigma_B must be positive");
  const double over = standard_normal_cdf((y - mu_b) / sigma_b);
  return {over, 1.0 - over};
}

BasalParams estimate_basal(std::span<const double> samples) {
  if (samples.size() < 2) throw Error("estimate_basal: need at least 2 samples");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(samples.size());
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  if (!(sd > 0.0)) throw Error("estimate_basal: zero variance");
  return {mean, sd};
}

EvidenceSchedule EvidenceSchedule::build(const StateSpace& space, const ObservationSet& obs, double time_tol) {
  std::vector<Observation> sorted = obs.entries;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Observation& a, const Observation& b) { return a.time < b.time; });
  EvidenceSchedule sched;
  for (const auto& o : sorted) {
    if (o.time < -time_tol || o.time > obs.horizon + time_tol) throw Error("observation time outside [0, T]");
    if (o.node < 0 || o.node >= space.size()) throw Error("observation node out of range");
    if (sched.points.empty() || o.time - sched.points.back().time > time_tol) {
      Point p;
      p.time = std::clamp(o.time, 0.0, obs.horizon);
      p.per_node.resize(space.size());
      sched.points.push_back(std::move(p));
    }
    auto& slot = sched.points.back().per_node[o.node];
    const int card = space.cardinality(o.node);
    if (!slot) slot = std::vector<double>(card, 1.0);
    for (int x = 0; x < card; ++x) {
      const double l = obs.likelihood(o, x, card);
      if (!std::isfinite(l) || l < 0.0) throw Error("non-finite observation likelihood");
      (*slot)[x] *= l;
    }
  }
  for (const auto& p : sched.points) {
    for (std::size_t n = 0; n < p.per_node.size(); ++n) {
      const auto& l = p.per_node[n];
      if (l && std::all_of(l->begin(), l->end(), [](double v) { return v == 0.0; })) {
        throw Error("observation of node " + std::to_string(n) + " excludes every state");
      }
    }
  }
  return sched;
}

std::optional<std::size_t> EvidenceSchedule::find(double time, double tol) const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs(points[i].time - time) <= tol) return i;
  }
  return std::nullopt;
}

void write_observations_csv(const std::filesystem::path& path, const ObservationSet& obs,
                            const std::vector<std::string>& extra_header) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# ctbn-observations/1\n";
  out << "# T=" << fmt_double(obs.horizon) << '\n';
  out << "# model=" << to_string(obs.model) << '\n';
  if (obs.model == NoiseModel::Gaussian) out << "# sigma=" << fmt_double(obs.sigma) << '\n';
  for (std::size_t n = 0; n < obs.basal.size(); ++n) {
    out << "# basal=" << n << ',' << fmt_double(obs.basal[n].mu) << ',' << fmt_double(obs.basal[n].sigma) << '\n';
  }
  for (const auto& line : extra_header) out << "# " << line << '\n';
  out << "time,node,value\n";
  for (const auto& o : obs.entries) out << fmt_double(o.time) << ',' << o.node << ',' << fmt_double(o.value) << '\n';
}

ObservationSet read_observations_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  ObservationSet obs;
  bool have_t = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const auto key = body.substr(0, eq);
      const auto val = body.substr(eq + 1);
      if (key == "T") {
        obs.horizon = std::stod(val);
        have_t = true;
      } else if (key == "model") {
        obs.model = noise_model_from_string(val);
      } else if (key == "sigma") {
        obs.sigma = std::stod(val);
      } else if (key == "basal") {
        const auto parts = split(val, ',');
        if (parts.size() != 3) throw Error("malformed basal header in " + path.string());
        const auto n = static_cast<std::size_t>(std::stoi(parts[0]));
        if (obs.basal.size() <= n) obs.basal.resize(n + 1);
        obs.basal[n] = {std::stod(parts[1]), std::stod(parts[2])};
      }
      continue;
    }
    if (line.rfind("time", 0) == 0) continue;
    const auto parts = split(line, ',');
    if (parts.size() != 3) throw Error("malformed observation row in " + path.string() + ": " + line);
    obs.add(std::stod(parts[0]), std::stoi(parts[1]), std::stod(parts[2]));
  }
  if (!have_t) throw Error("observation file lacks a T header: " + path.string());
  obs.sort();
  return obs;
}

}  // namespace ctbn
