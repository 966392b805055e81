#include "ctbn/time_grid.hpp"

#include <algorithm>
#include <cmath>

namespace ctbn {

TimeGrid TimeGrid::build(double horizon, std::span<const double> breakpoints, double grid_step,
                         int steps_per_segment) {
  if (!(horizon > 0.0)) throw Error("time grid: horizon must be positive");
  TimeGrid g;
  g.boundaries.push_back(0.0);
  std::vector<double> bp(breakpoints.begin(), breakpoints.end());
  std::sort(bp.begin(), bp.end());
  const double tol = 1e-12 * std::max(1.0, horizon);
  for (double t : bp) {
    if (t <= tol || t >= horizon - tol) continue;
    if (t - g.boundaries.back() > tol) g.boundaries.push_back(t);
  }
  g.boundaries.push_back(horizon);

  std::size_t offset = 0;
  for (std::size_t k = 0; k + 1 < g.boundaries.size(); ++k) {
    const double len = g.boundaries[k + 1] - g.boundaries[k];
    int n = steps_per_segment;
    if (grid_step > 0.0) n = static_cast<int>(std::ceil(len / grid_step - 1e-9));
    n = std::max(n, 1);
    g.steps.push_back(n);
    g.offsets.push_back(offset);
    for (int j = 0; j <= n; ++j) {
      g.times.push_back(j == n ? g.boundaries[k + 1] : g.boundaries[k] + len * j / n);
    }
    offset += static_cast<std::size_t>(n) + 1;
  }
  return g;
}

double TimeGrid::integrate(std::span<const double> values) const {
  double total = 0.0;
  for (int k = 0; k < segments(); ++k) {
    const double h = step(k);
    double s = 0.5 * (values[first(k)] + values[last(k)]);
    for (std::size_t i = first(k) + 1; i < last(k); ++i) s += values[i];
    total += h * s;
  }
  return total;
}

std::vector<double> TimeGrid::quadrature_weights() const {
  std::vector<double> w(points(), 0.0);
  for (int k = 0; k < segments(); ++k) {
    const double h = step(k);
    for (std::size_t i = first(k); i <= last(k); ++i) w[i] = (i == first(k) || i == last(k)) ? 0.5 * h : h;
  }
  return w;
}

GriddedEvidence GriddedEvidence::build(const StateSpace& space, const ObservationSet& obs, double grid_step,
                                       int steps_per_segment) {
  GriddedEvidence ev;
  ev.schedule = EvidenceSchedule::build(space, obs);
  std::vector<double> times;
  for (const auto& p : ev.schedule.points) times.push_back(p.time);
  ev.grid = TimeGrid::build(obs.horizon, times, grid_step, steps_per_segment);
  ev.at_boundary.assign(ev.grid.boundaries.size(), -1);
  const double tol = 1e-12 * std::max(1.0, obs.horizon);
  for (std::size_t i = 0; i < ev.schedule.points.size(); ++i) {
    const double t = ev.schedule.points[i].time;
    for (std::size_t k = 0; k < ev.grid.boundaries.size(); ++k) {
      if (std::abs(ev.grid.boundaries[k] - t) <= tol) {
        ev.at_boundary[k] = static_cast<int>(i);
        break;
      }
    }
  }
  return ev;
}

const std::vector<double>* GriddedEvidence::likelihood(int boundary, int node) const {
  const int idx = at_boundary[boundary];
  if (idx < 0) return nullptr;
  const auto& slot = schedule.points[idx].per_node[node];
  return slot ? &*slot : nullptr;
}

}  // namespace ctbn
