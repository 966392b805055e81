#pragma once

#include "ctbn/model.hpp"
#include "ctbn/observations.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ctbn {

/// Piecewise-uniform grid over [0, T]. Segment boundaries sit at the
/// observation times; each segment stores both of its endpoints, so an
/// interior boundary appears twice in the flat point list (left limit at the
/// end of segment k, right limit at the start of segment k+1).
struct TimeGrid {
  std::vector<double> boundaries;     // 0 = b_0 < ... < b_K = T
  std::vector<int> steps;             // sub-steps per segment
  std::vector<std::size_t> offsets;   // flat index of each segment's first point
  std::vector<double> times;          // flat point times

  static TimeGrid build(double horizon, std::span<const double> breakpoints, double grid_step,
                        int steps_per_segment);

  int segments() const { return static_cast<int>(steps.size()); }
  std::size_t points() const { return times.size(); }
  double horizon() const { return boundaries.back(); }
  std::size_t first(int segment) const { return offsets[segment]; }
  std::size_t last(int segment) const { return offsets[segment] + static_cast<std::size_t>(steps[segment]); }
  double step(int segment) const {
    return (boundaries[segment + 1] - boundaries[segment]) / static_cast<double>(steps[segment]);
  }

  /// Trapezoidal integral of a per-point series.
  double integrate(std::span<const double> values) const;
  /// Per-point trapezoidal weights; integrate(f) == sum_p w[p] f[p].
  std::vector<double> quadrature_weights() const;
};

/// Evidence attached to grid boundaries.
struct GriddedEvidence {
  TimeGrid grid;
  EvidenceSchedule schedule;
  std::vector<int> at_boundary;  // schedule point index per boundary, -1 if none

  static GriddedEvidence build(const StateSpace& space, const ObservationSet& obs, double grid_step,
                               int steps_per_segment);

  /// Likelihood vector of `node` at boundary `k`, or nullptr.
  const std::vector<double>* likelihood(int boundary, int node) const;
};

}  // namespace ctbn
