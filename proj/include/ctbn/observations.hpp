#pragma once

#include "ctbn/model.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ctbn {

enum class NoiseModel { Noiseless, Gaussian, Expression };

std::string to_string(NoiseModel model);
NoiseModel noise_model_from_string(const std::string& tag);

struct BasalParams {
  double mu = 0.0;
  double sigma = 1.0;
};

struct Observation {
  double time = 0.0;
  int node = 0;
  double value = 0.0;
};

/// Timestamped readouts of individual nodes plus the noise model that
/// produced them. Entries are kept sorted by (time, node).
struct ObservationSet {
  double horizon = 0.0;
  NoiseModel model = NoiseModel::Noiseless;
  double sigma = 0.0;               // Gaussian
  std::vector<BasalParams> basal;   // Expression, one per node
  std::vector<Observation> entries;

  void add(double time, int node, double value);
  void sort();
  /// Likelihood P(value | X_node = state).
  double likelihood(const Observation& obs, int state, int cardinality) const;
};

double gaussian_likelihood(double y, int state, int cardinality, double sigma);
double gaussian_likelihood(double y, double mean, double sigma);

/// (L(y | over-expressed), L(y | under-expressed)) under a Gaussian basal
/// concentration; the pair sums to one.
std::pair<double, double> expression_likelihood(double y, double mu_b, double sigma_b);

double standard_normal_cdf(double z);

/// Sample mean and (n-1) standard deviation.
BasalParams estimate_basal(std::span<const double> samples);

/// Observations grouped onto the distinct time points, with per-node
/// likelihood vectors multiplied together when a node is read more than
/// once at the same instant.
struct EvidenceSchedule {
  struct Point {
    double time = 0.0;
    std::vector<std::optional<std::vector<double>>> per_node;  // likelihood over local states
  };
  std::vector<Point> points;

  static EvidenceSchedule build(const StateSpace& space, const ObservationSet& obs, double time_tol = 1e-12);
  /// Index of the point at `time`, if any.
  std::optional<std::size_t> find(double time, double tol = 1e-12) const;
};

void write_observations_csv(const std::filesystem::path& path, const ObservationSet& obs,
                            const std::vector<std::string>& extra_header = {});
ObservationSet read_observations_csv(const std::filesystem::path& path);

}  // namespace ctbn
