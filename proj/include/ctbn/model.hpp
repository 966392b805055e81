#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ctbn {

/// Thrown for every contract violation in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-node local state spaces. Binary nodes use states {0,1} with the
/// spin mapping 0 <-> -1, 1 <-> +1.
class StateSpace {
 public:
  StateSpace() = default;
  explicit StateSpace(std::vector<int> cardinalities, std::vector<std::string> labels = {});

  static StateSpace binary(int nodes);

  int size() const { return static_cast<int>(cards_.size()); }
  int cardinality(int node) const { return cards_.at(node); }
  const std::vector<int>& cardinalities() const { return cards_; }
  const std::string& label(int node) const { return labels_.at(node); }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Product of all cardinalities; throws if it exceeds `cap`.
  std::size_t joint_size(std::size_t cap) const;

  bool operator==(const StateSpace&) const = default;

 private:
  std::vector<int> cards_;
  std::vector<std::string> labels_;
};

/// Numeric value of a local state: +-1 for binary nodes, the index otherwise.
double state_value(int state, int cardinality);

class Graph {
 public:
  Graph() = default;
  explicit Graph(int nodes);
  static Graph from_edges(int nodes, std::span<const std::pair<int, int>> edges);

  int size() const { return static_cast<int>(parents_.size()); }
  void add_edge(int from, int to);
  void set_parents(int node, std::vector<int> parents);
  bool has_edge(int from, int to) const;

  /// Sorted ascending.
  const std::vector<int>& parents(int node) const { return parents_.at(node); }
  const std::vector<int>& children(int node) const { return children_.at(node); }
  std::vector<std::pair<int, int>> edges() const;

  bool operator==(const Graph&) const = default;

 private:
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
};

/// Mixed-radix index over a parent configuration. The first (lowest-index)
/// parent is the most significant digit.
class ConfigIndexer {
 public:
  ConfigIndexer() = default;
  ConfigIndexer(const StateSpace& space, std::span<const int> parents);

  int count() const { return count_; }
  int slots() const { return static_cast<int>(radix_.size()); }
  int radix(int slot) const { return radix_[slot]; }
  int stride(int slot) const { return stride_[slot]; }

  int index(std::span<const int> parent_states) const;
  /// Parent state at `slot` within configuration `config`.
  int digit(int config, int slot) const { return (config / stride_[slot]) % radix_[slot]; }
  std::vector<int> decode(int config) const;

 private:
  std::vector<int> radix_;
  std::vector<int> stride_;
  int count_ = 1;
};

/// Conditional intensity matrices of one node, one per parent configuration.
struct Cim {
  int states = 0;
  std::vector<Eigen::MatrixXd> by_config;

  Cim() = default;
  Cim(int states, int configs);

  int configs() const { return static_cast<int>(by_config.size()); }
  double rate(int config, int from, int to) const { return by_config[config](from, to); }
  /// Sets an off-diagonal rate and re-derives the diagonal of that row.
  void set_rate(int config, int from, int to, double value);
  void fix_diagonals();
};

class NetworkModel {
 public:
  NetworkModel() = default;
  NetworkModel(StateSpace space, Graph graph, std::vector<Cim> cims);

  const StateSpace& space() const { return space_; }
  const Graph& graph() const { return graph_; }
  const Cim& cim(int node) const { return cims_.at(node); }
  const std::vector<Cim>& cims() const { return cims_; }
  int size() const { return space_.size(); }
  const ConfigIndexer& indexer(int node) const { return indexers_.at(node); }

  /// Configuration index of `node`'s parents read out of a full joint state.
  int parent_config(int node, std::span<const int> joint_state) const;

  bool operator==(const NetworkModel& other) const;

 private:
  StateSpace space_;
  Graph graph_;
  std::vector<Cim> cims_;
  std::vector<ConfigIndexer> indexers_;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks every structural invariant; never throws.
ValidationReport validate_model(const StateSpace& space, const Graph& graph,
                                const std::vector<Cim>& cims);
ValidationReport validate_model(const NetworkModel& model);

/// Gamma hyperparameters of a single family.
struct FamilyPrior {
  std::vector<Eigen::MatrixXd> alpha;  // per config, |X|x|X|, off-diagonals used
  std::vector<Eigen::VectorXd> beta;   // per config, |X|

  static FamilyPrior uniform(int states, int configs, double alpha, double beta);
  int configs() const { return static_cast<int>(alpha.size()); }
};

struct GammaPrior {
  std::vector<FamilyPrior> nodes;

  static GammaPrior uniform(const StateSpace& space, const Graph& graph, double alpha,
                            double beta);
};

/// Glauber spin-flip CIM: R(x,-x | u) = (a/2)(1 + x tanh(b * sum(u))).
Cim glauber_cim(double a, double b, int parent_count);
NetworkModel glauber_model(const Graph& graph, double a, double b);

/// Joint generator over the product space. Joint index places node 0 in the
/// least significant position.
Eigen::SparseMatrix<double, Eigen::RowMajor> amalgamate(const NetworkModel& model,
                                                        std::size_t cap = 4096);

std::vector<int> decode_joint(const StateSpace& space, std::size_t index);
std::size_t encode_joint(const StateSpace& space, std::span<const int> states);

}  // namespace ctbn
