#include "ctbn/exact.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>

namespace ctbn {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// exp(Q h) applied to a vector through uniformization. Long steps are split
/// so the Poisson weights never underflow.
class Propagator {
 public:
  Propagator(const SpMat& q, double truncation) : truncation_(truncation) {
    rate_ = 0.0;
    for (int i = 0; i < q.rows(); ++i) rate_ = std::max(rate_, -q.coeff(i, i));
    const auto n = q.rows();
    SpMat eye(n, n);
    eye.setIdentity();
    if (rate_ > 0.0) {
      p_ = eye + q / rate_;
    } else {
      p_ = eye;
    }
    pt_ = p_.transpose();
  }

  /// transpose = true propagates a distribution (row vector times exp(Qh)),
  /// otherwise a likelihood vector (exp(Qh) times column vector).
  void apply(Eigen::VectorXd& v, double h, bool transpose) const {
    if (rate_ == 0.0 || h == 0.0) return;
    const int pieces = std::max(1, static_cast<int>(std::ceil(rate_ * h / 30.0)));
    const double lam = rate_ * h / pieces;
    for (int k = 0; k < pieces; ++k) step(v, lam, transpose);
  }

 private:
  void step(Eigen::VectorXd& v, double lam, bool transpose) const {
    double w = std::exp(-lam);
    double mass = w;
    Eigen::VectorXd term = v;
    Eigen::VectorXd acc = w * v;
    for (int k = 1; 1.0 - mass > truncation_ && k < 10000; ++k) {
      term = transpose ? Eigen::VectorXd(pt_ * term) : Eigen::VectorXd(p_ * term);
      w *= lam / k;
      mass += w;
      acc += w * term;
    }
    v = acc;
  }

  double rate_ = 0.0;
  double truncation_;
  SpMat p_, pt_;
};

Eigen::VectorXd joint_vector(const StateSpace& space, std::size_t size,
                             const std::vector<const std::vector<double>*>& per_node) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(size));
  std::vector<int> digits(space.size(), 0);
  for (std::size_t i = 0; i < size; ++i) {
    double p = 1.0;
    for (int n = 0; n < space.size(); ++n) {
      if (per_node[n]) p *= (*per_node[n])[digits[n]];
    }
    v[static_cast<Eigen::Index>(i)] = p;
    for (int n = 0; n < space.size(); ++n) {
      if (++digits[n] < space.cardinality(n)) break;
      digits[n] = 0;
    }
  }
  return v;
}

Eigen::VectorXd boundary_likelihood(const StateSpace& space, std::size_t size, const GriddedEvidence& ev, int k) {
  std::vector<const std::vector<double>*> per(space.size(), nullptr);
  bool any = false;
  for (int n = 0; n < space.size(); ++n) {
    per[n] = ev.likelihood(k, n);
    any = any || per[n];
  }
  if (!any) return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(size));
  return joint_vector(space, size, per);
}

std::vector<std::vector<double>> priors_of(const StateSpace& space, const ExactConfig& config) {
  std::vector<std::vector<double>> out;
  if (config.initial_distribution.empty()) {
    for (int n = 0; n < space.size(); ++n) out.emplace_back(space.cardinality(n), 1.0 / space.cardinality(n));
    return out;
  }
  if (static_cast<int>(config.initial_distribution.size()) != space.size()) {
    throw Error("initial distribution: one vector per node required");
  }
  for (int n = 0; n < space.size(); ++n) {
    auto v = config.initial_distribution[n];
    if (static_cast<int>(v.size()) != space.cardinality(n)) throw Error("initial distribution: wrong length");
    double s = 0.0;
    for (double x : v) {
      if (x < 0.0 || !std::isfinite(x)) throw Error("initial distribution: invalid entry");
      s += x;
    }
    if (!(s > 0.0)) throw Error("initial distribution: zero mass");
    for (double& x : v) x /= s;
    out.push_back(std::move(v));
  }
  return out;
}

double absorb(Eigen::VectorXd& f, const Eigen::VectorXd& like) {
  if (!like.allFinite()) throw Error("exact oracle: non-finite likelihood");
  f = f.cwiseProduct(like);
  const double z = f.sum();
  if (!(z > 0.0)) throw Error("exact oracle: observation has zero probability under the model");
  f /= z;
  return std::log(z);
}

struct ForwardPass {
  std::vector<Eigen::VectorXd> forward;
  double log_evidence = 0.0;
};

ForwardPass run_forward(const NetworkModel& model, const GriddedEvidence& ev, const ExactConfig& config,
                        const Propagator& prop, std::size_t size, bool keep) {
  const auto& grid = ev.grid;
  const auto& space = model.space();
  const auto priors = priors_of(space, config);
  std::vector<const std::vector<double>*> pp;
  for (const auto& v : priors) pp.push_back(&v);

  ForwardPass out;
  Eigen::VectorXd f = joint_vector(space, size, pp);
  f /= f.sum();
  out.log_evidence += absorb(f, boundary_likelihood(space, size, ev, 0));
  if (keep) out.forward.assign(grid.points(), Eigen::VectorXd());
  if (keep) out.forward[0] = f;
  const int segs = grid.segments();
  for (int k = 0; k < segs; ++k) {
    const double h = grid.step(k);
    for (std::size_t i = grid.first(k); i < grid.last(k); ++i) {
      prop.apply(f, h, true);
      f = f.cwiseMax(0.0);
      const double z = f.sum();
      f /= z;
      out.log_evidence += std::log(z);
      if (keep) out.forward[i + 1] = f;
    }
    if (k + 1 < segs) {
      out.log_evidence += absorb(f, boundary_likelihood(space, size, ev, k + 1));
      if (keep) out.forward[grid.first(k + 1)] = f;
    }
  }
  // Evidence at T folds into the final normaliser.
  const Eigen::VectorXd lt = boundary_likelihood(space, size, ev, segs);
  const double zt = f.dot(lt);
  if (!std::isfinite(zt)) throw Error("exact oracle: non-finite likelihood");
  if (!(zt > 0.0)) throw Error("exact oracle: observation has zero probability under the model");
  out.log_evidence += std::log(zt);
  return out;
}

}  // namespace

std::vector<double> JointPosterior::mean_value(int node) const {
  const int s = space.cardinality(node);
  const auto& nm = node_marginals.at(node);
  std::vector<double> out(grid.points(), 0.0);
  for (std::size_t p = 0; p < out.size(); ++p) {
    for (int x = 0; x < s; ++x) out[p] += nm[p * s + x] * state_value(x, s);
  }
  return out;
}

JointPosterior exact_smoothing(const NetworkModel& model, const GriddedEvidence& ev, const ExactConfig& config) {
  const auto& space = model.space();
  const std::size_t size = space.joint_size(config.joint_cap);
  const SpMat q = amalgamate(model, config.joint_cap);
  const Propagator prop(q, config.truncation);
  const auto& grid = ev.grid;
  const int segs = grid.segments();

  JointPosterior post;
  post.grid = grid;
  post.space = space;
  auto fw = run_forward(model, ev, config, prop, size, true);
  post.forward = std::move(fw.forward);
  post.log_evidence = fw.log_evidence;

  post.backward.assign(grid.points(), Eigen::VectorXd());
  Eigen::VectorXd b = boundary_likelihood(space, size, ev, segs);
  auto norm = [&b]() {
    b = b.cwiseMax(0.0);
    const double mx = b.maxCoeff();
    if (!(mx > 0.0)) throw Error("exact oracle: backward likelihood vanished");
    b /= mx;
  };
  norm();
  post.backward[grid.last(segs - 1)] = b;
  for (int k = segs - 1; k >= 0; --k) {
    const double h = grid.step(k);
    for (std::size_t i = grid.last(k); i > grid.first(k); --i) {
      prop.apply(b, h, false);
      norm();
      post.backward[i - 1] = b;
    }
    if (k > 0) {
      b = b.cwiseProduct(boundary_likelihood(space, size, ev, k));
      norm();
      post.backward[grid.last(k - 1)] = b;
    }
  }

  post.smoothed.resize(grid.points());
  post.node_marginals.assign(space.size(), {});
  for (int n = 0; n < space.size(); ++n) post.node_marginals[n].assign(grid.points() * space.cardinality(n), 0.0);
  for (std::size_t p = 0; p < grid.points(); ++p) {
    Eigen::VectorXd g = post.forward[p].cwiseProduct(post.backward[p]);
    const double z = g.sum();
    if (!(z > 0.0)) throw Error("exact oracle: smoothed distribution vanished");
    g /= z;
    std::vector<int> digits(space.size(), 0);
    for (std::size_t i = 0; i < size; ++i) {
      const double gi = g[static_cast<Eigen::Index>(i)];
      for (int n = 0; n < space.size(); ++n) post.node_marginals[n][p * space.cardinality(n) + digits[n]] += gi;
      for (int n = 0; n < space.size(); ++n) {
        if (++digits[n] < space.cardinality(n)) break;
        digits[n] = 0;
      }
    }
    post.smoothed[p] = std::move(g);
  }
  return post;
}

JointPosterior exact_smoothing(const NetworkModel& model, const ObservationSet& obs, const ExactConfig& config) {
  const auto ev = GriddedEvidence::build(model.space(), obs, config.grid_step, config.steps_per_segment);
  return exact_smoothing(model, ev, config);
}

SufficientStats exact_expected_stats(const NetworkModel& model, const JointPosterior& post) {
  const auto& space = model.space();
  const SpMat q = amalgamate(model, std::numeric_limits<std::size_t>::max());
  const auto size = static_cast<std::size_t>(q.rows());
  if (post.smoothed.size() != post.grid.points()) throw Error("exact_expected_stats: posterior grid mismatch");
  SufficientStats st = SufficientStats::zeros(model);
  const auto weights = post.grid.quadrature_weights();

  // Per joint state: local state and parent configuration of every node.
  std::vector<std::vector<int>> local(size), config(size);
  for (std::size_t i = 0; i < size; ++i) {
    local[i] = decode_joint(space, i);
    config[i].resize(space.size());
    for (int n = 0; n < space.size(); ++n) config[i][n] = model.parent_config(n, local[i]);
  }

  for (std::size_t p = 0; p < weights.size(); ++p) {
    const double w = weights[p];
    const auto& g = post.smoothed[p];
    const auto& f = post.forward[p];
    const auto& b = post.backward[p];
    const double z = f.dot(b);
    for (std::size_t i = 0; i < size; ++i) {
      const double gi = g[static_cast<Eigen::Index>(i)];
      for (int n = 0; n < space.size(); ++n) st.nodes[n].T(config[i][n], local[i][n]) += w * gi;
      const double fi = f[static_cast<Eigen::Index>(i)];
      if (fi == 0.0) continue;
      for (SpMat::InnerIterator it(q, static_cast<Eigen::Index>(i)); it; ++it) {
        const auto j = static_cast<std::size_t>(it.col());
        if (j == i) continue;
        const double flux = fi * it.value() * b[it.col()] / z;
        if (flux == 0.0) continue;
        int n = 0;
        while (local[i][n] == local[j][n]) ++n;
        st.nodes[n].M(config[i][n], local[i][n], local[j][n]) += w * flux;
      }
    }
  }
  const double horizon = post.grid.horizon();
  for (int n = 0; n < space.size(); ++n) {
    if (std::abs(st.nodes[n].total_time() - horizon) > 1e-6 * std::max(1.0, horizon)) {
      throw Error("exact_expected_stats: dwell times do not add up to the horizon; refine the grid");
    }
  }
  return st;
}

double exact_evidence(const NetworkModel& model, const GriddedEvidence& ev, const ExactConfig& config) {
  const std::size_t size = model.space().joint_size(config.joint_cap);
  const Propagator prop(amalgamate(model, config.joint_cap), config.truncation);
  return run_forward(model, ev, config, prop, size, false).log_evidence;
}

double exact_evidence(const NetworkModel& model, const ObservationSet& obs, const ExactConfig& config) {
  const auto ev = GriddedEvidence::build(model.space(), obs, config.grid_step, config.steps_per_segment);
  return exact_evidence(model, ev, config);
}

std::vector<std::vector<double>> exact_prior_marginals(const NetworkModel& model, double horizon,
                                                       const ExactConfig& config) {
  ObservationSet empty;
  empty.horizon = horizon;
  return exact_smoothing(model, empty, config).node_marginals;
}

}  // namespace ctbn
