#include "ctbn/star.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "format_util.hpp"

namespace ctbn {

namespace {

int slot_of(const std::vector<int>& parents, int node) {
  const auto it = std::lower_bound(parents.begin(), parents.end(), node);
  return static_cast<int>(it - parents.begin());
}

/// Conditional weights of a child's configurations with `skip` held fixed
/// (the factor of the skipped parent is left out).
double weight_excluding(const NetworkModel& model, const MarginalTrajectories& traj, int child, int config,
                        int skip, std::size_t p) {
  const auto& pa = model.graph().parents(child);
  const auto& ix = model.indexer(child);
  double w = 1.0;
  for (int s = 0; s < ix.slots(); ++s) {
    if (s == skip) continue;
    w *= traj.nodes[pa[s]].m[p * traj.nodes[pa[s]].states + ix.digit(config, s)];
  }
  return w;
}

void normalize_max(std::vector<double>& v, double& log_scale) {
  double mx = 0.0;
  for (double& x : v) {
    if (x < 0.0) x = 0.0;
    mx = std::max(mx, x);
  }
  if (!(mx > 0.0) || !std::isfinite(mx)) throw Error("backward sweep: multipliers vanished or overflowed; refine the grid");
  for (double& x : v) x /= mx;
  log_scale += std::log(mx);
}

/// y = A v (transpose = false) or y = A^T v, A row-major S x S.
void apply(const double* a, const std::vector<double>& v, std::vector<double>& y, int s, bool transpose) {
  for (int x = 0; x < s; ++x) {
    double acc = 0.0;
    for (int z = 0; z < s; ++z) acc += (transpose ? a[z * s + x] : a[x * s + z]) * v[z];
    y[x] = acc;
  }
}

/// One classical RK4 step of dv/dt = M(t) v with M linear in t across the step.
struct Rk4 {
  int s;
  static constexpr double kMaxStepNorm = 1.0;
  std::vector<double> mid, k1, k2, k3, k4, tmp, lo, hi;
  explicit Rk4(int states)
      : s(states), mid(static_cast<std::size_t>(states * states)), k1(states), k2(states), k3(states), k4(states),
        tmp(states) {}

  /// Advances across one grid interval, sub-stepping when the coefficients
  /// are large enough to leave the RK4 stability region.
  void advance(const double* a0, const double* a1, std::vector<double>& v, double h, bool transpose) {
    double norm = 0.0;
    for (int x = 0; x < s; ++x) {
      double r0 = 0.0, r1 = 0.0;
      for (int z = 0; z < s; ++z) {
        r0 += std::abs(a0[x * s + z]);
        r1 += std::abs(a1[x * s + z]);
      }
      norm = std::max({norm, r0, r1});
    }
    const int sub = std::max(1, static_cast<int>(std::ceil(h * norm / kMaxStepNorm)));
    if (sub == 1) {
      step(a0, a1, v, h, transpose);
      return;
    }
    lo.resize(mid.size());
    hi.resize(mid.size());
    for (int k = 0; k < sub; ++k) {
      const double f0 = static_cast<double>(k) / sub, f1 = static_cast<double>(k + 1) / sub;
      for (std::size_t i = 0; i < mid.size(); ++i) {
        lo[i] = (1.0 - f0) * a0[i] + f0 * a1[i];
        hi[i] = (1.0 - f1) * a0[i] + f1 * a1[i];
      }
      step(lo.data(), hi.data(), v, h / sub, transpose);
    }
  }

  void step(const double* a0, const double* a1, std::vector<double>& v, double h, bool transpose) {
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (a0[i] + a1[i]);
    apply(a0, v, k1, s, transpose);
    for (int x = 0; x < s; ++x) tmp[x] = v[x] + 0.5 * h * k1[x];
    apply(mid.data(), tmp, k2, s, transpose);
    for (int x = 0; x < s; ++x) tmp[x] = v[x] + 0.5 * h * k2[x];
    apply(mid.data(), tmp, k3, s, transpose);
    for (int x = 0; x < s; ++x) tmp[x] = v[x] + h * k3[x];
    apply(a1, tmp, k4, s, transpose);
    for (int x = 0; x < s; ++x) v[x] += h / 6.0 * (k1[x] + 2.0 * k2[x] + 2.0 * k3[x] + k4[x]);
  }
};

bool cim_has_small_rate(const Cim& cim, double floor) {
  for (const auto& r : cim.by_config) {
    for (int x = 0; x < cim.states; ++x) {
      for (int y = 0; y < cim.states; ++y) {
        if (x != y && r(x, y) < floor) return true;
      }
    }
  }
  return false;
}

}  // namespace

MarginalTrajectories MarginalTrajectories::uniform(const StateSpace& space, const TimeGrid& grid) {
  MarginalTrajectories t;
  t.grid = grid;
  const std::size_t p = grid.points();
  for (int n = 0; n < space.size(); ++n) {
    NodeTrajectory nt;
    nt.states = space.cardinality(n);
    const auto sz = p * static_cast<std::size_t>(nt.states);
    nt.m.assign(sz, 1.0 / nt.states);
    nt.rho.assign(sz, 1.0);
    nt.alpha.assign(sz, 1.0 / nt.states);
    nt.log_scale.assign(p, 0.0);
    t.nodes.push_back(std::move(nt));
  }
  return t;
}

std::vector<double> MarginalTrajectories::mean_value(int node) const {
  const auto& nt = nodes.at(node);
  std::vector<double> out(grid.points(), 0.0);
  for (std::size_t p = 0; p < out.size(); ++p) {
    for (int x = 0; x < nt.states; ++x) out[p] += nt.m[p * nt.states + x] * state_value(x, nt.states);
  }
  return out;
}

std::vector<std::vector<double>> initial_priors(const StateSpace& space, const InferenceConfig& config) {
  std::vector<std::vector<double>> out;
  if (config.initial_distribution.empty()) {
    for (int n = 0; n < space.size(); ++n) out.emplace_back(space.cardinality(n), 1.0 / space.cardinality(n));
    return out;
  }
  if (static_cast<int>(config.initial_distribution.size()) != space.size()) {
    throw Error("initial distribution: one vector per node required");
  }
  for (int n = 0; n < space.size(); ++n) {
    const auto& v = config.initial_distribution[n];
    if (static_cast<int>(v.size()) != space.cardinality(n)) throw Error("initial distribution: wrong length");
    double s = 0.0;
    for (double x : v) {
      if (x < 0.0) throw Error("initial distribution: negative entry");
      s += x;
    }
    if (!(s > 0.0)) throw Error("initial distribution: zero mass");
    std::vector<double> norm(v);
    for (double& x : norm) x /= s;
    out.push_back(std::move(norm));
  }
  return out;
}

std::vector<double> parent_weights(const NetworkModel& model, const MarginalTrajectories& traj, int node,
                                   std::size_t p) {
  const auto& ix = model.indexer(node);
  std::vector<double> w(static_cast<std::size_t>(ix.count()));
  for (int u = 0; u < ix.count(); ++u) w[u] = weight_excluding(model, traj, node, u, -1, p);
  return w;
}

std::vector<double> expected_rates(const Cim& cim, std::span<const double> weights, Cluster cluster,
                                   double rate_floor) {
  const int s = cim.states;
  std::vector<double> e(static_cast<std::size_t>(s * s), 0.0);
  for (int u = 0; u < cim.configs(); ++u) {
    const double w = weights[u];
    if (w == 0.0) continue;
    const auto& r = cim.by_config[u];
    for (int x = 0; x < s; ++x) {
      for (int y = 0; y < s; ++y) {
        if (x == y || cluster == Cluster::Star) {
          e[x * s + y] += w * r(x, y);
        } else {
          e[x * s + y] += w * std::log(std::max(r(x, y), rate_floor));
        }
      }
    }
  }
  if (cluster == Cluster::MeanField) {
    for (int x = 0; x < s; ++x) {
      for (int y = 0; y < s; ++y) {
        if (x != y) e[x * s + y] = std::exp(e[x * s + y]);
      }
    }
  }
  return e;
}

std::vector<double> compute_psi(const NetworkModel& model, const MarginalTrajectories& traj, int node,
                                std::size_t p, Cluster cluster, double rate_floor) {
  std::vector<double> psi(static_cast<std::size_t>(model.space().cardinality(node)), 0.0);
  for (int j : model.graph().children(node)) {
    const auto& pa = model.graph().parents(j);
    const int slot = slot_of(pa, node);
    const auto& ix = model.indexer(j);
    const auto& cim = model.cim(j);
    const int s = cim.states;
    const auto& nj = traj.nodes[j];
    const double* mj = nj.m.data() + p * s;
    const double* aj = nj.alpha.data() + p * s;
    const double* rj = nj.rho.data() + p * s;
    std::vector<double> eff;
    if (cluster == Cluster::MeanField) eff = expected_rates(cim, parent_weights(model, traj, j, p), cluster, rate_floor);
    for (int u = 0; u < ix.count(); ++u) {
      const double w = weight_excluding(model, traj, j, u, slot, p);
      if (w == 0.0) continue;
      const auto& r = cim.by_config[u];
      double k = 0.0;
      for (int x = 0; x < s; ++x) {
        k += mj[x] * r(x, x);
        for (int y = 0; y < s; ++y) {
          if (y == x) continue;
          // m(x) rho(y)/rho(x) == alpha(x) rho(y), finite even where rho(x) = 0
          const double flow = aj[x] * rj[y];
          if (cluster == Cluster::Star) {
            k += flow * r(x, y);
          } else {
            k += flow * eff[x * s + y] * std::log(std::max(r(x, y), rate_floor));
          }
        }
      }
      psi[ix.digit(u, slot)] += w * k;
    }
  }
  return psi;
}

std::vector<double> compute_tau(const Cim& cim, std::span<const double> weights, std::span<const double> m,
                                std::span<const double> rho) {
  const int s = cim.states;
  std::vector<double> tau(static_cast<std::size_t>(cim.configs() * s * s), 0.0);
  for (int u = 0; u < cim.configs(); ++u) {
    const auto& r = cim.by_config[u];
    for (int x = 0; x < s; ++x) {
      double out = 0.0;
      for (int y = 0; y < s; ++y) {
        if (y == x) continue;
        const double t = m[x] * weights[u] * r(x, y) * rho[y] / rho[x];
        tau[(u * s + x) * s + y] = t;
        out += t;
      }
      tau[(u * s + x) * s + x] = -out;
    }
  }
  return tau;
}

std::vector<double> master_drift(std::span<const double> m, std::span<const double> rho,
                                 std::span<const double> rates) {
  const auto s = static_cast<int>(m.size());
  std::vector<double> d(m.size(), 0.0);
  for (int x = 0; x < s; ++x) {
    for (int y = 0; y < s; ++y) {
      if (y == x) continue;
      d[x] += m[y] * rates[y * s + x] * rho[x] / rho[y] - m[x] * rates[x * s + y] * rho[y] / rho[x];
    }
  }
  return d;
}

NodeCoefficients node_coefficients(const NetworkModel& model, const MarginalTrajectories& view, int node,
                                   Cluster cluster, double rate_floor) {
  NodeCoefficients c;
  const int s = model.space().cardinality(node);
  c.states = s;
  const std::size_t np = view.grid.points();
  c.generator.resize(np * s * s);
  c.diagonal.resize(np * s);
  c.psi.resize(np * s);
  if (cluster == Cluster::MeanField) {
    c.floored = cim_has_small_rate(model.cim(node), rate_floor);
    for (int j : model.graph().children(node)) c.floored = c.floored || cim_has_small_rate(model.cim(j), rate_floor);
  }
  const bool has_parents = !model.graph().parents(node).empty();
  const bool has_children = !model.graph().children(node).empty();
  std::vector<double> eff;
  for (std::size_t p = 0; p < np; ++p) {
    if (p == 0 || has_parents) eff = expected_rates(model.cim(node), parent_weights(model, view, node, p), cluster, rate_floor);
    std::copy(eff.begin(), eff.end(), c.generator.begin() + static_cast<std::ptrdiff_t>(p * s * s));
    for (int x = 0; x < s; ++x) c.diagonal[p * s + x] = eff[x * s + x];
    if (has_children) {
      const auto psi = compute_psi(model, view, node, p, cluster, rate_floor);
      for (int x = 0; x < s; ++x) {
        c.psi[p * s + x] = psi[x];
        c.generator[p * s * s + x * s + x] += psi[x];
      }
    } else {
      std::fill_n(c.psi.begin() + static_cast<std::ptrdiff_t>(p * s), s, 0.0);
    }
  }
  return c;
}

namespace {

void backward_with(const NodeCoefficients& coef, const GriddedEvidence& ev, int node, NodeTrajectory& out) {
  const auto& grid = ev.grid;
  const int s = coef.states;
  const std::size_t np = grid.points();
  out.states = s;
  out.rho.assign(np * s, 0.0);
  out.log_scale.assign(np, 0.0);
  const int segs = grid.segments();

  std::vector<double> v(s, 1.0);
  if (const auto* l = ev.likelihood(segs, node)) v = *l;
  double ls = 0.0;
  normalize_max(v, ls);
  auto store = [&](std::size_t p) {
    std::copy(v.begin(), v.end(), out.rho.begin() + static_cast<std::ptrdiff_t>(p * s));
    out.log_scale[p] = ls;
  };
  store(grid.last(segs - 1));

  Rk4 rk(s);
  for (int k = segs - 1; k >= 0; --k) {
    const double h = grid.step(k);
    for (std::size_t i = grid.last(k); i > grid.first(k); --i) {
      // reversed time: d rho/ds = A rho
      rk.advance(coef.generator.data() + i * s * s, coef.generator.data() + (i - 1) * s * s, v, h, false);
      normalize_max(v, ls);
      store(i - 1);
    }
    if (k > 0) {
      if (const auto* l = ev.likelihood(k, node)) {
        for (int x = 0; x < s; ++x) v[x] *= (*l)[x];
      }
      normalize_max(v, ls);
      store(grid.last(k - 1));
    }
  }
}

void forward_with(const NodeCoefficients& coef, const GriddedEvidence& ev, int node, const std::vector<double>& prior,
                  NodeTrajectory& out) {
  const auto& grid = ev.grid;
  const int s = coef.states;
  const std::size_t np = grid.points();
  out.m.assign(np * s, 0.0);
  out.alpha.assign(np * s, 0.0);
  const int segs = grid.segments();

  std::vector<double> v = prior;
  if (const auto* l = ev.likelihood(0, node)) {
    for (int x = 0; x < s; ++x) v[x] *= (*l)[x];
  }
  auto store = [&](std::size_t p) {
    const double* rho = out.rho.data() + p * s;
    double z = 0.0;
    for (int x = 0; x < s; ++x) {
      if (v[x] < 0.0) v[x] = 0.0;
      z += v[x] * rho[x];
    }
    if (!(z > 0.0) || !std::isfinite(z)) throw Error("forward sweep: posterior mass vanished");
    for (int x = 0; x < s; ++x) {
      v[x] /= z;
      out.alpha[p * s + x] = v[x];
      out.m[p * s + x] = v[x] * rho[x];
    }
  };
  store(0);

  Rk4 rk(s);
  for (int k = 0; k < segs; ++k) {
    const double h = grid.step(k);
    for (std::size_t i = grid.first(k); i < grid.last(k); ++i) {
      rk.advance(coef.generator.data() + i * s * s, coef.generator.data() + (i + 1) * s * s, v, h, true);
      store(i + 1);
    }
    if (k + 1 < segs) {
      if (const auto* l = ev.likelihood(k + 1, node)) {
        for (int x = 0; x < s; ++x) v[x] *= (*l)[x];
      }
      store(grid.first(k + 1));
    }
  }
}

/// Geometric blend of old and new multipliers, ln rho <- (1-g) ln rho_old + g ln rho_new.
/// The forward pass then runs on the blended rho, so m and alpha stay consistent.
void blend_multipliers(const NodeTrajectory& old, double gamma, NodeTrajectory& next) {
  const int s = next.states;
  const std::size_t np = next.log_scale.size();
  for (std::size_t p = 0; p < np; ++p) {
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> lg(s);
    for (int x = 0; x < s; ++x) {
      const double ro = old.rho[p * s + x], rn = next.rho[p * s + x];
      if (ro > 0.0 && rn > 0.0) {
        lg[x] = (1.0 - gamma) * (std::log(ro) + old.log_scale[p]) + gamma * (std::log(rn) + next.log_scale[p]);
      } else {
        lg[x] = -std::numeric_limits<double>::infinity();
      }
      mx = std::max(mx, lg[x]);
    }
    if (!std::isfinite(mx)) continue;  // keep the undamped values
    for (int x = 0; x < s; ++x) next.rho[p * s + x] = std::exp(lg[x] - mx);
    next.log_scale[p] = mx;
  }
}

}  // namespace

void backward_sweep(const NetworkModel& model, const GriddedEvidence& evidence, const MarginalTrajectories& view,
                    int node, NodeTrajectory& out, const InferenceConfig& config) {
  const auto coef = node_coefficients(model, view, node, config.cluster, config.rate_floor);
  backward_with(coef, evidence, node, out);
}

void forward_sweep(const NetworkModel& model, const GriddedEvidence& evidence, const MarginalTrajectories& view,
                   int node, NodeTrajectory& out, const InferenceConfig& config) {
  const auto coef = node_coefficients(model, view, node, config.cluster, config.rate_floor);
  const auto priors = initial_priors(model.space(), config);
  forward_with(coef, evidence, node, priors[node], out);
}

bool update_node(const NetworkModel& model, const GriddedEvidence& evidence, const MarginalTrajectories& view,
                 int node, NodeTrajectory& out, const InferenceConfig& config) {
  // Coefficients depend only on neighbours, so one evaluation serves both passes.
  const auto coef = node_coefficients(model, view, node, config.cluster, config.rate_floor);
  const auto priors = initial_priors(model.space(), config);
  backward_with(coef, evidence, node, out);
  forward_with(coef, evidence, node, priors[node], out);
  return coef.floored;
}

InferenceResult fixed_point(const NetworkModel& model, const GriddedEvidence& evidence, const InferenceConfig& config,
                            const MarginalTrajectories* warm_start) {
  if (!(config.tolerance > 0.0)) throw Error("inference config: tolerance must be positive");
  if (!(config.damping > 0.0 && config.damping <= 1.0)) throw Error("inference config: damping must lie in (0, 1]");
  InferenceResult res;
  auto& traj = res.trajectories;
  if (warm_start) {
    if (warm_start->grid.points() != evidence.grid.points()) throw Error("fixed_point: warm start grid mismatch");
    traj = *warm_start;
  } else {
    traj = MarginalTrajectories::uniform(model.space(), evidence.grid);
  }
  auto& rep = res.report;
  bool floored = false;
  const auto priors = initial_priors(model.space(), config);
  const int n_nodes = model.size();

  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    const MarginalTrajectories before = traj;
    const MarginalTrajectories& view_sync = before;
    for (int n = 0; n < n_nodes; ++n) {
      const MarginalTrajectories& view = config.schedule == Schedule::Synchronous ? view_sync : traj;
      NodeTrajectory next = traj.nodes[n];
      const auto coef = node_coefficients(model, view, n, config.cluster, config.rate_floor);
      floored = floored || coef.floored;
      backward_with(coef, evidence, n, next);
      // The first sweep is never damped: the uniform start ignores noiseless
      // evidence and carries no usable multipliers.
      if (config.damping < 1.0 && (sweep > 1 || warm_start)) blend_multipliers(before.nodes[n], config.damping, next);
      forward_with(coef, evidence, n, priors[n], next);
      traj.nodes[n] = std::move(next);
    }
    double residual = 0.0;
    for (int n = 0; n < n_nodes; ++n) {
      const auto& a = traj.nodes[n].m;
      const auto& b = before.nodes[n].m;
      for (std::size_t i = 0; i < a.size(); ++i) residual = std::max(residual, std::abs(a[i] - b[i]));
    }
    rep.sweeps = sweep;
    rep.residual = residual;
    rep.residual_trace.push_back(residual);
    if (config.track_energy) rep.energy_trace.push_back(variational_energy(model, evidence, traj, config).total);
    if (residual < config.tolerance) {
      rep.converged = true;
      break;
    }
  }
  if (floored) rep.warnings.push_back("mean field: rates below the floor were clipped before taking logs");
  if (!rep.converged) {
    rep.warnings.push_back("fixed point not converged after " + std::to_string(rep.sweeps) +
                           " sweeps (residual " + std::to_string(rep.residual) + ")");
  }
  return res;
}

InferenceResult fixed_point(const NetworkModel& model, const ObservationSet& obs, const InferenceConfig& config) {
  const auto ev = GriddedEvidence::build(model.space(), obs, config.grid_step, config.steps_per_segment);
  return fixed_point(model, ev, config);
}

InferenceResult mean_field_fixed_point(const NetworkModel& model, const ObservationSet& obs, InferenceConfig config) {
  config.cluster = Cluster::MeanField;
  return fixed_point(model, obs, config);
}

NodeEnergy node_energy(const NetworkModel& model, const MarginalTrajectories& traj, int node, Cluster cluster,
                       double rate_floor) {
  const auto coef = node_coefficients(model, traj, node, cluster, rate_floor);
  const auto& nt = traj.nodes[node];
  const auto& grid = traj.grid;
  const int s = nt.states;
  const auto& cim = model.cim(node);
  const std::size_t np = grid.points();
  std::vector<double> combined(np, 0.0);  // integrand of H_n + E_n after integration by parts
  std::vector<double> energy(np, 0.0);    // integrand of E_n

  for (std::size_t p = 0; p < np; ++p) {
    const double* m = nt.m.data() + p * s;
    const double* a = nt.alpha.data() + p * s;
    const double* r = nt.rho.data() + p * s;
    const double* gen = coef.generator.data() + p * s * s;
    const double* diag = coef.diagonal.data() + p * s;
    const auto w = parent_weights(model, traj, node, p);
    double c = 0.0, e = 0.0;
    for (int x = 0; x < s; ++x) {
      c += m[x] * diag[x];
      e += m[x] * diag[x];
      double arho = 0.0;  // (A rho)(x)
      for (int y = 0; y < s; ++y) arho += gen[x * s + y] * r[y];
      c -= a[x] * arho;  // sum_x m d(ln rho)/dt
      for (int y = 0; y < s; ++y) {
        if (y == x) continue;
        const double flow = a[x] * r[y];
        if (flow == 0.0) continue;
        c += flow * gen[x * s + y];  // sum_u tau^u(x,y)
        if (cluster == Cluster::Star) {
          for (int u = 0; u < cim.configs(); ++u) {
            const double rate = cim.by_config[u](x, y);
            if (rate > 0.0 && w[u] > 0.0) e += flow * w[u] * rate * std::log(rate);
          }
        } else {
          double elog = 0.0;
          for (int u = 0; u < cim.configs(); ++u) elog += w[u] * std::log(std::max(cim.by_config[u](x, y), rate_floor));
          e += flow * gen[x * s + y] * elog;
        }
      }
    }
    combined[p] = c;
    energy[p] = e;
  }

  // Boundary terms of the integration by parts, -[sum_x m ln rho_true] per segment.
  auto m_log_rho = [&](std::size_t p) {
    double acc = 0.0;
    for (int x = 0; x < s; ++x) {
      const double mv = nt.m[p * s + x];
      if (mv > 0.0) acc += mv * (std::log(nt.rho[p * s + x]) + nt.log_scale[p]);
    }
    return acc;
  };
  double boundary = 0.0;
  for (int k = 0; k < grid.segments(); ++k) boundary -= m_log_rho(grid.last(k)) - m_log_rho(grid.first(k));

  NodeEnergy out;
  out.energy = grid.integrate(energy);
  const double total = grid.integrate(combined) + boundary;
  out.entropy = total - out.energy;
  return out;
}

EnergyBreakdown variational_energy(const NetworkModel& model, const GriddedEvidence& evidence,
                                   const MarginalTrajectories& traj, const InferenceConfig& config) {
  if (evidence.grid.points() != traj.grid.points()) throw Error("variational_energy: grid mismatch");
  EnergyBreakdown out;
  const int n_nodes = model.size();
  for (int n = 0; n < n_nodes; ++n) out.nodes.push_back(node_energy(model, traj, n, config.cluster, config.rate_floor));

  const auto& grid = traj.grid;
  for (std::size_t k = 0; k < grid.boundaries.size(); ++k) {
    if (evidence.at_boundary[k] < 0) continue;
    const std::size_t p = k == 0 ? 0 : (k == grid.boundaries.size() - 1 ? grid.points() - 1 : grid.first(static_cast<int>(k)));
    for (int n = 0; n < n_nodes; ++n) {
      const auto* l = evidence.likelihood(static_cast<int>(k), n);
      if (!l) continue;
      const auto& nt = traj.nodes[n];
      for (int x = 0; x < nt.states; ++x) {
        const double mv = nt.m[p * nt.states + x];
        if (mv <= 0.0) continue;
        out.likelihood += (*l)[x] > 0.0 ? mv * std::log((*l)[x]) : -std::numeric_limits<double>::infinity();
      }
    }
  }

  const auto priors = initial_priors(model.space(), config);
  for (int n = 0; n < n_nodes; ++n) {
    const auto& nt = traj.nodes[n];
    for (int x = 0; x < nt.states; ++x) {
      const double mv = nt.m[x];
      if (mv <= 0.0) continue;
      out.initial += priors[n][x] > 0.0 ? mv * std::log(priors[n][x] / mv) : -std::numeric_limits<double>::infinity();
    }
  }
  out.total = out.likelihood + out.initial;
  for (const auto& e : out.nodes) out.total += e.entropy + e.energy;
  return out;
}

EnergyBreakdown variational_energy(const NetworkModel& model, const ObservationSet& obs,
                                   const MarginalTrajectories& traj, const InferenceConfig& config) {
  const auto ev = GriddedEvidence::build(model.space(), obs, config.grid_step, config.steps_per_segment);
  return variational_energy(model, ev, traj, config);
}

FamilyStats node_expected_stats(const NetworkModel& model, const MarginalTrajectories& traj, int node,
                                Cluster cluster, double rate_floor) {
  const auto& nt = traj.nodes[node];
  const int s = nt.states;
  const auto& cim = model.cim(node);
  FamilyStats st(s, cim.configs());
  const auto weights = traj.grid.quadrature_weights();
  for (std::size_t p = 0; p < weights.size(); ++p) {
    const double q = weights[p];
    const auto w = parent_weights(model, traj, node, p);
    std::vector<double> eff;
    if (cluster == Cluster::MeanField) eff = expected_rates(cim, w, cluster, rate_floor);
    const double* m = nt.m.data() + p * s;
    const double* a = nt.alpha.data() + p * s;
    const double* r = nt.rho.data() + p * s;
    for (int u = 0; u < cim.configs(); ++u) {
      if (w[u] == 0.0) continue;
      for (int x = 0; x < s; ++x) {
        st.T(u, x) += q * m[x] * w[u];
        for (int y = 0; y < s; ++y) {
          if (y == x) continue;
          const double rate = cluster == Cluster::Star ? cim.by_config[u](x, y) : eff[x * s + y];
          st.M(u, x, y) += q * a[x] * r[y] * w[u] * rate;
        }
      }
    }
  }
  return st;
}

SufficientStats expected_stats(const NetworkModel& model, const MarginalTrajectories& traj, Cluster cluster,
                               double rate_floor) {
  SufficientStats out;
  for (int n = 0; n < model.size(); ++n) out.nodes.push_back(node_expected_stats(model, traj, n, cluster, rate_floor));
  return out;
}

InvariantReport check_invariants(const NetworkModel& model, const MarginalTrajectories& traj, Cluster cluster,
                                 double rate_floor) {
  InvariantReport rep;
  rep.min_rho = std::numeric_limits<double>::infinity();
  for (int n = 0; n < model.size(); ++n) {
    const auto& nt = traj.nodes[n];
    const int s = nt.states;
    const auto& cim = model.cim(n);
    for (std::size_t p = 0; p < traj.grid.points(); ++p) {
      const auto m = nt.m_at(p);
      const auto rho = nt.rho_at(p);
      double sum = 0.0, rmin = std::numeric_limits<double>::infinity();
      for (int x = 0; x < s; ++x) {
        sum += m[x];
        rmin = std::min(rmin, rho[x]);
      }
      rep.max_normalization_error = std::max(rep.max_normalization_error, std::abs(sum - 1.0));
      rep.min_rho = std::min(rep.min_rho, rmin);
      if (!(rmin > 0.0)) continue;  // noiseless reset instant; ratios undefined

      const auto w = parent_weights(model, traj, n, p);
      const auto eff = expected_rates(cim, w, cluster, rate_floor);
      const auto drift = master_drift(m, rho, eff);
      std::vector<double> flux(s, 0.0);
      if (cluster == Cluster::Star) {
        const auto tau = compute_tau(cim, w, m, rho);
        for (int u = 0; u < cim.configs(); ++u) {
          for (int x = 0; x < s; ++x) {
            for (int y = 0; y < s; ++y) {
              if (y == x) continue;
              flux[x] += tau[(u * s + y) * s + x] - tau[(u * s + x) * s + y];
            }
          }
        }
      } else {
        for (int x = 0; x < s; ++x) {
          for (int y = 0; y < s; ++y) {
            if (y == x) continue;
            flux[x] += m[y] * eff[y * s + x] * rho[x] / rho[y] - m[x] * eff[x * s + y] * rho[y] / rho[x];
          }
        }
      }
      for (int x = 0; x < s; ++x) rep.max_flux_error = std::max(rep.max_flux_error, std::abs(drift[x] - flux[x]));
    }
  }
  return rep;
}

void write_marginals_csv(const std::string& path, const MarginalTrajectories& traj,
                         const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "# ctbn-marginals/1\n";
  for (const auto& h : header) out << "# " << h << '\n';
  out << "time,node,state,m,rho\n";
  for (std::size_t p = 0; p < traj.grid.points(); ++p) {
    for (std::size_t n = 0; n < traj.nodes.size(); ++n) {
      const auto& nt = traj.nodes[n];
      for (int x = 0; x < nt.states; ++x) {
        out << fmt_double(traj.grid.times[p]) << ',' << n << ',' << x << ',' << fmt_double(nt.m[p * nt.states + x])
            << ',' << fmt_double(nt.rho[p * nt.states + x]) << '\n';
      }
    }
  }
}

}  // namespace ctbn
