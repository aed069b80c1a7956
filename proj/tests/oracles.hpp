#pragma once

// Reference computations for the test suite, written from first principles:
// recursive outcome enumeration for forwarding policies, scalar closed forms
// for the Riccati fixed points, and dense quadrature for the sampled-data
// transcription. Library results are always checked against one of these
// structurally different routes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "wncs/discretize.hpp"
#include "wncs/forwarding.hpp"
#include "wncs/model.hpp"

namespace oracle {

using wncs::MatrixXd;
using wncs::VectorXd;

// ---------------------------------------------------------------------------
// Topology builders (node ids 0-based, destination = last node).

inline wncs::NetworkTopology single_link(double p_loss, double slot_ms = 10.0) {
  wncs::NetworkTopology t;
  t.node_count = 2;
  t.slot_ms = slot_ms;
  t.source = 0;
  t.links.push_back({0, 1, p_loss});
  return t;
}

// Chain 0 -> 1 -> ... -> n with one loss probability per hop.
inline wncs::NetworkTopology line_topology(const std::vector<double>& loss,
                                           double slot_ms = 10.0) {
  wncs::NetworkTopology t;
  t.node_count = static_cast<int>(loss.size()) + 1;
  t.slot_ms = slot_ms;
  t.source = 0;
  for (std::size_t i = 0; i < loss.size(); ++i)
    t.links.push_back({static_cast<int>(i), static_cast<int>(i) + 1, loss[i]});
  return t;
}

inline wncs::NetworkTopology complete_topology(int nodes, std::mt19937_64& rng,
                                               double slot_ms = 10.0) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  wncs::NetworkTopology t;
  t.node_count = nodes;
  t.slot_ms = slot_ms;
  t.source = 0;
  for (int i = 0; i < nodes; ++i)
    for (int j = 0; j < nodes; ++j)
      if (i != j) t.links.push_back({i, j, u(rng)});
  return t;
}

// Random connected-to-destination digraph with bounded out-degree. Every node
// keeps its forward chain link so the destination stays reachable; extra
// links are sprinkled at random.
inline wncs::NetworkTopology random_topology(int nodes, int max_out_degree,
                                             std::mt19937_64& rng,
                                             double slot_ms = 10.0) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  wncs::NetworkTopology t;
  t.node_count = nodes;
  t.slot_ms = slot_ms;
  t.source = 0;
  for (int i = 0; i + 1 < nodes; ++i) {
    t.links.push_back({i, i + 1, u(rng)});
    int extra = static_cast<int>(rng() % static_cast<std::uint64_t>(max_out_degree));
    std::vector<int> targets;
    for (int j = 0; j < nodes; ++j)
      if (j != i && j != i + 1) targets.push_back(j);
    std::shuffle(targets.begin(), targets.end(), rng);
    for (int k = 0; k < extra && k < static_cast<int>(targets.size()); ++k)
      t.links.push_back({i, targets[k], u(rng)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Exact policy evaluation by enumerating every slot-outcome sequence.

struct PolicyOutcome {
  double rho = 0.0;
  double cost = 0.0;
};

inline double link_loss(const wncs::NetworkTopology& topo, int from, int to) {
  for (const auto& l : topo.links)
    if (l.from == from && l.to == to) return l.p_loss;
  throw std::logic_error("no such link");
}

namespace detail {

template <typename ActionFn>
void walk_outcomes(const wncs::NetworkTopology& topo, const ActionFn& action, int node, int t,
                   int deadline, double prob, PolicyOutcome& out) {
  if (node == topo.destination()) {
    out.rho += prob;
    return;
  }
  if (t == deadline) return;
  const int hop = action(node, t);
  if (hop == node) {
    walk_outcomes(topo, action, node, t + 1, deadline, prob, out);
    return;
  }
  const double p = link_loss(topo, node, hop);
  out.cost += prob;
  walk_outcomes(topo, action, hop, t + 1, deadline, prob * (1.0 - p), out);
  walk_outcomes(topo, action, node, t + 1, deadline, prob * p, out);
}

}  // namespace detail

template <typename ActionFn>
PolicyOutcome evaluate_actions(const wncs::NetworkTopology& topo, const ActionFn& action,
                               int source, int deadline) {
  PolicyOutcome out;
  detail::walk_outcomes(topo, action, source, 0, deadline, 1.0, out);
  return out;
}

inline PolicyOutcome evaluate_deterministic(const wncs::NetworkTopology& topo,
                                            const wncs::DeterministicPolicy& policy) {
  return evaluate_actions(
      topo, [&](int i, int t) { return policy.action_at(i, t); }, policy.source,
      policy.deadline);
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration of deterministic time-indexed action tables.

// One (rho, cost) pair per policy, every policy included (not Pareto-reduced).
inline std::vector<PolicyOutcome> all_policy_outcomes(const wncs::NetworkTopology& topo,
                                                      int source, int deadline,
                                                      std::size_t cap = 4'000'000) {
  const int z = topo.node_count;
  const int dest = topo.destination();
  const auto out_links = topo.out_links();

  // Per decision cell (non-destination node, slot): hold or one out-neighbor.
  struct Cell {
    int node;
    std::vector<int> choices;
  };
  std::vector<Cell> cells;
  for (int i = 0; i < z; ++i) {
    if (i == dest) continue;
    Cell c{i, {i}};
    for (const auto& [j, p] : out_links[i]) c.choices.push_back(j);
    for (int t = 0; t < deadline; ++t) cells.push_back(c);
  }

  std::size_t total = 1;
  for (const auto& c : cells) {
    if (total > cap / c.choices.size()) throw std::length_error("policy space too large");
    total *= c.choices.size();
  }

  std::vector<int> table(static_cast<std::size_t>(z) * deadline);
  std::vector<std::size_t> digit(cells.size(), 0);
  // Cell order: node-major, slot-minor; destination rows stay HOLD.
  for (int t = 0; t < deadline; ++t) table[static_cast<std::size_t>(dest) * deadline + t] = dest;

  std::vector<PolicyOutcome> results;
  results.reserve(total);
  const auto cell_slot = [&](std::size_t idx) { return static_cast<int>(idx % deadline); };
  for (std::size_t rank = 0; rank < total; ++rank) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const int node = cells[k].node;
      table[static_cast<std::size_t>(node) * deadline + cell_slot(k)] =
          cells[k].choices[digit[k]];
    }
    results.push_back(evaluate_actions(
        topo, [&](int i, int t) { return table[static_cast<std::size_t>(i) * deadline + t]; },
        source, deadline));
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (++digit[k] < cells[k].choices.size()) break;
      digit[k] = 0;
    }
  }
  return results;
}

inline double best_weighted_utility(const std::vector<PolicyOutcome>& outcomes, double delta) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& o : outcomes) best = std::max(best, o.rho - delta * o.cost);
  return best;
}

// Pareto-maximal points: cost strictly increasing, reliability strictly
// increasing.
inline std::vector<PolicyOutcome> pareto_frontier(std::vector<PolicyOutcome> pts) {
  std::sort(pts.begin(), pts.end(), [](const PolicyOutcome& a, const PolicyOutcome& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.rho > b.rho;
  });
  std::vector<PolicyOutcome> front;
  double best_rho = -1.0;
  for (const auto& p : pts) {
    if (p.rho > best_rho + 1e-15) {
      front.push_back(p);
      best_rho = p.rho;
    }
  }
  return front;
}

// Maximum reliability achievable at expected cost <= c_req by mixing two
// deterministic policies, checked the slow way over every pair.
inline double envelope_reliability(const std::vector<PolicyOutcome>& outcomes, double c_req) {
  double best = 0.0;
  for (const auto& a : outcomes)
    if (a.cost <= c_req + 1e-15) best = std::max(best, a.rho);
  for (const auto& a : outcomes)
    for (const auto& b : outcomes) {
      if (!(a.cost < c_req && b.cost > c_req)) continue;
      const double theta = (b.cost - c_req) / (b.cost - a.cost);
      best = std::max(best, theta * a.rho + (1.0 - theta) * b.rho);
    }
  return best;
}

// ---------------------------------------------------------------------------
// Plant builders.

inline MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = rows.size();
  const auto c = rows.begin()->size();
  MatrixXd m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Second-order benchmark family: position-velocity dynamics with natural
// frequency omega0, damping ratio zeta (sign flipped by alpha), and the
// standard weights used throughout the experiments.
inline wncs::ContinuousPlant second_order_plant(double alpha, double zeta, double omega0) {
  wncs::ContinuousPlant p;
  p.a = mat({{0.0, 1.0}, {-omega0 * omega0, -2.0 * alpha * zeta * omega0}});
  p.b = mat({{0.0}, {omega0 * omega0}});
  p.c = mat({{1.0, 0.0}});
  p.rv_c = 0.5 * MatrixXd::Identity(2, 2);
  p.rw = mat({{1e-4}});
  p.sigma0 = MatrixXd::Identity(2, 2);
  p.q_xx = mat({{2.0, 0.0}, {0.0, 1.0}});
  p.q_xu = MatrixXd::Zero(2, 1);
  p.q_uu = mat({{1.0}});
  p.q0 = MatrixXd::Zero(2, 2);
  return p;
}

inline wncs::ContinuousPlant unstable_benchmark_plant() {
  return second_order_plant(-1.0, 1.0, 1.0);
}

inline wncs::ContinuousPlant scalar_plant(double a, double b, double qxx = 1.0,
                                          double quu = 1.0, double rv = 1.0, double rw = 1.0,
                                          double sigma0 = 1.0) {
  wncs::ContinuousPlant p;
  p.a = mat({{a}});
  p.b = mat({{b}});
  p.c = mat({{1.0}});
  p.rv_c = mat({{rv}});
  p.rw = mat({{rw}});
  p.sigma0 = mat({{sigma0}});
  p.q_xx = mat({{qxx}});
  p.q_xu = mat({{0.0}});
  p.q_uu = mat({{quu}});
  p.q0 = mat({{0.0}});
  return p;
}

inline MatrixXd random_matrix(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

inline MatrixXd random_psd(std::mt19937_64& rng, int n, double ridge = 0.0) {
  const MatrixXd m = random_matrix(rng, n, n);
  return m * m.transpose() + ridge * MatrixXd::Identity(n, n);
}

// Random controllable-by-construction plant. Stable variants shift the drift
// spectrum left of the imaginary axis; unstable variants leave it random.
inline wncs::ContinuousPlant random_plant(std::mt19937_64& rng, int n, bool stable) {
  wncs::ContinuousPlant p;
  p.a = random_matrix(rng, n, n);
  if (stable) {
    const double shift = p.a.eigenvalues().real().maxCoeff();
    p.a -= (shift + 0.3) * MatrixXd::Identity(n, n);
  }
  p.b = random_matrix(rng, n, 1);
  p.c = MatrixXd::Zero(1, n);
  p.c(0, 0) = 1.0;
  p.rv_c = random_psd(rng, n, 0.1);
  p.rw = mat({{0.01}});
  p.sigma0 = MatrixXd::Identity(n, n);
  p.q_xx = random_psd(rng, n, 0.1);
  p.q_xu = MatrixXd::Zero(n, 1);
  p.q_uu = mat({{1.0}});
  p.q0 = MatrixXd::Zero(n, n);
  return p;
}

// Synthetic extended-state system fed straight into the Riccati and
// covariance routines, bypassing discretization. The composite cost block is
// generated PSD with a PD input block; the transition matrix is scaled to the
// requested spectral radius.
inline wncs::DiscretePlant synthetic_system(std::mt19937_64& rng, int n, int m,
                                            double spectral = 0.9) {
  const int e = n + m;
  wncs::DiscretePlant dp;
  dp.phi = random_matrix(rng, e, e);
  const double sr = dp.phi.eigenvalues().cwiseAbs().maxCoeff();
  if (sr > 0.0) dp.phi *= spectral / sr;
  dp.gamma = random_matrix(rng, e, m);
  dp.g = MatrixXd::Zero(e, n);
  dp.g.topLeftCorner(n, n).setIdentity();
  dp.c_ext = random_matrix(rng, 1, e);
  dp.rv = random_psd(rng, n, 0.1);
  dp.rw = mat({{0.05}});
  const MatrixXd composite = random_psd(rng, e + m, 0.05);
  dp.xi_xx = composite.topLeftCorner(e, e);
  dp.xi_xu = composite.topRightCorner(e, m);
  dp.xi_uu = composite.bottomRightCorner(m, m);
  dp.xi0 = MatrixXd::Zero(e, e);
  dp.p0 = random_psd(rng, e, 0.1);
  dp.h_s = 0.1;
  dp.tau_s = 0.1;
  dp.n = n;
  dp.m = m;
  return dp;
}

// ---------------------------------------------------------------------------
// Dense integration oracles for the sampled-data transcription.

// Integrates xdot = A x + B u with u held constant, accumulating the running
// quadratic cost x'Qxx x + 2 x'Qxu u + u'Quu u alongside via classic
// fourth-order Runge-Kutta on the augmented state [x; cost].
struct SegmentResult {
  VectorXd x;
  double cost = 0.0;
};

inline SegmentResult integrate_hold(const wncs::ContinuousPlant& p, VectorXd x,
                                    const VectorXd& u, double t_len, int steps) {
  const auto cost_rate = [&](const VectorXd& xs) {
    return xs.dot(p.q_xx * xs) + 2.0 * xs.dot(p.q_xu * u) + u.dot(p.q_uu * u);
  };
  const auto deriv = [&](const VectorXd& xs) -> VectorXd { return p.a * xs + p.b * u; };
  const double dt = t_len / steps;
  double cost = 0.0;
  for (int s = 0; s < steps; ++s) {
    const VectorXd k1 = deriv(x);
    const VectorXd k2 = deriv(x + 0.5 * dt * k1);
    const VectorXd k3 = deriv(x + 0.5 * dt * k2);
    const VectorXd k4 = deriv(x + dt * k3);
    const double c1 = cost_rate(x);
    const double c2 = cost_rate(x + 0.5 * dt * k1);
    const double c3 = cost_rate(x + 0.5 * dt * k2);
    const double c4 = cost_rate(x + dt * k3);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    cost += (dt / 6.0) * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
  }
  return {x, cost};
}

// ---------------------------------------------------------------------------
// Scalar closed forms.

// Fixed point of p = phi^2 p + rv - rho phi^2 p^2 / (p + rw), iterated to
// machine precision.
inline double scalar_upper_mare(double phi, double rv, double rw, double rho) {
  double p = rv;
  for (int it = 0; it < 200000; ++it) {
    const double next = phi * phi * p + rv - rho * phi * phi * p * p / (p + rw);
    if (std::abs(next - p) < 1e-14) return next;
    p = next;
  }
  return p;
}

inline double scalar_lower_mare(double phi, double rv, double rho) {
  return rv / (1.0 - (1.0 - rho) * phi * phi);
}

inline bool approx_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace oracle
