#include "wncs/forwarding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace wncs {
namespace {

// a <= b up to the relative tolerance used for energy comparisons at mixture
// breakpoints.
bool energy_leq(double a, double b) {
  return a <= b + 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

struct NeighborValue {
  int id = 0;
  double p_loss = 0.0;
  double u = 0.0;
  double rho = 0.0;
  double c = 0.0;
};

struct NodeUpdate {
  double u, rho, c;
  int action;
};

// One Bellman step for node i given its own continuation values and those of
// its out-neighbors (sorted by id). Shared verbatim by the centralized and
// message-passing solvers so both produce bit-identical tables.
NodeUpdate bellman_update(int i, double delta, double u_self, double rho_self, double c_self,
                          const std::vector<NeighborValue>& neighbors) {
  int best = -1;
  double best_u = -std::numeric_limits<double>::infinity();
  double best_p = 0.0;
  for (const auto& nb : neighbors) {
    const double fwd = (1.0 - nb.p_loss) * nb.u + nb.p_loss * u_self - delta;
    if (fwd > best_u) {
      best_u = fwd;
      best = nb.id;
      best_p = nb.p_loss;
    }
  }
  if (best < 0 || u_self >= best_u) return {u_self, rho_self, c_self, i};
  const NeighborValue* chosen = nullptr;
  for (const auto& nb : neighbors)
    if (nb.id == best) chosen = &nb;
  return {best_u, (1.0 - best_p) * chosen->rho + best_p * rho_self,
          (1.0 - best_p) * chosen->c + best_p * c_self + 1.0, best};
}

void check_instance(const NetworkTopology& topology, int deadline_slots) {
  if (deadline_slots < 0) throw std::invalid_argument("deadline must be >= 0");
  if (topology.node_count < 1) throw std::invalid_argument("empty topology");
}

}  // namespace

UtilityTable solve_dp(const NetworkTopology& topology, int deadline_slots, double delta) {
  check_instance(topology, deadline_slots);
  const int z = topology.node_count;
  const int dest = topology.destination();
  const int d = deadline_slots;
  const auto out = topology.out_links();

  UtilityTable tab;
  tab.node_count = z;
  tab.deadline = d;
  tab.delta = delta;
  tab.u.assign(static_cast<std::size_t>(z) * (d + 1), 0.0);
  tab.rho.assign(static_cast<std::size_t>(z) * (d + 1), 0.0);
  tab.c.assign(static_cast<std::size_t>(z) * (d + 1), 0.0);
  tab.action.assign(static_cast<std::size_t>(z) * d, 0);

  auto u = [&](int i, int t) -> double& { return tab.u[static_cast<std::size_t>(i) * (d + 1) + t]; };
  auto rho = [&](int i, int t) -> double& {
    return tab.rho[static_cast<std::size_t>(i) * (d + 1) + t];
  };
  auto c = [&](int i, int t) -> double& { return tab.c[static_cast<std::size_t>(i) * (d + 1) + t]; };
  auto act = [&](int i, int t) -> int& { return tab.action[static_cast<std::size_t>(i) * d + t]; };

  u(dest, d) = 1.0;
  rho(dest, d) = 1.0;

  std::vector<NeighborValue> nbrs;
  for (int t = d - 1; t >= 0; --t) {
    for (int i = 0; i < z; ++i) {
      if (i == dest) {
        u(i, t) = 1.0;
        rho(i, t) = 1.0;
        c(i, t) = 0.0;
        act(i, t) = i;
        continue;
      }
      nbrs.clear();
      for (const auto& [j, p] : out[i])
        nbrs.push_back({j, p, u(j, t + 1), rho(j, t + 1), c(j, t + 1)});
      const NodeUpdate up =
          bellman_update(i, delta, u(i, t + 1), rho(i, t + 1), c(i, t + 1), nbrs);
      u(i, t) = up.u;
      rho(i, t) = up.rho;
      c(i, t) = up.c;
      act(i, t) = up.action;
    }
  }
  return tab;
}

DeterministicPolicy solve_weighted_sum(const NetworkTopology& topology, int source,
                                       int deadline_slots, double delta) {
  if (source < 0 || source >= topology.node_count)
    throw std::invalid_argument("source out of range");
  UtilityTable tab = solve_dp(topology, deadline_slots, delta);
  DeterministicPolicy pol;
  pol.node_count = tab.node_count;
  pol.deadline = tab.deadline;
  pol.source = source;
  pol.action = std::move(tab.action);
  pol.reliability = tab.rho_at(source, 0);
  pol.energy = tab.c_at(source, 0);
  return pol;
}

namespace {

PolicyStats propagate(const NetworkTopology& topology, const std::vector<int>& action,
                      int source, int deadline) {
  const int z = topology.node_count;
  const int dest = topology.destination();
  const auto out = topology.out_links();
  // Loss probability of the link used by (i, t); cached flat for the hot path.
  std::vector<double> mass(z, 0.0), next(z, 0.0);
  mass[source] = 1.0;
  double energy = 0.0;
  for (int t = 0; t < deadline; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int i = 0; i < z; ++i) {
      const double mi = mass[i];
      if (mi == 0.0) continue;
      const int a = action[static_cast<std::size_t>(i) * deadline + t];
      if (a == i || i == dest) {
        next[i] += mi;
        continue;
      }
      double p = -1.0;
      for (const auto& [j, pl] : out[i])
        if (j == a) p = pl;
      if (p < 0.0) throw std::invalid_argument("policy uses a non-existent link");
      energy += mi;
      next[a] += mi * (1.0 - p);
      next[i] += mi * p;
    }
    mass.swap(next);
  }
  return {mass[dest], energy};
}

}  // namespace

PolicyStats evaluate_policy(const NetworkTopology& topology, const DeterministicPolicy& policy,
                            int source) {
  if (policy.node_count != topology.node_count)
    throw std::invalid_argument("policy/topology size mismatch");
  if (source < 0 || source >= topology.node_count)
    throw std::invalid_argument("source out of range");
  return propagate(topology, policy.action, source, policy.deadline);
}

RandomizedPolicy solve_constrained(const NetworkTopology& topology, int source,
                                   int deadline_slots, std::optional<double> energy_budget) {
  if (energy_budget && *energy_budget < 0.0)
    throw std::invalid_argument("energy budget must be >= 0");
  DeterministicPolicy max_rel = solve_weighted_sum(topology, source, deadline_slots, 0.0);

  RandomizedPolicy out;
  if (!energy_budget || energy_leq(max_rel.energy, *energy_budget)) {
    out.pi1 = max_rel;
    out.pi2 = max_rel;
    out.theta1 = 1.0;
    out.theta2 = 0.0;
    out.reliability = max_rel.reliability;
    out.energy = max_rel.energy;
    out.c1 = max_rel.energy;
    out.c2 = max_rel.energy;
    out.delta_star = 0.0;
    return out;
  }

  // The optimal energy is piecewise constant and non-increasing in delta,
  // equal to max_rel.energy > budget at delta = 0 and 0 at delta = 1 (a
  // transmission can never pay for itself once delta >= 1). Bisect to the
  // breakpoint and keep the straddling pair of policies.
  const double budget = *energy_budget;
  double lo = 0.0, hi = 1.0;
  DeterministicPolicy over = max_rel;  // energy > budget
  DeterministicPolicy under = solve_weighted_sum(topology, source, deadline_slots, 1.0);
  while (hi - lo >= 1e-12) {
    const double mid = 0.5 * (lo + hi);
    DeterministicPolicy cand = solve_weighted_sum(topology, source, deadline_slots, mid);
    if (energy_leq(cand.energy, budget)) {
      hi = mid;
      under = std::move(cand);
    } else {
      lo = mid;
      over = std::move(cand);
    }
  }

  const double c1 = under.energy, c2 = over.energy;
  const double r1 = under.reliability, r2 = over.reliability;
  double theta1 = 1.0;
  if (c2 - c1 > 0.0) theta1 = (c2 - budget) / (c2 - c1);
  theta1 = std::clamp(theta1, 0.0, 1.0);

  out.pi1 = std::move(under);
  out.pi2 = std::move(over);
  out.theta1 = theta1;
  out.theta2 = 1.0 - theta1;
  out.reliability = c2 - c1 > 0.0 ? r1 + (budget - c1) / (c2 - c1) * (r2 - r1) : r1;
  out.energy = theta1 * c1 + (1.0 - theta1) * c2;
  out.c1 = c1;
  out.c2 = c2;
  out.delta_star = 0.5 * (lo + hi);
  return out;
}

std::vector<ParetoPoint> brute_force_policies(const NetworkTopology& topology, int source,
                                              int deadline_slots) {
  check_instance(topology, deadline_slots);
  if (topology.node_count > 4 || deadline_slots > 4)
    throw std::invalid_argument("brute force is limited to 4 nodes and 4 slots");
  if (source < 0 || source >= topology.node_count)
    throw std::invalid_argument("source out of range");

  const int z = topology.node_count;
  const int dest = topology.destination();
  const int d = deadline_slots;
  const auto out = topology.out_links();

  // Per-node choice sets: hold first, then out-neighbors ascending.
  std::vector<std::vector<int>> choices(z);
  for (int i = 0; i < z; ++i) {
    choices[i].push_back(i);
    if (i == dest) continue;
    for (const auto& [j, p] : out[i]) choices[i].push_back(j);
  }

  struct Digit {
    int node;
    int slot;
    int count;
  };
  std::vector<Digit> digits;
  for (int i = 0; i < z; ++i) {
    if (i == dest) continue;
    for (int t = 0; t < d; ++t)
      digits.push_back({i, t, static_cast<int>(choices[i].size())});
  }

  std::vector<int> action(static_cast<std::size_t>(z) * d);
  for (int i = 0; i < z; ++i)
    for (int t = 0; t < d; ++t) action[static_cast<std::size_t>(i) * d + t] = i;

  std::vector<int> odo(digits.size(), 0);
  std::vector<ParetoPoint> points;
  while (true) {
    const PolicyStats st = propagate(topology, action, source, d);
    points.push_back({st.reliability, st.energy});

    std::size_t k = 0;
    for (; k < digits.size(); ++k) {
      odo[k] = (odo[k] + 1) % digits[k].count;
      action[static_cast<std::size_t>(digits[k].node) * d + digits[k].slot] =
          choices[digits[k].node][static_cast<std::size_t>(odo[k])];
      if (odo[k] != 0) break;
    }
    if (k == digits.size()) break;
  }

  std::sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    return a.reliability > b.reliability;
  });
  std::vector<ParetoPoint> frontier;
  double best = -1.0;
  for (const auto& p : points) {
    if (p.reliability > best) {
      frontier.push_back(p);
      best = p.reliability;
    }
  }
  return frontier;
}

DistributedRun distributed_dp(const NetworkTopology& topology, int deadline_slots, double delta) {
  check_instance(topology, deadline_slots);
  const int z = topology.node_count;
  const int dest = topology.destination();
  const int d = deadline_slots;
  const auto out = topology.out_links();

  // Recipients of node i's value: every node holding a link toward i.
  std::vector<std::vector<int>> recipients(z);
  for (const auto& l : topology.links) recipients[l.to].push_back(l.from);
  for (auto& r : recipients) std::sort(r.begin(), r.end());

  struct Message {
    double u, rho, c;
  };
  // Node-local views: own continuation values and the latest values received
  // from each out-neighbor (parallel to out[i]).
  std::vector<Message> own(z);
  std::vector<std::vector<Message>> inbox(z);
  for (int i = 0; i < z; ++i) {
    own[i] = {i == dest ? 1.0 : 0.0, i == dest ? 1.0 : 0.0, 0.0};
    inbox[i].resize(out[i].size());
    for (std::size_t k = 0; k < out[i].size(); ++k) {
      const int j = out[i][k].first;
      inbox[i][k] = {j == dest ? 1.0 : 0.0, j == dest ? 1.0 : 0.0, 0.0};
    }
  }

  DistributedRun run;
  UtilityTable& tab = run.table;
  tab.node_count = z;
  tab.deadline = d;
  tab.delta = delta;
  tab.u.assign(static_cast<std::size_t>(z) * (d + 1), 0.0);
  tab.rho.assign(static_cast<std::size_t>(z) * (d + 1), 0.0);
  tab.c.assign(static_cast<std::size_t>(z) * (d + 1), 0.0);
  tab.action.assign(static_cast<std::size_t>(z) * d, 0);
  for (int i = 0; i < z; ++i) {
    tab.u[static_cast<std::size_t>(i) * (d + 1) + d] = own[i].u;
    tab.rho[static_cast<std::size_t>(i) * (d + 1) + d] = own[i].rho;
  }

  std::vector<Message> fresh(z);
  std::vector<NeighborValue> nbrs;
  for (int t = d - 1; t >= 0; --t) {
    // Compute phase: every node updates from its local view only.
    for (int i = 0; i < z; ++i) {
      if (i == dest) {
        fresh[i] = {1.0, 1.0, 0.0};
        tab.action[static_cast<std::size_t>(i) * d + t] = i;
      } else {
        nbrs.clear();
        for (std::size_t k = 0; k < out[i].size(); ++k)
          nbrs.push_back({out[i][k].first, out[i][k].second, inbox[i][k].u, inbox[i][k].rho,
                          inbox[i][k].c});
        const NodeUpdate up = bellman_update(i, delta, own[i].u, own[i].rho, own[i].c, nbrs);
        fresh[i] = {up.u, up.rho, up.c};
        tab.action[static_cast<std::size_t>(i) * d + t] = up.action;
      }
      tab.u[static_cast<std::size_t>(i) * (d + 1) + t] = fresh[i].u;
      tab.rho[static_cast<std::size_t>(i) * (d + 1) + t] = fresh[i].rho;
      tab.c[static_cast<std::size_t>(i) * (d + 1) + t] = fresh[i].c;
    }
    // Exchange phase: one message per (node, slot, in-neighbor).
    for (int i = 0; i < z; ++i) own[i] = fresh[i];
    for (int i = 0; i < z; ++i) {
      for (int r : recipients[i]) {
        for (std::size_t k = 0; k < out[r].size(); ++k)
          if (out[r][k].first == i) inbox[r][k] = fresh[i];
        ++run.messages;
      }
    }
  }
  return run;
}

std::string to_json(const RandomizedPolicy& policy) {
  using nlohmann::ordered_json;
  auto table = [](const DeterministicPolicy& p) {
    ordered_json rows = ordered_json::array();
    for (int i = 0; i < p.node_count; ++i) {
      ordered_json row = ordered_json::array();
      for (int t = 0; t < p.deadline; ++t) {
        if (p.holds(i, t))
          row.push_back("HOLD");
        else
          row.push_back(p.action_at(i, t) + 1);
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };
  ordered_json j;
  j["rho_star"] = policy.reliability;
  j["energy"] = policy.energy;
  j["theta1"] = policy.theta1;
  j["theta2"] = policy.theta2;
  j["c1"] = policy.c1;
  j["c2"] = policy.c2;
  j["delta_star"] = policy.delta_star;
  j["pi1"] = table(policy.pi1);
  j["pi2"] = table(policy.pi2);
  return j.dump(2);
}

}  // namespace wncs
