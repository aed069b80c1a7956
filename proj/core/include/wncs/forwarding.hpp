#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wncs/model.hpp"

namespace wncs {

// Backward-recursion tables for the deadline-constrained forwarding problem.
// For every node i and slot t: u is the weighted objective rho - delta * c,
// rho the on-time delivery probability, and c the expected number of
// transmissions, all under the optimal continuation. Arrays hold deadline+1
// slots per node (t = 0..deadline); action holds deadline entries per node,
// where action == node id means hold.
struct UtilityTable {
  int node_count = 0;
  int deadline = 0;
  double delta = 0.0;
  std::vector<double> u, rho, c;
  std::vector<int> action;

  double u_at(int i, int t) const { return u[static_cast<std::size_t>(i) * (deadline + 1) + t]; }
  double rho_at(int i, int t) const {
    return rho[static_cast<std::size_t>(i) * (deadline + 1) + t];
  }
  double c_at(int i, int t) const { return c[static_cast<std::size_t>(i) * (deadline + 1) + t]; }
  int action_at(int i, int t) const { return action[static_cast<std::size_t>(i) * deadline + t]; }
};

// Time-indexed forwarding rule. action(i, t) is the next hop attempted by
// node i in slot t; a value equal to i means hold.
struct DeterministicPolicy {
  int node_count = 0;
  int deadline = 0;
  int source = 0;
  std::vector<int> action;
  double reliability = 0.0;  // delivery probability from source within the deadline
  double energy = 0.0;       // expected transmissions per packet from source

  int action_at(int i, int t) const { return action[static_cast<std::size_t>(i) * deadline + t]; }
  bool holds(int i, int t) const { return action_at(i, t) == i; }
};

// Per-packet mixture of two deterministic policies: pi1 with probability
// theta1, pi2 with probability theta2. Meets an expected-energy budget
// exactly while maximizing delivery probability.
struct RandomizedPolicy {
  DeterministicPolicy pi1, pi2;
  double theta1 = 1.0;
  double theta2 = 0.0;
  double reliability = 0.0;
  double energy = 0.0;
  double c1 = 0.0;          // energy of pi1
  double c2 = 0.0;          // energy of pi2
  double delta_star = 0.0;  // price per transmission at the mixture breakpoint
};

struct PolicyStats {
  double reliability = 0.0;
  double energy = 0.0;
};

struct ParetoPoint {
  double reliability = 0.0;
  double energy = 0.0;
};

struct DistributedRun {
  UtilityTable table;
  std::int64_t messages = 0;
};

// Solves max_policy rho - delta * c over all time-indexed forwarding rules by
// backward recursion. O(deadline * nodes * links) time. Ties prefer holding;
// among forwarding targets the lowest node id wins.
UtilityTable solve_dp(const NetworkTopology& topology, int deadline_slots, double delta);

DeterministicPolicy solve_weighted_sum(const NetworkTopology& topology, int source,
                                       int deadline_slots, double delta);

// Maximizes delivery probability subject to expected transmissions per packet
// <= energy_budget (unconstrained if nullopt). Runs a bisection on delta over
// [0, 1] to find the budget-straddling pair of deterministic policies, then
// mixes them so the budget binds exactly.
RandomizedPolicy solve_constrained(const NetworkTopology& topology, int source,
                                   int deadline_slots, std::optional<double> energy_budget);

// Exact delivery probability and expected transmissions of a fixed rule, by
// propagating the packet-location distribution slot by slot.
PolicyStats evaluate_policy(const NetworkTopology& topology, const DeterministicPolicy& policy,
                            int source);

// Exhaustive enumeration of every deterministic rule; returns the Pareto
// frontier (energy ascending, reliability strictly increasing). Refuses
// instances beyond 4 nodes or 4 slots.
std::vector<ParetoPoint> brute_force_policies(const NetworkTopology& topology, int source,
                                              int deadline_slots);

// Message-passing emulation of the same recursion: nodes see only their own
// outgoing links and values received from neighbors, one message per
// (node, slot, in-neighbor). Results are bit-identical to solve_dp.
DistributedRun distributed_dp(const NetworkTopology& topology, int deadline_slots, double delta);

std::string to_json(const RandomizedPolicy& policy);

}  // namespace wncs
