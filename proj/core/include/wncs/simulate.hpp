#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wncs/forwarding.hpp"
#include "wncs/lqg.hpp"

namespace wncs {

enum class LossMode {
  kSlotLevel,  // walk each packet through the network slot by slot
  kBernoulli,  // i.i.d. end-to-end arrival with the policy's delivery probability
};

struct SimulationOptions {
  std::int64_t replicates = 10000;
  std::uint64_t seed = 0;
  LossMode mode = LossMode::kBernoulli;
  double horizon_s = 500.0;  // used only when the plant carries no finite horizon
  int threads = 1;
  bool keep_replicates = false;
};

struct SimulationReport {
  double j_mean = 0.0;    // realized quadratic cost per sample, averaged over replicates
  double j_stderr = 0.0;  // standard error of j_mean across replicates
  double rho_empirical = 0.0;
  double cost_empirical = 0.0;  // mean transmissions per packet; NaN in Bernoulli mode
  std::int64_t replicates = 0;
  std::int64_t n_steps = 0;
  LossMode mode = LossMode::kBernoulli;
  std::uint64_t seed = 0;
  std::vector<double> replicate_costs;  // filled when keep_replicates is set
};

// Simulates the noisy closed loop: plant recursion driven by Gaussian process
// and measurement noise, Kalman filter gated by the realized arrivals, and
// u_k = L_k xi_hat (stationary gain unless finite-horizon gains are given).
// Slot-level mode draws a fresh sub-policy per packet and walks it through
// the network; Bernoulli mode replaces the network with i.i.d. arrivals.
// The two modes share the plant-noise streams, so paired comparisons differ
// only in the loss process.
SimulationReport simulate_closed_loop(const DiscretePlant& dp, const ControllerGains& gains,
                                      const NetworkTopology& topology,
                                      const RandomizedPolicy& policy,
                                      const SimulationOptions& opts);

// Bernoulli-only variant with an explicit arrival probability.
SimulationReport simulate_closed_loop(const DiscretePlant& dp, const ControllerGains& gains,
                                      double rho, const SimulationOptions& opts);

// Couples two arrival processes through one shared uniform sequence
// (arrival iff omega_k <= rho), so the higher-rate sequence dominates the
// lower one samplewise. For each replicate the filter covariance path under
// the denser arrivals must stay below the sparser one in the semidefinite
// order, and the conditional expected cost must be no larger; violations of
// either are counted (zero expected). Realized closed-loop costs on shared
// noise are reported for reference.
struct CouplingReport {
  std::int64_t replicates = 0;
  std::int64_t n_steps = 0;
  std::int64_t cost_violations = 0;
  std::int64_t loewner_violations = 0;
  double min_loewner_eig = 0.0;  // most negative eigenvalue of p_low - p_high seen
  double mean_cost_low = 0.0;    // conditional expected cost per sample, averaged
  double mean_cost_high = 0.0;
  double realized_mean_low = 0.0;
  double realized_mean_high = 0.0;
};

CouplingReport coupling_experiment(const DiscretePlant& dp, const ControllerGains& gains,
                                   double rho_low, double rho_high, std::int64_t replicates,
                                   std::uint64_t seed);

std::string to_json(const SimulationReport& report);

}  // namespace wncs
