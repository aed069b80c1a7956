#pragma once

#include <string>
#include <vector>

#include "wncs/forwarding.hpp"
#include "wncs/lqg.hpp"
#include "wncs/model.hpp"
#include "wncs/simulate.hpp"

namespace wncs {

// One evaluated (h, tau) candidate: the max-reliability forwarding policy for
// the deadline and energy budget implied by (h, tau), the induced stationary
// cost bounds, and optionally a Monte Carlo cost estimate.
struct DesignPoint {
  double h_ms = 0.0;
  double tau_ms = 0.0;
  int d_slots = 0;
  double c_req = 0.0;  // +inf when no energy budget applies
  double rho_star = 0.0;
  RandomizedPolicy policy;
  double j_min = 0.0;
  double j_max = 0.0;
  double j_mc_mean = 0.0;    // NaN unless simulated
  double j_mc_stderr = 0.0;  // NaN unless simulated
  bool converged = false;
};

struct SweepOptions {
  bool with_simulation = false;
  LossMode mode = LossMode::kBernoulli;
  int threads = 1;
};

// Evaluates every (h, tau) pair in the design grid with tau <= h. The
// deadline is D = floor(tau / t_s) slots and the per-packet energy budget is
// epsilon_per_ms * h (transmissions amortized over the sampling interval).
// Grid order is preserved: h outer, tau inner.
std::vector<DesignPoint> sweep(const ContinuousPlant& plant, const NetworkTopology& topology,
                               const DesignConfig& config, const SweepOptions& opts = {});

enum class OptimumCriterion {
  kJMax,  // minimize the guaranteed upper bound
  kJMc,   // minimize the Monte Carlo estimate
};

// Smallest finite objective among converged points; ties broken toward the
// smaller h, then the smaller tau. Throws if no point qualifies.
const DesignPoint& select_optimum(const std::vector<DesignPoint>& points,
                                  OptimumCriterion criterion);

struct FrontierRow {
  double epsilon_per_ms = 0.0;
  double j_opt = 0.0;
  double h_opt_ms = 0.0;
  double rho_opt = 0.0;
};

// Re-runs the sweep for each energy price and records the cost-bound optimum,
// tracing the achievable cost/energy trade-off.
std::vector<FrontierRow> energy_frontier(const ContinuousPlant& plant,
                                         const NetworkTopology& topology,
                                         const DesignConfig& config,
                                         const std::vector<double>& epsilon_grid,
                                         const SweepOptions& opts = {});

std::string sweep_csv(const std::vector<DesignPoint>& points);
std::string frontier_csv(const std::vector<FrontierRow>& rows);

}  // namespace wncs
