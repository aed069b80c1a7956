#include "wncs/codesign.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "wncs/discretize.hpp"
#include "wncs/util.hpp"

namespace wncs {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

DesignPoint evaluate_point(const ContinuousPlant& plant, const NetworkTopology& topology,
                           const DesignConfig& config, double h_ms, double tau_ms,
                           const SweepOptions& opts) {
  DesignPoint point;
  point.h_ms = h_ms;
  point.tau_ms = tau_ms;
  point.d_slots = static_cast<int>(std::floor(tau_ms / topology.slot_ms + 1e-9));
  point.j_mc_mean = kNaN;
  point.j_mc_stderr = kNaN;

  std::optional<double> budget;
  if (config.epsilon_per_ms.has_value()) budget = *config.epsilon_per_ms * h_ms;
  point.c_req = budget.value_or(kInf);

  point.policy = solve_constrained(topology, topology.source, point.d_slots, budget);
  point.rho_star = point.policy.reliability;

  const DiscretePlant dp =
      discretize(plant, h_ms / 1000.0, tau_ms / 1000.0, config.horizon_s);

  try {
    const ControllerGains gains = riccati_control(dp);
    const CovarianceBounds bounds = covariance_bounds(dp, point.rho_star);
    const CostBounds costs = cost_bounds(dp, gains, bounds, point.rho_star);
    point.j_min = costs.j_min;
    point.j_max = costs.j_max;
    point.converged = bounds.converged;
  } catch (const std::runtime_error&) {
    point.j_min = kInf;
    point.j_max = kInf;
    point.converged = false;
    return point;
  }

  if (opts.with_simulation && point.converged) {
    std::int64_t n_steps = dp.n_steps;
    if (n_steps == 0)
      n_steps = static_cast<std::int64_t>(std::ceil(500.0 / dp.h_s - 1e-9));
    const ControllerGains finite = riccati_control_finite(dp, n_steps);

    SimulationOptions sim;
    sim.replicates = config.mc_replicates;
    sim.seed = config.seed;
    sim.mode = opts.mode;
    sim.horizon_s = static_cast<double>(n_steps) * dp.h_s;
    sim.threads = opts.threads;
    const SimulationReport report =
        simulate_closed_loop(dp, finite, topology, point.policy, sim);
    point.j_mc_mean = report.j_mean;
    point.j_mc_stderr = report.j_stderr;
  }
  return point;
}

}  // namespace

std::vector<DesignPoint> sweep(const ContinuousPlant& plant, const NetworkTopology& topology,
                               const DesignConfig& config, const SweepOptions& opts) {
  validate(plant);
  NetworkTopology checked = topology;
  validate(checked);
  validate(config);
  for (double h : config.h_grid_ms) {
    if (h < topology.slot_ms - 1e-12)
      throw ValidationError("h_grid_ms", "sampling interval shorter than one network slot");
  }
  if (config.tau_grid_ms.has_value()) {
    for (double tau : *config.tau_grid_ms) {
      if (tau < topology.slot_ms - 1e-12)
        throw ValidationError("tau_grid_ms", "deadline shorter than one network slot");
    }
  }

  std::vector<DesignPoint> points;
  for (double h_ms : config.h_grid_ms) {
    if (config.tau_grid_ms.has_value()) {
      for (double tau_ms : *config.tau_grid_ms) {
        if (tau_ms > h_ms + 1e-12) continue;
        points.push_back(evaluate_point(plant, topology, config, h_ms, tau_ms, opts));
      }
    } else {
      points.push_back(evaluate_point(plant, topology, config, h_ms, h_ms, opts));
    }
  }
  return points;
}

const DesignPoint& select_optimum(const std::vector<DesignPoint>& points,
                                  OptimumCriterion criterion) {
  const DesignPoint* best = nullptr;
  for (const DesignPoint& p : points) {
    if (!p.converged) continue;
    const double value = criterion == OptimumCriterion::kJMax ? p.j_max : p.j_mc_mean;
    if (!std::isfinite(value)) continue;
    if (best == nullptr) {
      best = &p;
      continue;
    }
    const double best_value =
        criterion == OptimumCriterion::kJMax ? best->j_max : best->j_mc_mean;
    if (value < best_value ||
        (value == best_value &&
         (p.h_ms < best->h_ms || (p.h_ms == best->h_ms && p.tau_ms < best->tau_ms)))) {
      best = &p;
    }
  }
  if (best == nullptr) throw std::runtime_error("no convergent design point in the sweep");
  return *best;
}

std::vector<FrontierRow> energy_frontier(const ContinuousPlant& plant,
                                         const NetworkTopology& topology,
                                         const DesignConfig& config,
                                         const std::vector<double>& epsilon_grid,
                                         const SweepOptions& opts) {
  std::vector<FrontierRow> rows;
  rows.reserve(epsilon_grid.size());
  for (double eps : epsilon_grid) {
    if (!(eps > 0.0)) throw ValidationError("epsilon_grid", "energy price must be positive");
    DesignConfig c = config;
    c.epsilon_per_ms = eps;
    const std::vector<DesignPoint> points = sweep(plant, topology, c, opts);
    const DesignPoint& best = select_optimum(
        points, opts.with_simulation ? OptimumCriterion::kJMc : OptimumCriterion::kJMax);
    rows.push_back({eps,
                    opts.with_simulation ? best.j_mc_mean : best.j_max,
                    best.h_ms, best.rho_star});
  }
  return rows;
}

std::string sweep_csv(const std::vector<DesignPoint>& points) {
  std::string out =
      "h_ms,tau_ms,D,C_req,rho_star,theta1,C1,C2,J_min,J_max,J_mc_mean,J_mc_stderr,status\n";
  for (const DesignPoint& p : points) {
    out += fmt_double(p.h_ms);
    out += ',';
    out += fmt_double(p.tau_ms);
    out += ',';
    out += std::to_string(p.d_slots);
    out += ',';
    out += fmt_double(p.c_req);
    out += ',';
    out += fmt_double(p.rho_star);
    out += ',';
    out += fmt_double(p.policy.theta1);
    out += ',';
    out += fmt_double(p.policy.c1);
    out += ',';
    out += fmt_double(p.policy.c2);
    out += ',';
    out += fmt_double(p.j_min);
    out += ',';
    out += fmt_double(p.j_max);
    out += ',';
    out += fmt_double(p.j_mc_mean);
    out += ',';
    out += fmt_double(p.j_mc_stderr);
    out += ',';
    out += p.converged ? "converged" : "diverged";
    out += '\n';
  }
  return out;
}

std::string frontier_csv(const std::vector<FrontierRow>& rows) {
  std::string out = "epsilon_per_ms,J_opt,h_opt_ms,rho_opt\n";
  for (const FrontierRow& r : rows) {
    out += fmt_double(r.epsilon_per_ms);
    out += ',';
    out += fmt_double(r.j_opt);
    out += ',';
    out += fmt_double(r.h_opt_ms);
    out += ',';
    out += fmt_double(r.rho_opt);
    out += '\n';
  }
  return out;
}

}  // namespace wncs
