#include <cmath>
#include <thread>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wncs/codesign.hpp"
#include "wncs/discretize.hpp"
#include "wncs/forwarding.hpp"
#include "wncs/lqg.hpp"
#include "wncs/model.hpp"
#include "wncs/simulate.hpp"
#include "wncs/util.hpp"
#include "wncs/version.hpp"

namespace {

int default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Empty path means stdout. Progress notes go to stderr so piped output stays
// machine-readable.
void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  wncs::write_file(out_path, content);
  std::cerr << "wrote " << out_path << "\n";
}

int deadline_from(double tau_ms, double slot_ms) {
  return static_cast<int>(std::floor(tau_ms / slot_ms + 1e-9));
}

struct ScheduleArgs {
  std::string topology_path;
  int deadline_slots = 1;
  std::optional<double> c_req;
  bool unconstrained = false;
  std::optional<int> source_1based;
  std::string out_path;
};

// One-line digest of the solved policy for pipelines; the full action tables
// live in the policy.json written via --out.
std::string policy_summary(const wncs::RandomizedPolicy& policy) {
  std::string s = "{\"rho_star\":" + wncs::fmt_double(policy.reliability);
  s += ",\"energy\":" + wncs::fmt_double(policy.energy);
  s += ",\"C1\":" + wncs::fmt_double(policy.c1);
  s += ",\"C2\":" + wncs::fmt_double(policy.c2);
  s += ",\"theta1\":" + wncs::fmt_double(policy.theta1);
  s += ",\"theta2\":" + wncs::fmt_double(policy.theta2);
  s += ",\"delta_star\":" + wncs::fmt_double(policy.delta_star);
  s += "}\n";
  return s;
}

void run_schedule(const ScheduleArgs& a) {
  wncs::NetworkTopology topology = wncs::load_topology(a.topology_path);
  int source = topology.source;
  if (a.source_1based.has_value()) {
    source = *a.source_1based - 1;
    if (source < 0 || source >= topology.node_count)
      throw wncs::ValidationError("source", "node id out of range");
  }
  const wncs::RandomizedPolicy policy =
      wncs::solve_constrained(topology, source, a.deadline_slots, a.c_req);
  if (a.out_path.empty()) {
    std::cout << wncs::to_json(policy);
  } else {
    wncs::write_file(a.out_path, wncs::to_json(policy));
    std::cerr << "wrote " << a.out_path << "\n";
    std::cout << policy_summary(policy);
  }
}

struct SweepArgs {
  std::string plant_path, topology_path, design_path;
  bool simulate = false;
  wncs::LossMode mode = wncs::LossMode::kBernoulli;
  int threads = default_threads();
  std::optional<std::uint64_t> seed;
  std::string out_path;
};

void run_sweep(const SweepArgs& a) {
  const wncs::ContinuousPlant plant = wncs::load_plant(a.plant_path);
  const wncs::NetworkTopology topology = wncs::load_topology(a.topology_path);
  wncs::DesignConfig design = wncs::load_design(a.design_path);
  if (a.seed.has_value()) design.seed = *a.seed;

  wncs::SweepOptions opts;
  opts.with_simulation = a.simulate;
  opts.mode = a.mode;
  opts.threads = a.threads;
  const std::vector<wncs::DesignPoint> points = wncs::sweep(plant, topology, design, opts);
  emit(a.out_path, wncs::sweep_csv(points));

  const wncs::DesignPoint& best = wncs::select_optimum(
      points, a.simulate ? wncs::OptimumCriterion::kJMc : wncs::OptimumCriterion::kJMax);
  std::cerr << "optimum: h=" << wncs::fmt_double(best.h_ms)
            << " ms, tau=" << wncs::fmt_double(best.tau_ms)
            << " ms, rho=" << wncs::fmt_double(best.rho_star) << "\n";
}

struct SimulateArgs {
  std::string plant_path, topology_path;
  double h_ms = 0.0;
  std::optional<double> tau_ms;
  std::optional<double> energy_budget;
  double horizon_s = 500.0;
  std::int64_t replicates = 10000;
  std::uint64_t seed = 0;
  wncs::LossMode mode = wncs::LossMode::kSlotLevel;
  int threads = default_threads();
  std::string out_path;
  std::string per_replicate_path;
};

void run_simulate(const SimulateArgs& a) {
  const wncs::ContinuousPlant plant = wncs::load_plant(a.plant_path);
  const wncs::NetworkTopology topology = wncs::load_topology(a.topology_path);
  const double tau_ms = a.tau_ms.value_or(a.h_ms);

  const int deadline = deadline_from(tau_ms, topology.slot_ms);
  if (deadline < 1)
    throw wncs::ValidationError("tau_ms", "deadline shorter than one network slot");
  const wncs::RandomizedPolicy policy =
      wncs::solve_constrained(topology, topology.source, deadline, a.energy_budget);

  const wncs::DiscretePlant dp =
      wncs::discretize(plant, a.h_ms / 1000.0, tau_ms / 1000.0, a.horizon_s);
  const wncs::ControllerGains gains = wncs::riccati_control_finite(dp, dp.n_steps);

  wncs::SimulationOptions opts;
  opts.replicates = a.replicates;
  opts.seed = a.seed;
  opts.mode = a.mode;
  opts.horizon_s = a.horizon_s;
  opts.threads = a.threads;
  opts.keep_replicates = !a.per_replicate_path.empty();
  const wncs::SimulationReport report =
      wncs::simulate_closed_loop(dp, gains, topology, policy, opts);

  if (!a.per_replicate_path.empty()) {
    std::string csv = "replicate,j\n";
    for (std::size_t i = 0; i < report.replicate_costs.size(); ++i) {
      csv += std::to_string(i);
      csv += ',';
      csv += wncs::fmt_double(report.replicate_costs[i]);
      csv += '\n';
    }
    wncs::write_file(a.per_replicate_path, csv);
    std::cerr << "wrote " << a.per_replicate_path << "\n";
  }
  emit(a.out_path, wncs::to_json(report));
}

struct FrontierArgs {
  std::string plant_path, topology_path, design_path;
  std::vector<double> epsilon;
  int threads = default_threads();
  std::string out_path;
};

void run_frontier(const FrontierArgs& a) {
  const wncs::ContinuousPlant plant = wncs::load_plant(a.plant_path);
  const wncs::NetworkTopology topology = wncs::load_topology(a.topology_path);
  const wncs::DesignConfig design = wncs::load_design(a.design_path);

  wncs::SweepOptions opts;
  opts.threads = a.threads;
  const std::vector<wncs::FrontierRow> rows =
      wncs::energy_frontier(plant, topology, design, a.epsilon, opts);
  emit(a.out_path, wncs::frontier_csv(rows));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint forwarding-policy and sampled-data controller design"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("wncs ") + wncs::kVersion + " (schema " +
                                        std::to_string(wncs::kSchemaVersion) + ")");

  const std::map<std::string, wncs::LossMode> mode_names{
      {"slot", wncs::LossMode::kSlotLevel},
      {"slot-level", wncs::LossMode::kSlotLevel},
      {"bernoulli", wncs::LossMode::kBernoulli},
  };

  ScheduleArgs schedule_args;
  CLI::App* schedule = app.add_subcommand(
      "schedule", "solve the deadline-constrained forwarding policy for one topology");
  schedule->add_option("--topology", schedule_args.topology_path, "topology JSON file")
      ->required();
  schedule->add_option("--deadline-slots", schedule_args.deadline_slots, "deadline in slots")
      ->required()
      ->check(CLI::PositiveNumber);
  CLI::Option* c_req_opt = schedule->add_option(
      "--c-req,--energy-budget", schedule_args.c_req,
      "max expected transmissions per packet");
  schedule->add_flag("--unconstrained", schedule_args.unconstrained,
                     "maximize reliability with no energy budget")
      ->excludes(c_req_opt);
  schedule->add_option("--source", schedule_args.source_1based,
                       "override source node (1-based)");
  schedule->add_option("-o,--out", schedule_args.out_path, "output file (default stdout)");

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "evaluate the (h, tau) design grid and report cost bounds");
  sweep->add_option("--plant", sweep_args.plant_path, "plant JSON file")->required();
  sweep->add_option("--topology", sweep_args.topology_path, "topology JSON file")->required();
  sweep->add_option("--design", sweep_args.design_path, "design-grid JSON file")->required();
  sweep->add_flag("--simulate", sweep_args.simulate, "attach Monte Carlo estimates");
  sweep->add_option("--mode", sweep_args.mode, "loss process for --simulate")
      ->transform(CLI::CheckedTransformer(mode_names, CLI::ignore_case));
  sweep->add_option("--threads", sweep_args.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--seed", sweep_args.seed, "override the design-file seed");
  sweep->add_option("-o,--out", sweep_args.out_path, "output CSV file (default stdout)");

  SimulateArgs sim_args;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Monte Carlo closed-loop run at one (h, tau) design point");
  simulate->add_option("--plant", sim_args.plant_path, "plant JSON file")->required();
  simulate->add_option("--topology", sim_args.topology_path, "topology JSON file")->required();
  simulate->add_option("--h-ms", sim_args.h_ms, "sampling interval in ms")
      ->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--tau-ms", sim_args.tau_ms, "delivery deadline in ms (default: h)");
  simulate->add_option("--energy-budget", sim_args.energy_budget,
                       "max expected transmissions per packet");
  simulate->add_option("--horizon-s", sim_args.horizon_s, "episode length in seconds")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--replicates", sim_args.replicates, "Monte Carlo replicates")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_args.seed, "random seed");
  simulate->add_option("--mode", sim_args.mode, "loss process")
      ->transform(CLI::CheckedTransformer(mode_names, CLI::ignore_case));
  simulate->add_option("--threads", sim_args.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--per-replicate", sim_args.per_replicate_path,
                       "also write one CSV row per replicate to this file");
  simulate->add_option("-o,--out", sim_args.out_path, "output JSON file (default stdout)");

  FrontierArgs frontier_args;
  CLI::App* frontier = app.add_subcommand(
      "frontier", "trace the optimal cost across energy prices");
  frontier->add_option("--plant", frontier_args.plant_path, "plant JSON file")->required();
  frontier->add_option("--topology", frontier_args.topology_path, "topology JSON file")
      ->required();
  frontier->add_option("--design", frontier_args.design_path, "design-grid JSON file")
      ->required();
  frontier->add_option("--epsilon-grid,--eps", frontier_args.epsilon,
                       "energy prices per ms of sampling (comma separated)")
      ->required()
      ->delimiter(',')
      ->expected(-1);
  frontier->add_option("--threads", frontier_args.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  frontier->add_option("-o,--out", frontier_args.out_path, "output CSV file (default stdout)");

  try {
    app.parse(argc, argv);
    if (schedule->parsed()) run_schedule(schedule_args);
    if (sweep->parsed()) run_sweep(sweep_args);
    if (simulate->parsed()) run_simulate(sim_args);
    if (frontier->parsed()) run_frontier(frontier_args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const wncs::FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
