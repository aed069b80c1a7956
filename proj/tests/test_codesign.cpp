#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "wncs/codesign.hpp"

using namespace wncs;

namespace {

DesignConfig basic_config(std::vector<double> h_grid) {
  DesignConfig c;
  c.h_grid_ms = std::move(h_grid);
  c.mc_replicates = 50;
  c.seed = 5;
  return c;
}

DesignPoint stub_point(double h, double tau, double j_max, bool converged,
                       double j_mc = std::numeric_limits<double>::quiet_NaN()) {
  DesignPoint p;
  p.h_ms = h;
  p.tau_ms = tau;
  p.j_max = j_max;
  p.j_min = j_max * 0.5;
  p.j_mc_mean = j_mc;
  p.converged = converged;
  return p;
}

}  // namespace

TEST_CASE("sampling interval sets the deadline and the achievable reliability") {
  const ContinuousPlant plant = oracle::unstable_benchmark_plant();
  const NetworkTopology topo = oracle::single_link(0.2);
  const std::vector<DesignPoint> points = sweep(plant, topo, basic_config({10.0, 20.0, 30.0}));

  REQUIRE(points.size() == 3);
  CHECK(points[0].d_slots == 1);
  CHECK(points[1].d_slots == 2);
  CHECK(points[2].d_slots == 3);
  CHECK(points[0].rho_star == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(points[1].rho_star == doctest::Approx(0.96).epsilon(1e-12));
  CHECK(points[2].rho_star == doctest::Approx(0.992).epsilon(1e-12));
  for (const DesignPoint& p : points) {
    CHECK(p.tau_ms == p.h_ms);
    CHECK(std::isinf(p.c_req));
    CHECK(p.converged);
    CHECK(p.j_min <= p.j_max);
    CHECK(std::isnan(p.j_mc_mean));
  }
  for (std::size_t i = 1; i < points.size(); ++i)
    CHECK(points[i].rho_star >= points[i - 1].rho_star);
}

TEST_CASE("rectangular grid keeps only feasible delay pairs in order") {
  const ContinuousPlant plant = oracle::unstable_benchmark_plant();
  const NetworkTopology topo = oracle::single_link(0.2);
  DesignConfig config = basic_config({20.0, 40.0});
  config.tau_grid_ms = std::vector<double>{10.0, 20.0, 40.0};

  const std::vector<DesignPoint> points = sweep(plant, topo, config);
  REQUIRE(points.size() == 5);
  const double expect_h[] = {20.0, 20.0, 40.0, 40.0, 40.0};
  const double expect_tau[] = {10.0, 20.0, 10.0, 20.0, 40.0};
  const int expect_d[] = {1, 2, 1, 2, 4};
  for (int i = 0; i < 5; ++i) {
    CHECK(points[i].h_ms == expect_h[i]);
    CHECK(points[i].tau_ms == expect_tau[i]);
    CHECK(points[i].d_slots == expect_d[i]);
  }
}

TEST_CASE("energy budget scales with the sampling interval") {
  const ContinuousPlant plant = oracle::unstable_benchmark_plant();
  const NetworkTopology topo = oracle::single_link(0.2);
  DesignConfig config = basic_config({20.0, 40.0});
  config.epsilon_per_ms = 0.055;

  const std::vector<DesignPoint> points = sweep(plant, topo, config);
  REQUIRE(points.size() == 2);
  CHECK(points[0].c_req == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(points[1].c_req == doctest::Approx(2.2).epsilon(1e-12));
  // At h = 20 ms the budget 1.1 binds: the mixture spends exactly 1.1
  // expected sends at 0.8 reliability per unit cost.
  CHECK(points[0].rho_star == doctest::Approx(0.88).epsilon(1e-12));
  CHECK(points[0].policy.energy == doctest::Approx(1.1).epsilon(1e-9));
  CHECK(points[0].policy.theta1 + points[0].policy.theta2 ==
        doctest::Approx(1.0).epsilon(1e-12));
  // At h = 40 ms four slots are allowed but only 2.2 expected sends fit.
  const auto outcomes = oracle::all_policy_outcomes(topo, 0, 4);
  CHECK(points[1].rho_star ==
        doctest::Approx(oracle::envelope_reliability(outcomes, 2.2)).epsilon(1e-9));
}

TEST_CASE("budgeted reliability through the sweep matches exhaustive search") {
  const ContinuousPlant plant = oracle::unstable_benchmark_plant();
  const NetworkTopology topo = oracle::line_topology({0.3, 0.3});
  DesignConfig config = basic_config({30.0});
  config.epsilon_per_ms = 0.05;

  const std::vector<DesignPoint> points = sweep(plant, topo, config);
  REQUIRE(points.size() == 1);
  const auto outcomes = oracle::all_policy_outcomes(topo, 0, 3);
  CHECK(points[0].rho_star ==
        doctest::Approx(oracle::envelope_reliability(outcomes, 1.5)).epsilon(1e-9));
}

TEST_CASE("optimum selection prefers cheaper points and breaks ties toward faster sampling") {
  std::vector<DesignPoint> pts;
  pts.push_back(stub_point(20.0, 20.0, 1.0, true));
  pts.push_back(stub_point(10.0, 10.0, 1.0, true));
  pts.push_back(stub_point(30.0, 30.0, 0.5, true));
  pts.push_back(stub_point(5.0, 5.0, 0.3, false));

  SUBCASE("smallest finite objective wins") {
    const DesignPoint& best = select_optimum(pts, OptimumCriterion::kJMax);
    CHECK(best.h_ms == 30.0);
  }
  SUBCASE("ties fall to the smaller h then the smaller tau") {
    pts.erase(pts.begin() + 2);
    const DesignPoint& best = select_optimum(pts, OptimumCriterion::kJMax);
    CHECK(best.h_ms == 10.0);

    pts.push_back(stub_point(10.0, 5.0, 1.0, true));
    const DesignPoint& best2 = select_optimum(pts, OptimumCriterion::kJMax);
    CHECK(best2.h_ms == 10.0);
    CHECK(best2.tau_ms == 5.0);
  }
  SUBCASE("divergent or infinite points never qualify") {
    std::vector<DesignPoint> bad;
    bad.push_back(stub_point(10.0, 10.0, 1.0, false));
    bad.push_back(stub_point(20.0, 20.0, std::numeric_limits<double>::infinity(), true));
    CHECK_THROWS_AS(select_optimum(bad, OptimumCriterion::kJMax), std::runtime_error);
  }
  SUBCASE("monte carlo criterion needs simulated values") {
    CHECK_THROWS_AS(select_optimum(pts, OptimumCriterion::kJMc), std::runtime_error);
    pts[0].j_mc_mean = 0.9;
    const DesignPoint& best = select_optimum(pts, OptimumCriterion::kJMc);
    CHECK(best.h_ms == 20.0);
  }
}

TEST_CASE("grid entries below the slot length are rejected") {
  const ContinuousPlant plant = oracle::unstable_benchmark_plant();
  const NetworkTopology topo = oracle::single_link(0.2);

  CHECK_THROWS_AS(sweep(plant, topo, basic_config({5.0})), ValidationError);
  try {
    sweep(plant, topo, basic_config({5.0}));
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("h_grid_ms") != std::string::npos);
  }

  DesignConfig config = basic_config({20.0});
  config.tau_grid_ms = std::vector<double>{5.0};
  CHECK_THROWS_AS(sweep(plant, topo, config), ValidationError);
}

TEST_CASE("monte carlo columns fill in only when requested and replay exactly") {
  const ContinuousPlant plant = oracle::unstable_benchmark_plant();
  const NetworkTopology topo = oracle::single_link(0.2);
  DesignConfig config = basic_config({100.0});
  config.horizon_s = 2.0;

  SweepOptions opts;
  opts.with_simulation = true;
  const std::vector<DesignPoint> a = sweep(plant, topo, config, opts);
  const std::vector<DesignPoint> b = sweep(plant, topo, config, opts);
  REQUIRE(a.size() == 1);
  CHECK(std::isfinite(a[0].j_mc_mean));
  CHECK(a[0].j_mc_stderr > 0.0);
  CHECK(a[0].j_mc_mean == b[0].j_mc_mean);
  CHECK(a[0].j_mc_stderr == b[0].j_mc_stderr);
}

TEST_CASE("sweep table serialization") {
  const ContinuousPlant plant = oracle::unstable_benchmark_plant();
  const NetworkTopology topo = oracle::single_link(0.2);
  const std::vector<DesignPoint> points = sweep(plant, topo, basic_config({10.0, 20.0}));
  const std::string csv = sweep_csv(points);

  const std::string header =
      "h_ms,tau_ms,D,C_req,rho_star,theta1,C1,C2,J_min,J_max,J_mc_mean,J_mc_stderr,status\n";
  REQUIRE(csv.rfind(header, 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find(",inf,") != std::string::npos);
  CHECK(csv.find(",nan,") != std::string::npos);
  CHECK(csv.find("converged") != std::string::npos);
  CHECK(sweep_csv(sweep(plant, topo, basic_config({10.0, 20.0}))) == csv);
}

TEST_CASE("pricing energy traces a monotone trade-off") {
  const ContinuousPlant plant = oracle::unstable_benchmark_plant();
  const NetworkTopology topo = oracle::single_link(0.2);
  const DesignConfig config = basic_config({10.0, 20.0, 30.0, 40.0});

  SUBCASE("a generous budget reproduces the unconstrained optimum") {
    const std::vector<FrontierRow> rows = energy_frontier(plant, topo, config, {100.0});
    const std::vector<DesignPoint> points = sweep(plant, topo, config);
    const DesignPoint& best = select_optimum(points, OptimumCriterion::kJMax);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].j_opt == doctest::Approx(best.j_max).epsilon(1e-12));
    CHECK(rows[0].h_opt_ms == best.h_ms);
    CHECK(rows[0].rho_opt == doctest::Approx(best.rho_star).epsilon(1e-12));
  }
  SUBCASE("loosening the price never hurts") {
    const std::vector<double> eps = {0.02, 0.04, 0.08, 0.2, 1.0};
    const std::vector<FrontierRow> rows = energy_frontier(plant, topo, config, eps);
    REQUIRE(rows.size() == eps.size());
    for (std::size_t i = 1; i < rows.size(); ++i)
      CHECK(rows[i].j_opt <= rows[i - 1].j_opt + 1e-12);
  }
  SUBCASE("prices must be positive") {
    CHECK_THROWS_AS(energy_frontier(plant, topo, config, {0.0}), ValidationError);
    CHECK_THROWS_AS(energy_frontier(plant, topo, config, {-1.0}), ValidationError);
  }

  const std::string csv = frontier_csv(energy_frontier(plant, topo, config, {0.5}));
  CHECK(csv.rfind("epsilon_per_ms,J_opt,h_opt_ms,rho_opt\n", 0) == 0);
}
