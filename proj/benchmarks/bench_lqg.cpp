#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "wncs/discretize.hpp"
#include "wncs/lqg.hpp"
#include "wncs/model.hpp"

namespace {

wncs::ContinuousPlant unstable_plant() {
  wncs::ContinuousPlant p;
  p.a.resize(2, 2);
  p.a << 0.0, 1.0, -1.0, 2.0;
  p.b.resize(2, 1);
  p.b << 0.0, 1.0;
  p.c.resize(1, 2);
  p.c << 1.0, 0.0;
  p.rv_c = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  p.rw = 1e-4 * Eigen::MatrixXd::Identity(1, 1);
  p.sigma0 = Eigen::MatrixXd::Identity(2, 2);
  p.q_xx = Eigen::Vector2d(2.0, 1.0).asDiagonal();
  p.q_xu = Eigen::MatrixXd::Zero(2, 1);
  p.q_uu = Eigen::MatrixXd::Identity(1, 1);
  p.q0 = Eigen::MatrixXd::Zero(2, 2);
  wncs::validate(p);
  return p;
}

void bench_discretize(benchmark::State& state) {
  const wncs::ContinuousPlant plant = unstable_plant();
  for (auto _ : state) {
    benchmark::DoNotOptimize(wncs::discretize(plant, 0.1, 0.1, std::nullopt));
  }
}

void bench_riccati(benchmark::State& state) {
  const wncs::ContinuousPlant plant = unstable_plant();
  const wncs::DiscretePlant dp = wncs::discretize(plant, 0.1, 0.1, std::nullopt);
  for (auto _ : state) {
    benchmark::DoNotOptimize(wncs::riccati_control(dp));
  }
}

void bench_covariance_bounds(benchmark::State& state) {
  const wncs::ContinuousPlant plant = unstable_plant();
  const wncs::DiscretePlant dp = wncs::discretize(plant, 0.1, 0.1, std::nullopt);
  const double rho = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(wncs::covariance_bounds(dp, rho));
  }
}

}  // namespace

BENCHMARK(bench_discretize);
BENCHMARK(bench_riccati);
BENCHMARK(bench_covariance_bounds)->Arg(70)->Arg(90);

BENCHMARK_MAIN();
