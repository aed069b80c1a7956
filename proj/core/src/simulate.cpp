#include "wncs/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <json.hpp>

#include "wncs/linalg.hpp"
#include "wncs/rng.hpp"
#include "wncs/util.hpp"

namespace wncs {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Forwarding policy flattened for the per-slot packet walk. Entry (node, slot)
// holds the chosen next hop (== node for holding) and that link's loss
// probability. Two tables, mixed per packet with probability theta1.
struct PolicyTables {
  int node_count = 0;
  int deadline = 0;
  int source = 0;
  int destination = 0;
  double theta1 = 1.0;
  std::vector<int> next1, next2;
  std::vector<double> loss1, loss2;
};

PolicyTables flatten_policy(const NetworkTopology& topology, const RandomizedPolicy& policy) {
  PolicyTables t;
  t.node_count = topology.node_count;
  t.deadline = policy.pi1.deadline;
  t.source = policy.pi1.source;
  t.destination = topology.destination();
  t.theta1 = policy.theta1;

  std::vector<std::vector<double>> loss(topology.node_count,
                                        std::vector<double>(topology.node_count, kNaN));
  for (const Link& link : topology.links) loss[link.from][link.to] = link.p_loss;

  auto fill = [&](const DeterministicPolicy& pi, std::vector<int>& next,
                  std::vector<double>& p) {
    next.assign(static_cast<std::size_t>(t.node_count) * t.deadline, 0);
    p.assign(next.size(), 0.0);
    for (int i = 0; i < t.node_count; ++i) {
      for (int slot = 0; slot < t.deadline; ++slot) {
        const int a = pi.action_at(i, slot);
        next[static_cast<std::size_t>(i) * t.deadline + slot] = a;
        if (a != i) {
          const double pl = loss[i][a];
          if (std::isnan(pl)) throw std::logic_error("policy uses a non-existent link");
          p[static_cast<std::size_t>(i) * t.deadline + slot] = pl;
        }
      }
    }
  };
  fill(policy.pi1, t.next1, t.loss1);
  fill(policy.pi2, t.next2, t.loss2);
  return t;
}

struct ChunkTotals {
  double cost_sum = 0.0;
  double cost_sq_sum = 0.0;
  std::int64_t delivered = 0;
  std::int64_t attempts = 0;
};

// One replicate chunk of the closed-loop simulation, templated on the
// extended state dimension so the common low-order plants run on fixed-size
// matrices. E is Eigen::Dynamic for anything above 4.
template <int E>
class ReplicateWorker {
  using MatE = Eigen::Matrix<double, E, E>;
  using VecE = Eigen::Matrix<double, E, 1>;
  using MatQE = Eigen::Matrix<double, Eigen::Dynamic, E>;

 public:
  ReplicateWorker(const DiscretePlant& dp, const ControllerGains& gains, LossMode mode,
                  const PolicyTables* tables, double rho, std::int64_t n_steps,
                  std::uint64_t seed)
      : mode_(mode), tables_(tables), rho_(rho), n_steps_(n_steps), seed_(seed),
        n_(dp.n), m_(dp.m), q_(static_cast<int>(dp.c_ext.rows())), d_(dp.ext_dim()) {
    phi_ = dp.phi;
    gamma_ = dp.gamma;
    c_ = dp.c_ext;
    rvt_ = dp.rv_tilde();
    rw_ = dp.rw;
    xi_xx_ = dp.xi_xx;
    xi_xu_ = dp.xi_xu;
    xi_uu_ = dp.xi_uu;
    xi0_ = dp.xi0;
    p0_ = dp.p0;
    g_noise_.noalias() = dp.g * covariance_factor(dp.rv);
    x0_factor_ = covariance_factor(dp.p0);
    w_factor_ = covariance_factor(dp.rw);

    if (gains.finite_horizon()) {
      if (static_cast<std::int64_t>(gains.l_seq.size()) != n_steps_)
        throw std::invalid_argument("finite-horizon gain sequence does not match the step count");
      l_flat_.resize(static_cast<Eigen::Index>(n_steps_) * m_, d_);
      for (std::int64_t k = 0; k < n_steps_; ++k)
        l_flat_.middleRows(static_cast<Eigen::Index>(k) * m_, m_) = gains.l_seq[k];
      time_varying_ = true;
    } else {
      l_inf_ = gains.l_inf;
      time_varying_ = false;
    }

    xi_.resize(d_);
    xi_next_.resize(d_);
    xi_hat_.resize(d_);
    p_.resize(d_, d_);
    tmp_.resize(d_, d_);
    u_.resize(m_);
    z_proc_.resize(n_);
    z_meas_.resize(q_);
    z_init_.resize(d_);
    y_.resize(q_);
    innov_.resize(q_);
    cp_.resize(q_, d_);
    s_.resize(q_, q_);
    k_gain_.resize(d_, q_);
    gu_.resize(d_);
    xxu_.resize(m_);
  }

  // Runs replicates [begin, end), writing per-replicate costs when requested.
  ChunkTotals run(std::int64_t begin, std::int64_t end, double* replicate_costs) {
    ChunkTotals totals;
    for (std::int64_t rep = begin; rep < end; ++rep) {
      const double cost = run_one(rep, totals);
      totals.cost_sum += cost;
      totals.cost_sq_sum += cost * cost;
      if (replicate_costs != nullptr) replicate_costs[rep] = cost;
    }
    return totals;
  }

 private:
  double run_one(std::int64_t rep, ChunkTotals& totals) {
    RandomStream proc(seed_, rep, StreamRole::kProcessNoise);
    RandomStream meas(seed_, rep, StreamRole::kMeasurementNoise);
    RandomStream init(seed_, rep, StreamRole::kInitialState);
    RandomStream mix(seed_, rep, StreamRole::kPolicyMix);
    RandomStream link(seed_, rep, StreamRole::kLinkDraws);

    for (int i = 0; i < d_; ++i) z_init_(i) = init.normal();
    xi_.noalias() = x0_factor_ * z_init_;
    xi_hat_.setZero();
    p_ = p0_;

    double total = 0.0;
    for (std::int64_t k = 0; k < n_steps_; ++k) {
      const bool arrived = realize_loss(mix, link, totals);
      if (arrived) ++totals.delivered;

      // Measurement noise is drawn whether or not the packet arrives, so the
      // plant-noise streams stay aligned across loss processes.
      for (int i = 0; i < q_; ++i) z_meas_(i) = meas.normal();

      if (arrived) {
        y_.noalias() = c_ * xi_;
        y_.noalias() += w_factor_ * z_meas_;
        correct(y_);
      }

      if (time_varying_) {
        u_.noalias() = l_flat_.middleRows(static_cast<Eigen::Index>(k) * m_, m_) * xi_hat_;
      } else {
        u_.noalias() = l_inf_ * xi_hat_;
      }

      total += stage_cost();

      for (int i = 0; i < n_; ++i) z_proc_(i) = proc.normal();
      gu_.noalias() = g_noise_ * z_proc_;
      xi_next_.noalias() = phi_ * xi_;
      xi_next_.noalias() += gamma_ * u_;
      xi_next_ += gu_;
      xi_.swap(xi_next_);

      xi_next_.noalias() = phi_ * xi_hat_;
      xi_next_.noalias() += gamma_ * u_;
      xi_hat_.swap(xi_next_);
      predict_cov();
    }
    total += xi_.dot(xi0_ * xi_);
    return total / static_cast<double>(n_steps_);
  }

  bool realize_loss(RandomStream& mix, RandomStream& link, ChunkTotals& totals) {
    if (mode_ == LossMode::kBernoulli) return link.uniform() < rho_;

    const PolicyTables& t = *tables_;
    const bool use_pi1 = mix.uniform() < t.theta1;
    const std::vector<int>& next = use_pi1 ? t.next1 : t.next2;
    const std::vector<double>& loss = use_pi1 ? t.loss1 : t.loss2;
    int node = t.source;
    for (int slot = 0; slot < t.deadline && node != t.destination; ++slot) {
      const std::size_t idx = static_cast<std::size_t>(node) * t.deadline + slot;
      const int hop = next[idx];
      if (hop == node) continue;
      ++totals.attempts;
      if (link.uniform() >= loss[idx]) node = hop;
    }
    return node == t.destination;
  }

  void correct(const Eigen::VectorXd& y) {
    cp_.noalias() = c_ * p_;
    s_.noalias() = cp_ * c_.transpose();
    s_ += rw_;
    ldlt_.compute(s_);
    if (ldlt_.info() != Eigen::Success ||
        ldlt_.vectorD().cwiseAbs().minCoeff() <= 0.0)
      throw std::runtime_error("innovation covariance is singular");
    k_gain_.noalias() = ldlt_.solve(cp_).transpose();
    innov_ = y;
    innov_.noalias() -= c_ * xi_hat_;
    xi_hat_.noalias() += k_gain_ * innov_;
    p_.noalias() -= k_gain_ * cp_;
    tmp_ = p_;
    p_.noalias() = 0.5 * tmp_;
    p_.noalias() += 0.5 * tmp_.transpose();
  }

  void predict_cov() {
    tmp_.noalias() = phi_ * p_;
    p_.noalias() = tmp_ * phi_.transpose();
    p_ += rvt_;
    tmp_ = p_;
    p_.noalias() = 0.5 * tmp_;
    p_.noalias() += 0.5 * tmp_.transpose();
  }

  double stage_cost() {
    gu_.noalias() = xi_xx_ * xi_;
    double c = xi_.dot(gu_);
    xxu_.noalias() = xi_xu_.transpose() * xi_;
    c += 2.0 * u_.dot(xxu_);
    xxu_.noalias() = xi_uu_ * u_;
    c += u_.dot(xxu_);
    return c;
  }

  LossMode mode_;
  const PolicyTables* tables_;
  double rho_;
  std::int64_t n_steps_;
  std::uint64_t seed_;
  int n_, m_, q_, d_;
  bool time_varying_ = false;

  MatE phi_, rvt_, xi_xx_, xi0_, p0_, p_, tmp_;
  Eigen::Matrix<double, E, Eigen::Dynamic> gamma_, xi_xu_, g_noise_, k_gain_;
  MatQE c_, l_flat_;
  Eigen::MatrixXd rw_, xi_uu_, l_inf_, x0_factor_, w_factor_, cp_, s_;
  VecE xi_, xi_next_, xi_hat_, gu_;
  Eigen::VectorXd u_, z_proc_, z_meas_, y_, innov_, xxu_;
  Eigen::Matrix<double, E, 1> z_init_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

std::int64_t resolve_steps(const DiscretePlant& dp, const SimulationOptions& opts) {
  if (dp.n_steps > 0) return dp.n_steps;
  if (!(opts.horizon_s > 0.0))
    throw std::invalid_argument("simulation horizon must be positive");
  return static_cast<std::int64_t>(std::ceil(opts.horizon_s / dp.h_s - 1e-9));
}

template <int E>
SimulationReport run_simulation_sized(const DiscretePlant& dp, const ControllerGains& gains,
                                      LossMode mode, const PolicyTables* tables, double rho,
                                      const SimulationOptions& opts) {
  const std::int64_t n_steps = resolve_steps(dp, opts);
  if (opts.replicates < 1) throw std::invalid_argument("replicate count must be positive");

  std::vector<double> costs;
  if (opts.keep_replicates) costs.assign(static_cast<std::size_t>(opts.replicates), 0.0);

  const int workers = std::max(1, opts.threads);
  std::vector<ChunkTotals> partials(static_cast<std::size_t>(workers));
  parallel_chunks(opts.replicates, workers,
                  [&](std::int64_t begin, std::int64_t end, int worker) {
                    ReplicateWorker<E> w(dp, gains, mode, tables, rho, n_steps, opts.seed);
                    partials[static_cast<std::size_t>(worker)] =
                        w.run(begin, end, opts.keep_replicates ? costs.data() : nullptr);
                  });

  ChunkTotals t;
  for (const ChunkTotals& p : partials) {
    t.cost_sum += p.cost_sum;
    t.cost_sq_sum += p.cost_sq_sum;
    t.delivered += p.delivered;
    t.attempts += p.attempts;
  }

  const double r = static_cast<double>(opts.replicates);
  SimulationReport report;
  report.j_mean = t.cost_sum / r;
  if (opts.replicates > 1) {
    const double var = std::max(0.0, (t.cost_sq_sum - t.cost_sum * t.cost_sum / r) / (r - 1.0));
    report.j_stderr = std::sqrt(var / r);
  }
  const double packets = r * static_cast<double>(n_steps);
  report.rho_empirical = static_cast<double>(t.delivered) / packets;
  report.cost_empirical =
      mode == LossMode::kSlotLevel ? static_cast<double>(t.attempts) / packets : kNaN;
  report.replicates = opts.replicates;
  report.n_steps = n_steps;
  report.mode = mode;
  report.seed = opts.seed;
  report.replicate_costs = std::move(costs);
  return report;
}

SimulationReport run_simulation(const DiscretePlant& dp, const ControllerGains& gains,
                                LossMode mode, const PolicyTables* tables, double rho,
                                const SimulationOptions& opts) {
  switch (dp.ext_dim()) {
    case 2: return run_simulation_sized<2>(dp, gains, mode, tables, rho, opts);
    case 3: return run_simulation_sized<3>(dp, gains, mode, tables, rho, opts);
    case 4: return run_simulation_sized<4>(dp, gains, mode, tables, rho, opts);
    default:
      return run_simulation_sized<Eigen::Dynamic>(dp, gains, mode, tables, rho, opts);
  }
}

// Noisy closed loop gated by a fixed arrival sequence, with the plant-noise
// streams keyed by (seed, replicate) so coupled runs see identical noise.
double realized_cost(const DiscretePlant& dp, const ControllerGains& gains,
                     const std::vector<int>& loss_sequence, std::uint64_t seed,
                     std::int64_t replicate) {
  const std::int64_t n_steps = static_cast<std::int64_t>(loss_sequence.size());
  RandomStream proc(seed, replicate, StreamRole::kProcessNoise);
  RandomStream meas(seed, replicate, StreamRole::kMeasurementNoise);
  RandomStream init(seed, replicate, StreamRole::kInitialState);

  const int d = dp.ext_dim();
  const Eigen::MatrixXd x0_factor = covariance_factor(dp.p0);
  const Eigen::MatrixXd w_factor = covariance_factor(dp.rw);
  const Eigen::MatrixXd g_noise = dp.g * covariance_factor(dp.rv);
  const Eigen::MatrixXd rvt = dp.rv_tilde();

  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i) z(i) = init.normal();
  Eigen::VectorXd xi = x0_factor * z;
  EstimatorState state{Eigen::VectorXd::Zero(d), dp.p0};

  Eigen::VectorXd z_proc(dp.n), z_meas(dp.rw.rows());
  double total = 0.0;
  for (std::int64_t k = 0; k < n_steps; ++k) {
    for (Eigen::Index i = 0; i < z_meas.size(); ++i) z_meas(i) = meas.normal();
    if (loss_sequence[static_cast<std::size_t>(k)] == 1) {
      const Eigen::VectorXd y = dp.c_ext * xi + w_factor * z_meas;
      Eigen::MatrixXd cp = dp.c_ext * state.p_cov;
      Eigen::MatrixXd s = cp * dp.c_ext.transpose() + dp.rw;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
      if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= 0.0)
        throw std::runtime_error("innovation covariance is singular");
      const Eigen::MatrixXd gain = ldlt.solve(cp).transpose();
      state.xi_hat += gain * (y - dp.c_ext * state.xi_hat);
      state.p_cov = symmetrized(state.p_cov - gain * cp);
    }

    const Eigen::VectorXd u = gains.l_seq[static_cast<std::size_t>(k)] * state.xi_hat;
    total += xi.dot(dp.xi_xx * xi) + 2.0 * u.dot(dp.xi_xu.transpose() * xi) +
             u.dot(dp.xi_uu * u);

    for (int i = 0; i < dp.n; ++i) z_proc(i) = proc.normal();
    xi = dp.phi * xi + dp.gamma * u + g_noise * z_proc;
    state.xi_hat = dp.phi * state.xi_hat + dp.gamma * u;
    state.p_cov = cov_predict(state.p_cov, dp.phi, rvt);
  }
  total += xi.dot(dp.xi0 * xi);
  return total / static_cast<double>(n_steps);
}

}  // namespace

SimulationReport simulate_closed_loop(const DiscretePlant& dp, const ControllerGains& gains,
                                      const NetworkTopology& topology,
                                      const RandomizedPolicy& policy,
                                      const SimulationOptions& opts) {
  if (opts.mode == LossMode::kBernoulli)
    return run_simulation(dp, gains, LossMode::kBernoulli, nullptr, policy.reliability, opts);
  const PolicyTables tables = flatten_policy(topology, policy);
  return run_simulation(dp, gains, LossMode::kSlotLevel, &tables, policy.reliability, opts);
}

SimulationReport simulate_closed_loop(const DiscretePlant& dp, const ControllerGains& gains,
                                      double rho, const SimulationOptions& opts) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::invalid_argument("arrival probability must lie in [0, 1]");
  SimulationOptions o = opts;
  o.mode = LossMode::kBernoulli;
  return run_simulation(dp, gains, LossMode::kBernoulli, nullptr, rho, o);
}

CouplingReport coupling_experiment(const DiscretePlant& dp, const ControllerGains& gains,
                                   double rho_low, double rho_high, std::int64_t replicates,
                                   std::uint64_t seed) {
  if (!(rho_low >= 0.0 && rho_low <= rho_high && rho_high <= 1.0))
    throw std::invalid_argument("coupled arrival probabilities must satisfy 0 <= low <= high <= 1");
  if (!gains.finite_horizon())
    throw std::invalid_argument("coupling experiment needs finite-horizon gains");
  const std::int64_t n_steps = static_cast<std::int64_t>(gains.l_seq.size());
  if (replicates < 1) throw std::invalid_argument("replicate count must be positive");

  CouplingReport report;
  report.replicates = replicates;
  report.n_steps = n_steps;
  report.min_loewner_eig = std::numeric_limits<double>::infinity();

  const Eigen::MatrixXd rvt = dp.rv_tilde();
  Eigen::MatrixXd p_lo = dp.p0, p_hi = dp.p0;
  std::vector<int> seq_lo(static_cast<std::size_t>(n_steps));
  std::vector<int> seq_hi(static_cast<std::size_t>(n_steps));
  const double cost_tol = 1e-9;
  const double loewner_tol = -1e-9;

  // Realized runs share the plant-noise streams; only the gate differs.
  double realized_lo_sum = 0.0, realized_hi_sum = 0.0;

  for (std::int64_t rep = 0; rep < replicates; ++rep) {
    RandomStream omega(seed, rep, StreamRole::kCouplingOmega);
    bool loewner_bad = false;
    p_lo = dp.p0;
    p_hi = dp.p0;
    for (std::int64_t k = 0; k < n_steps; ++k) {
      const double w = omega.uniform();
      const int a_lo = w < rho_low ? 1 : 0;
      const int a_hi = w < rho_high ? 1 : 0;
      seq_lo[static_cast<std::size_t>(k)] = a_lo;
      seq_hi[static_cast<std::size_t>(k)] = a_hi;

      p_lo = cov_correct(p_lo, a_lo, dp.c_ext, dp.rw);
      p_hi = cov_correct(p_hi, a_hi, dp.c_ext, dp.rw);
      const double gap = min_eigenvalue(p_lo - p_hi);
      report.min_loewner_eig = std::min(report.min_loewner_eig, gap);
      if (gap < loewner_tol) loewner_bad = true;

      p_lo = cov_predict(p_lo, dp.phi, rvt);
      p_hi = cov_predict(p_hi, dp.phi, rvt);
    }
    if (loewner_bad) ++report.loewner_violations;

    const Eigen::VectorXd xi0 = Eigen::VectorXd::Zero(dp.ext_dim());
    const double j_lo = finite_horizon_cost(dp, gains, seq_lo, xi0) / static_cast<double>(n_steps);
    const double j_hi = finite_horizon_cost(dp, gains, seq_hi, xi0) / static_cast<double>(n_steps);
    report.mean_cost_low += j_lo;
    report.mean_cost_high += j_hi;
    if (j_hi > j_lo + cost_tol * std::max(1.0, std::abs(j_lo))) ++report.cost_violations;

    realized_lo_sum += realized_cost(dp, gains, seq_lo, seed, rep);
    realized_hi_sum += realized_cost(dp, gains, seq_hi, seed, rep);
  }

  const double r = static_cast<double>(replicates);
  report.mean_cost_low /= r;
  report.mean_cost_high /= r;
  report.realized_mean_low = realized_lo_sum / r;
  report.realized_mean_high = realized_hi_sum / r;
  return report;
}

std::string to_json(const SimulationReport& report) {
  nlohmann::ordered_json j;
  j["j_empirical_mean"] = report.j_mean;
  j["j_empirical_stderr"] = report.j_stderr;
  j["rho_empirical"] = report.rho_empirical;
  if (std::isnan(report.cost_empirical))
    j["cost_empirical"] = nullptr;
  else
    j["cost_empirical"] = report.cost_empirical;
  j["replicates"] = report.replicates;
  j["n_steps"] = report.n_steps;
  j["mode"] = report.mode == LossMode::kSlotLevel ? "slot-level" : "bernoulli";
  j["seed"] = report.seed;
  return j.dump(2) + "\n";
}

}  // namespace wncs
