#include "wncs/discretize.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wncs {
namespace {

// exp([[A, B], [0, 0]] t) = [[e^{At}, int_0^t e^{As} ds B], [0, I]].
MatrixXd extended_drift(const ContinuousPlant& plant) {
  const int n = plant.n(), m = plant.m();
  MatrixXd abar = MatrixXd::Zero(n + m, n + m);
  abar.topLeftCorner(n, n) = plant.a;
  abar.topRightCorner(n, m) = plant.b;
  return abar;
}

// int_0^t e^{F's} Q e^{Fs} ds from one exponential of [[-F', Q], [0, F]]:
// with exp(.) = [[E11, E12], [0, E22]], the integral equals E22' E12.
MatrixXd van_loan_gram(const MatrixXd& f, const MatrixXd& q, double t) {
  const Eigen::Index d = f.rows();
  MatrixXd c = MatrixXd::Zero(2 * d, 2 * d);
  c.topLeftCorner(d, d) = -f.transpose();
  c.topRightCorner(d, d) = q;
  c.bottomRightCorner(d, d) = f;
  const MatrixXd e = matrix_exp(c * t);
  return e.bottomRightCorner(d, d).transpose() * e.topRightCorner(d, d);
}

std::int64_t step_count(double horizon_s, double h_s) {
  const double ratio = horizon_s / h_s;
  const double rounded = std::round(ratio);
  if (std::fabs(ratio - rounded) <= 1e-9 * std::max(1.0, std::fabs(ratio)))
    return static_cast<std::int64_t>(rounded);
  return static_cast<std::int64_t>(std::ceil(ratio));
}

}  // namespace

DiscretePlant discretize(const ContinuousPlant& plant, double h_s, double tau_s,
                         std::optional<double> horizon_s) {
  if (!(h_s > 0.0)) throw std::invalid_argument("sampling period must be > 0");
  if (!(tau_s > 0.0) || tau_s > h_s)
    throw std::invalid_argument("actuation delay must lie in (0, h]");
  if (horizon_s && *horizon_s < h_s)
    throw std::invalid_argument("horizon must cover at least one sampling period");

  const int n = plant.n(), m = plant.m(), q = plant.q();
  const double rem = h_s - tau_s;
  const MatrixXd abar = extended_drift(plant);

  const MatrixXd exp_tau = matrix_exp(abar * tau_s);
  const MatrixXd exp_rem = matrix_exp(abar * rem);
  const MatrixXd exp_h = matrix_exp(abar * h_s);
  const MatrixXd phi_tau = exp_tau.topLeftCorner(n, n);
  const MatrixXd gam_tau = exp_tau.topRightCorner(n, m);
  const MatrixXd phi_rem = exp_rem.topLeftCorner(n, n);
  const MatrixXd gam_rem = exp_rem.topRightCorner(n, m);

  MatrixXd qc(n + m, n + m);
  qc << plant.q_xx, plant.q_xu, plant.q_xu.transpose(), plant.q_uu;
  const MatrixXd w_tau = van_loan_gram(abar, qc, tau_s);
  const MatrixXd w_rem = van_loan_gram(abar, qc, rem);

  DiscretePlant dp;
  dp.n = n;
  dp.m = m;
  dp.h_s = h_s;
  dp.tau_s = tau_s;
  dp.n_steps = horizon_s ? step_count(*horizon_s, h_s) : 0;

  dp.phi = MatrixXd::Zero(n + m, n + m);
  dp.phi.topLeftCorner(n, n) = exp_h.topLeftCorner(n, n);
  dp.phi.topRightCorner(n, m) = phi_rem * gam_tau;

  dp.gamma = MatrixXd::Zero(n + m, m);
  dp.gamma.topRows(n) = gam_rem;
  dp.gamma.bottomRows(m) = MatrixXd::Identity(m, m);

  dp.g = MatrixXd::Zero(n + m, n);
  dp.g.topRows(n) = MatrixXd::Identity(n, n);

  dp.c_ext = MatrixXd::Zero(q, n + m);
  dp.c_ext.leftCols(n) = plant.c;

  dp.rv = symmetrized(van_loan_gram(plant.a.transpose(), plant.rv_c, h_s));
  dp.rw = plant.rw;

  // Stage cost: the [0, tau) segment is quadratic in xi_k directly; the
  // [tau, h) segment sees x(kh + tau) = M xi_k with M = [phi(tau) gamma(tau)].
  MatrixXd mmap(n, n + m);
  mmap << phi_tau, gam_tau;
  dp.xi_xx = symmetrized(w_tau + mmap.transpose() * w_rem.topLeftCorner(n, n) * mmap);
  dp.xi_xu = mmap.transpose() * w_rem.topRightCorner(n, m);
  dp.xi_uu = symmetrized(w_rem.bottomRightCorner(m, m));

  dp.xi0 = MatrixXd::Zero(n + m, n + m);
  dp.xi0.topLeftCorner(n, n) = plant.q0;

  dp.p0 = MatrixXd::Zero(n + m, n + m);
  dp.p0.topLeftCorner(n, n) = plant.sigma0;
  return dp;
}

namespace {

// Composite Simpson over [0, t] with panel doubling until the result is
// stable, returning the finest value. The integrand must be smooth.
template <typename F>
MatrixXd simpson_refine(const F& integrand, double t, Eigen::Index rows, Eigen::Index cols) {
  if (t == 0.0) return MatrixXd::Zero(rows, cols);
  MatrixXd prev = MatrixXd::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN());
  for (int panels = 16; panels <= 4096; panels *= 2) {
    const double dt = t / (2 * panels);
    MatrixXd acc = integrand(0.0) + integrand(t);
    for (int k = 1; k < 2 * panels; ++k)
      acc += integrand(k * dt) * (k % 2 == 1 ? 4.0 : 2.0);
    acc *= dt / 3.0;
    if (prev.allFinite() && acc.allFinite()) {
      const double change = (acc - prev).norm() / std::max(1.0, acc.norm());
      if (change < 1e-11) return acc;
    }
    prev = acc;
  }
  return prev;
}

double rel_dev(const MatrixXd& reference, const MatrixXd& alternative) {
  if (!reference.allFinite() || !alternative.allFinite())
    return std::numeric_limits<double>::infinity();
  return (reference - alternative).norm() / std::max(1.0, reference.norm());
}

}  // namespace

SensitivityReport sensitivity_check(const ContinuousPlant& plant, double h_s, double tau_s) {
  const int n = plant.n(), m = plant.m();
  const double rem = h_s - tau_s;
  const MatrixXd abar = extended_drift(plant);
  MatrixXd qc(n + m, n + m);
  qc << plant.q_xx, plant.q_xu, plant.q_xu.transpose(), plant.q_uu;

  const MatrixXd exp_h = matrix_exp(abar * h_s);
  const MatrixXd exp_half = matrix_exp(abar * (0.5 * h_s));
  const MatrixXd gam_tau = matrix_exp(abar * tau_s).topRightCorner(n, m);
  const MatrixXd gam_rem = matrix_exp(abar * rem).topRightCorner(n, m);
  const MatrixXd w_tau = van_loan_gram(abar, qc, tau_s);
  const MatrixXd w_rem = van_loan_gram(abar, qc, rem);
  const MatrixXd rv = van_loan_gram(plant.a.transpose(), plant.rv_c, h_s);

  const auto state_inp = [&](double s) -> MatrixXd {
    return matrix_exp(plant.a * s) * plant.b;
  };
  const auto cost_gram = [&](double s) -> MatrixXd {
    const MatrixXd e = matrix_exp(abar * s);
    return e.transpose() * qc * e;
  };
  const auto noise_gram = [&](double s) -> MatrixXd {
    const MatrixXd e = matrix_exp(plant.a * s);
    return e * plant.rv_c * e.transpose();
  };

  SensitivityReport report;
  const auto add = [&](const std::string& name, const MatrixXd& ref, const MatrixXd& alt) {
    const double dev = rel_dev(ref, alt);
    report.deviations.emplace_back(name, dev);
    report.max_rel_dev = std::max(report.max_rel_dev, dev);
  };

  add("phi_h", exp_h, exp_half * exp_half);
  add("gamma_tau", gam_tau, simpson_refine(state_inp, tau_s, n, m));
  add("gamma_rem", gam_rem, simpson_refine(state_inp, rem, n, m));
  add("cost_gram_tau", w_tau, simpson_refine(cost_gram, tau_s, n + m, n + m));
  add("cost_gram_rem", w_rem, simpson_refine(cost_gram, rem, n + m, n + m));
  add("rv", rv, simpson_refine(noise_gram, h_s, n, n));

  report.flagged = !(report.max_rel_dev <= 1e-8);
  return report;
}

}  // namespace wncs
