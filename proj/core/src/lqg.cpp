#include "wncs/lqg.hpp"

#include <cmath>
#include <stdexcept>

namespace wncs {
namespace {

constexpr double kFixedPointTol = 1e-10;
constexpr std::int64_t kMaxIterations = 400000;
constexpr double kDivergenceTrace = 1e12;

// Per-iteration stopping threshold, relative to the iterate's magnitude.
// Weakly observable systems settle at covariances many orders of magnitude
// above the noise floor; an absolute tolerance there either never fires or
// demands meaninglessly many iterations.
double fixed_point_threshold(const MatrixXd& p) {
  return kFixedPointTol * (1.0 + p.cwiseAbs().maxCoeff());
}

// Solve (c p c' + rw) X = c p for the gain computation; the innovation
// covariance is factored symmetrically (LDLT) rather than inverted.
MatrixXd innovation_solve(const MatrixXd& p, const MatrixXd& c, const MatrixXd& rw) {
  const MatrixXd cp = c * p;
  const MatrixXd s = symmetrized(c * p * c.transpose() + rw);
  Eigen::LDLT<MatrixXd> ldlt(s);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= 0.0)
    throw std::runtime_error("innovation covariance is singular");
  return ldlt.solve(cp);  // (c p c' + rw)^{-1} c p
}

double spectral_norm_sym(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

MatrixXd cov_predict(const MatrixXd& p, const MatrixXd& phi, const MatrixXd& rv_tilde) {
  return symmetrized(phi * p * phi.transpose() + rv_tilde);
}

MatrixXd cov_correct(const MatrixXd& p, double rho, const MatrixXd& c, const MatrixXd& rw) {
  if (rho == 0.0) return p;
  const MatrixXd solved = innovation_solve(p, c, rw);  // S^{-1} c P
  return symmetrized(p - rho * (c * p).transpose() * solved);
}

EstimatorState kalman_step(const EstimatorState& state, const DiscretePlant& dp,
                           const VectorXd& u, int rho, const std::optional<VectorXd>& y) {
  if (rho != 0 && rho != 1) throw std::invalid_argument("arrival indicator must be 0 or 1");
  if ((rho == 1) != y.has_value())
    throw std::invalid_argument("measurement must be present exactly when it arrived");

  EstimatorState next;
  next.xi_hat = dp.phi * state.xi_hat + dp.gamma * u;
  next.p_cov = cov_predict(state.p_cov, dp.phi, dp.rv_tilde());
  if (rho == 1) {
    const MatrixXd solved = innovation_solve(next.p_cov, dp.c_ext, dp.rw);
    const MatrixXd gain = solved.transpose();  // P c' (c P c' + rw)^{-1}
    next.xi_hat += gain * (*y - dp.c_ext * next.xi_hat);
    next.p_cov = symmetrized(next.p_cov - gain * dp.c_ext * next.p_cov);
  }
  return next;
}

CovarianceBounds covariance_bounds(const DiscretePlant& dp, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
  const MatrixXd rvt = dp.rv_tilde();
  CovarianceBounds out;

  // Lower recursion: converges iff (1 - rho) * sr(phi)^2 < 1.
  const double sr = spectral_radius(dp.phi);
  out.lower_converged = (1.0 - rho) * sr * sr < 1.0;
  if (out.lower_converged) {
    MatrixXd p = dp.p0;
    for (std::int64_t it = 0; it < kMaxIterations; ++it) {
      const MatrixXd next = symmetrized((1.0 - rho) * (dp.phi * p * dp.phi.transpose()) + rvt);
      const double change = (next - p).cwiseAbs().maxCoeff();
      p = next;
      if (change < fixed_point_threshold(p)) break;
      if (it + 1 == kMaxIterations) out.lower_converged = false;
    }
    out.p_lower = p;
  }

  // Upper recursion: iterate to a fixed point, declaring divergence on trace
  // blowup or a missed tolerance at the iteration cap.
  {
    MatrixXd p = dp.p0;
    out.upper_converged = false;
    for (std::int64_t it = 0; it < kMaxIterations; ++it) {
      MatrixXd next = cov_predict(cov_correct(p, rho, dp.c_ext, dp.rw), dp.phi, rvt);
      // Prediction form: correct-then-predict applied from the prior.
      const double change = (next - p).cwiseAbs().maxCoeff();
      p = next;
      out.iterations = it + 1;
      if (p.trace() > kDivergenceTrace) break;
      if (change < fixed_point_threshold(p)) {
        out.upper_converged = true;
        break;
      }
    }
    if (out.upper_converged) out.p_upper = p;
  }

  out.converged = out.lower_converged && out.upper_converged;
  return out;
}

namespace {

struct RiccatiStep {
  MatrixXd s;
  MatrixXd l;
};

RiccatiStep riccati_step(const DiscretePlant& dp, const MatrixXd& s_next) {
  const MatrixXd phis = dp.phi.transpose() * s_next;
  const MatrixXd r = symmetrized(dp.gamma.transpose() * s_next * dp.gamma + dp.xi_uu);
  const MatrixXd cross = dp.gamma.transpose() * s_next * dp.phi + dp.xi_xu.transpose();
  Eigen::LDLT<MatrixXd> ldlt(r);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("control Riccati: input-cost block is not invertible");
  const MatrixXd solved = ldlt.solve(cross);
  RiccatiStep step;
  step.s = symmetrized(phis * dp.phi + dp.xi_xx - cross.transpose() * solved);
  step.l = -solved;
  return step;
}

}  // namespace

ControllerGains riccati_control(const DiscretePlant& dp) {
  ControllerGains gains;
  MatrixXd s = dp.xi0;
  for (std::int64_t it = 0; it < kMaxIterations; ++it) {
    RiccatiStep step = riccati_step(dp, s);
    const double change = spectral_norm_sym(step.s - s);
    s = std::move(step.s);
    if (change < kFixedPointTol) {
      gains.s_inf = s;
      gains.l_inf = riccati_step(dp, s).l;
      return gains;
    }
  }
  throw std::runtime_error("control Riccati iteration did not converge");
}

ControllerGains riccati_control_finite(const DiscretePlant& dp, std::int64_t n_steps) {
  if (n_steps < 0) throw std::invalid_argument("horizon length must be >= 0");
  ControllerGains gains;
  gains.s_seq.resize(n_steps + 1);
  gains.l_seq.resize(n_steps);
  gains.s_seq[n_steps] = dp.xi0;
  for (std::int64_t k = n_steps - 1; k >= 0; --k) {
    RiccatiStep step = riccati_step(dp, gains.s_seq[k + 1]);
    gains.s_seq[k] = std::move(step.s);
    gains.l_seq[k] = std::move(step.l);
  }
  return gains;
}

CostBounds cost_bounds(const DiscretePlant& dp, const ControllerGains& gains,
                       const CovarianceBounds& bounds, double rho) {
  if (gains.s_inf.size() == 0)
    throw std::invalid_argument("cost_bounds requires stationary gains");
  const MatrixXd rvt = dp.rv_tilde();
  const MatrixXd delta =
      symmetrized(dp.phi.transpose() * gains.s_inf * dp.phi + dp.xi_xx - gains.s_inf);
  const double base = (gains.s_inf * rvt).trace();
  CostBounds out;
  const double inf = std::numeric_limits<double>::infinity();
  out.j_min = bounds.lower_converged
                  ? base + (1.0 - rho) * (delta * bounds.p_lower).trace()
                  : inf;
  out.j_max = bounds.upper_converged
                  ? base + (delta * cov_correct(bounds.p_upper, rho, dp.c_ext, dp.rw)).trace()
                  : inf;
  return out;
}

double finite_horizon_cost(const DiscretePlant& dp, const ControllerGains& gains,
                           const std::vector<int>& loss_sequence, const VectorXd& xi0) {
  if (!gains.finite_horizon())
    throw std::invalid_argument("finite_horizon_cost requires finite-horizon gains");
  const std::size_t n = loss_sequence.size();
  if (gains.s_seq.size() != n + 1)
    throw std::invalid_argument("gain sequence and loss sequence lengths disagree");
  const MatrixXd rvt = dp.rv_tilde();

  double total = xi0.dot(gains.s_seq[0] * xi0) + (gains.s_seq[0] * dp.p0).trace();
  MatrixXd prior = dp.p0;
  for (std::size_t k = 0; k < n; ++k) {
    const int rho_k = loss_sequence[k];
    if (rho_k != 0 && rho_k != 1)
      throw std::invalid_argument("loss sequence entries must be 0 or 1");
    const MatrixXd post = cov_correct(prior, static_cast<double>(rho_k), dp.c_ext, dp.rw);
    const MatrixXd delta = symmetrized(dp.phi.transpose() * gains.s_seq[k + 1] * dp.phi +
                                       dp.xi_xx - gains.s_seq[k]);
    total += (gains.s_seq[k + 1] * rvt).trace() + (delta * post).trace();
    prior = cov_predict(post, dp.phi, rvt);
  }
  return total;
}

std::pair<double, double> finite_horizon_cost_bounds(const DiscretePlant& dp,
                                                     const ControllerGains& gains, double rho) {
  if (!gains.finite_horizon())
    throw std::invalid_argument("finite_horizon_cost_bounds requires finite-horizon gains");
  const std::size_t n = gains.s_seq.size() - 1;
  const MatrixXd rvt = dp.rv_tilde();

  double lo = (gains.s_seq[0] * dp.p0).trace();
  double hi = lo;
  MatrixXd prior_lo = dp.p0, prior_hi = dp.p0;
  for (std::size_t k = 0; k < n; ++k) {
    const MatrixXd post_lo = (1.0 - rho) * prior_lo;
    const MatrixXd post_hi = cov_correct(prior_hi, rho, dp.c_ext, dp.rw);
    const MatrixXd delta = symmetrized(dp.phi.transpose() * gains.s_seq[k + 1] * dp.phi +
                                       dp.xi_xx - gains.s_seq[k]);
    const double noise = (gains.s_seq[k + 1] * rvt).trace();
    lo += noise + (delta * post_lo).trace();
    hi += noise + (delta * post_hi).trace();
    prior_lo = cov_predict(post_lo, dp.phi, rvt);
    prior_hi = cov_predict(post_hi, dp.phi, rvt);
  }
  return {lo, hi};
}

}  // namespace wncs
