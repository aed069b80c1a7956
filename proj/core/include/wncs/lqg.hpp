#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "wncs/discretize.hpp"

namespace wncs {

// Time update of a state covariance: phi P phi' + rv_tilde.
MatrixXd cov_predict(const MatrixXd& p, const MatrixXd& phi, const MatrixXd& rv_tilde);

// Measurement update with arrival weight rho in [0, 1]:
// P - rho P c' (c P c' + rw)^{-1} c P. rho = 1 is the standard correction,
// rho = 0 leaves P untouched; fractional rho gives the averaged update used
// by the covariance bounds.
MatrixXd cov_correct(const MatrixXd& p, double rho, const MatrixXd& c, const MatrixXd& rw);

struct EstimatorState {
  VectorXd xi_hat;  // posterior mean of the extended state
  MatrixXd p_cov;   // posterior covariance
};

// Advances the filter one sample: predict with the applied input u, then
// correct with measurement y if it arrived (rho = 1) or skip the correction
// (rho = 0, y ignored). The covariance is re-symmetrized after the update.
EstimatorState kalman_step(const EstimatorState& state, const DiscretePlant& dp,
                           const VectorXd& u, int rho,
                           const std::optional<VectorXd>& y);

// Fixed points of the prediction-form covariance recursions under i.i.d.
// packet arrival with probability rho:
//   upper: P = phi P phi' + rv_tilde - rho phi P c'(c P c' + rw)^{-1} c P phi'
//   lower: P = (1 - rho) phi P phi' + rv_tilde
// Both are iterated from the initial prior dp.p0. The lower recursion is a
// discrete Lyapunov equation in sqrt(1-rho) phi, so its convergence is
// decided in closed form before iterating.
struct CovarianceBounds {
  MatrixXd p_lower;
  MatrixXd p_upper;
  bool lower_converged = false;
  bool upper_converged = false;
  bool converged = false;
  std::int64_t iterations = 0;
};

CovarianceBounds covariance_bounds(const DiscretePlant& dp, double rho);

// Control Riccati recursion with cross terms:
//   S = phi'S phi + xi_xx - (phi'S gamma + xi_xu)(gamma'S gamma + xi_uu)^{-1}
//       (gamma'S phi + xi_xu'),
//   L = -(gamma'S gamma + xi_uu)^{-1}(gamma'S phi + xi_xu'),  u_k = L xi_hat.
// riccati_control iterates from xi0 to the stationary pair (s_inf, l_inf);
// riccati_control_finite returns the whole backward sequence, s_seq[k] = S_k
// with s_seq[N] = xi0 and l_seq[k] computed from S_{k+1}.
struct ControllerGains {
  MatrixXd s_inf;
  MatrixXd l_inf;
  std::vector<MatrixXd> s_seq;
  std::vector<MatrixXd> l_seq;
  bool finite_horizon() const { return !s_seq.empty(); }
};

ControllerGains riccati_control(const DiscretePlant& dp);
ControllerGains riccati_control_finite(const DiscretePlant& dp, std::int64_t n_steps);

// Stationary per-sample cost bounds under arrival probability rho:
//   j_min = tr(S rv_tilde) + (1-rho) tr(D p_lower)
//   j_max = tr(S rv_tilde) + tr(D correct(p_upper, rho))
// with D = phi'S phi + xi_xx - S. Divergent covariance bounds give +inf.
struct CostBounds {
  double j_min = 0.0;
  double j_max = 0.0;
};

CostBounds cost_bounds(const DiscretePlant& dp, const ControllerGains& gains,
                       const CovarianceBounds& bounds, double rho);

// Expected total cost of the optimal finite-horizon controller conditioned
// on a realized arrival sequence (entries in {0,1}; loss_sequence[k] gates
// the measurement at sample k):
//   xi0'S_0 xi0 + tr(S_0 P_0) + sum_k tr(S_{k+1} rv_tilde)
//                             + sum_k tr((phi'S_{k+1} phi + xi_xx - S_k) P_{k|k}).
// Requires finite-horizon gains with s_seq.size() == loss_sequence.size()+1.
double finite_horizon_cost(const DiscretePlant& dp, const ControllerGains& gains,
                           const std::vector<int>& loss_sequence, const VectorXd& xi0);

// Exact expectation bounds for the same total (xi0 = 0) when arrivals are
// i.i.d. Bernoulli(rho): the realized posterior covariance path is replaced
// by its lower/upper deterministic envelopes.
std::pair<double, double> finite_horizon_cost_bounds(const DiscretePlant& dp,
                                                     const ControllerGains& gains, double rho);

}  // namespace wncs
