#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wncs/model.hpp"

namespace wncs {

// Sampled-data model over the extended state xi_k = [x(kh); u_{k-1}]. The
// input computed from sample k is actuated tau seconds into the interval, so
// u_{k-1} drives [kh, kh+tau) and u_k drives [kh+tau, (k+1)h):
//
//   xi_{k+1} = phi xi_k + gamma u_k + g v_k,   v_k ~ N(0, rv)
//   y_k      = c_ext xi_k + w_k,               w_k ~ N(0, rw)
//
// with the exact transcription of the continuous quadratic cost:
//
//   sum_k [xi_k; u_k]' [xi_xx xi_xu; xi_xu' xi_uu] [xi_k; u_k] + xi_N' xi0 xi_N.
struct DiscretePlant {
  MatrixXd phi;    // (n+m) x (n+m)
  MatrixXd gamma;  // (n+m) x m
  MatrixXd g;      // (n+m) x n
  MatrixXd c_ext;  // q x (n+m)
  MatrixXd rv;     // n x n
  MatrixXd rw;     // q x q
  MatrixXd xi_xx;  // (n+m) x (n+m)
  MatrixXd xi_xu;  // (n+m) x m
  MatrixXd xi_uu;  // m x m
  MatrixXd xi0;    // (n+m) x (n+m)
  MatrixXd p0;     // (n+m) x (n+m) initial prior covariance, blockdiag(Sigma0, 0)
  double h_s = 0.0;
  double tau_s = 0.0;
  std::int64_t n_steps = 0;  // ceil(T/h); 0 means infinite horizon
  int n = 0;
  int m = 0;

  int ext_dim() const { return n + m; }
  MatrixXd rv_tilde() const { return g * rv * g.transpose(); }
};

// Exact discretization at sampling period h_s with actuation delay tau_s,
// 0 < tau_s <= h_s. All integrals are evaluated through augmented
// block-matrix exponentials; no quadrature is involved. Times are seconds.
DiscretePlant discretize(const ContinuousPlant& plant, double h_s, double tau_s,
                         std::optional<double> horizon_s);

struct SensitivityReport {
  double max_rel_dev = 0.0;
  bool flagged = false;
  std::vector<std::pair<std::string, double>> deviations;
};

// Recomputes every matrix integral with step-doubling composite quadrature
// and the transition matrix with halved-step squaring, then reports the
// worst relative deviation from the exponential-based route. Deviations
// above 1e-8 (or non-finite values) flag the discretization as unreliable
// at this (h, tau).
SensitivityReport sensitivity_check(const ContinuousPlant& plant, double h_s, double tau_s);

}  // namespace wncs
