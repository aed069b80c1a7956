#pragma once

#include <Eigen/Dense>

namespace wncs {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Max absolute asymmetry, scaled by max(1, |m|_max).
inline double asymmetry(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

inline bool is_symmetric(const MatrixXd& m, double tol = 1e-12) { return asymmetry(m) <= tol; }

inline double min_eigenvalue(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline bool is_psd(const MatrixXd& m, double eig_tol = -1e-10) {
  return min_eigenvalue(m) >= eig_tol;
}

inline bool is_pd(const MatrixXd& m) { return min_eigenvalue(m) > 0.0; }

// a <= b in the positive-semidefinite (Loewner) order, up to eig_tol.
inline bool loewner_leq(const MatrixXd& a, const MatrixXd& b, double eig_tol = -1e-9) {
  return min_eigenvalue(b - a) >= eig_tol;
}

inline double spectral_radius(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

// Symmetric factor F with F F^T = cov; negative eigenvalues are clipped to
// zero so slightly indefinite inputs (rounding) still yield a valid factor.
inline MatrixXd covariance_factor(const MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(cov));
  VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

MatrixXd matrix_exp(const MatrixXd& m);

}  // namespace wncs
