#include "wncs/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace wncs {

// Scaling-and-squaring with Pade approximation, as provided by Eigen.
MatrixXd matrix_exp(const MatrixXd& m) { return m.exp(); }

}  // namespace wncs
