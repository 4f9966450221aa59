#pragma once

#include <Eigen/Dense>

namespace roledyn {

/// Non-negative least squares min_{x >= 0} ||A x - b||_2 via the
/// Lawson-Hanson active-set method, posed on the normal equations so that a
/// Gram matrix can be shared across many right-hand sides.
///
/// `gram` = AᵀA (k×k, symmetric PSD) and `atb` = Aᵀb.
Eigen::VectorXd nnls_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& atb);

/// Convenience wrapper forming the normal equations from A and b.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace roledyn
