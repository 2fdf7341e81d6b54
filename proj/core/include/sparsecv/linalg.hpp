#pragma once

#include <Eigen/Dense>

namespace sparsecv {

// Regularized Gram matrix A = X'X + (gamma/2) I together with its lower
// Cholesky factor.  gamma > 0 keeps A positive definite even when p > n.
struct RegGram {
  Eigen::MatrixXd A;
  Eigen::MatrixXd L;  // A = L L'
  double gamma = 0.0;
};

RegGram build_reg_gram(const Eigen::MatrixXd& X, double gamma);

// Plain Gram matrix X'X with its Cholesky factor (gamma = 0).  Fails with a
// numeric error when X is column-rank-deficient; callers that must handle
// that case catch and fall back.
RegGram build_gram_chol(const Eigen::MatrixXd& X);

// Factors an already-formed symmetric positive-definite matrix.
RegGram factor_spd(Eigen::MatrixXd A, double gamma);

// Slice update: removes the rows of one fold from a full-data RegGram and
// refactors from scratch.  Callers cache one result per (fold, gamma).
RegGram downdate_fold(const RegGram& full, const Eigen::MatrixXd& X_fold);

// Solves A w = b through the stored factor.
Eigen::VectorXd solve_spd(const RegGram& G, const Eigen::VectorXd& b);

// x' A^{-1} x = ||L^{-1} x||^2; nonnegative by construction.
double quad_form_inv(const RegGram& G, const Eigen::VectorXd& x);

}  // namespace sparsecv
