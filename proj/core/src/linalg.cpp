#include "sparsecv/linalg.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "sparsecv/errors.hpp"

namespace sparsecv {

namespace {

// Unblocked Cholesky used only to report which pivot went nonpositive after
// Eigen's factorization signals an error.
int find_bad_pivot(const Eigen::MatrixXd& A) {
  const Eigen::Index p = A.rows();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double d = A(j, j) - L.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) return static_cast<int>(j);
    L(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < p; ++i) {
      L(i, j) = (A(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
    }
  }
  return -1;
}

void factor(RegGram& G) {
  Eigen::LLT<Eigen::MatrixXd> llt(G.A);
  if (llt.info() != Eigen::Success) {
    const int pivot = find_bad_pivot(G.A);
    throw NumericError("Cholesky factorization failed at pivot " +
                       std::to_string(pivot < 0 ? 0 : pivot));
  }
  G.L = llt.matrixL();
}

}  // namespace

RegGram build_reg_gram(const Eigen::MatrixXd& X, double gamma) {
  if (!(gamma > 0.0)) {
    throw ConfigError("build_reg_gram: gamma must be positive, got " +
                      std::to_string(gamma));
  }
  RegGram G;
  G.gamma = gamma;
  const Eigen::Index p = X.cols();
  G.A = Eigen::MatrixXd::Zero(p, p);
  G.A.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  G.A.triangularView<Eigen::StrictlyUpper>() =
      G.A.triangularView<Eigen::StrictlyLower>().transpose();
  G.A.diagonal().array() += gamma / 2.0;
  factor(G);
  return G;
}

RegGram build_gram_chol(const Eigen::MatrixXd& X) {
  RegGram G;
  G.gamma = 0.0;
  const Eigen::Index p = X.cols();
  G.A = Eigen::MatrixXd::Zero(p, p);
  G.A.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  G.A.triangularView<Eigen::StrictlyUpper>() =
      G.A.triangularView<Eigen::StrictlyLower>().transpose();
  factor(G);
  return G;
}

RegGram factor_spd(Eigen::MatrixXd A, double gamma) {
  RegGram G;
  G.gamma = gamma;
  G.A = std::move(A);
  factor(G);
  return G;
}

RegGram downdate_fold(const RegGram& full, const Eigen::MatrixXd& X_fold) {
  RegGram G;
  G.gamma = full.gamma;
  G.A = full.A;
  G.A.selfadjointView<Eigen::Lower>().rankUpdate(X_fold.transpose(), -1.0);
  G.A.triangularView<Eigen::StrictlyUpper>() =
      G.A.triangularView<Eigen::StrictlyLower>().transpose();
  factor(G);
  return G;
}

Eigen::VectorXd solve_spd(const RegGram& G, const Eigen::VectorXd& b) {
  Eigen::VectorXd w = G.L.triangularView<Eigen::Lower>().solve(b);
  G.L.transpose().triangularView<Eigen::Upper>().solveInPlace(w);
  return w;
}

double quad_form_inv(const RegGram& G, const Eigen::VectorXd& x) {
  return G.L.triangularView<Eigen::Lower>().solve(x).squaredNorm();
}

}  // namespace sparsecv
