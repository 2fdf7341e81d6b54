#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sparsecv/linalg.hpp"
#include "sparsecv/relax.hpp"

namespace sparsecv {

// Interval certified to contain x' beta_opt for every optimal cardinality-
// constrained solution beta_opt whose objective does not exceed the slack
// reference.
struct PredictionInterval {
  double center = 0.0;
  double halfwidth = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Bounds on the squared prediction error (y - x' beta_opt)^2.
struct PointErrorBounds {
  double lo = 0.0;
  double hi = 0.0;
};

// Certified range for one (tau, fold) cell of the cross-validation table.
// zeta_l and zeta_u bracket the fold's (unnormalized) squared-error sum;
// h_estimate is the sum evaluated at the relaxation predictor, and
// incumbent_value the training objective of the best feasible slice solution.
struct BoundCell {
  int tau = 0;
  int fold = 0;
  double zeta_l = 0.0;
  double zeta_u = 0.0;
  bool exact = false;
  double h_estimate = 0.0;
  double incumbent_value = 0.0;
  std::vector<int> support;  // incumbent support on the slice
};

// Squared radius of the optimality ball around rel.beta in the ||X d||
// seminorm of the slice, given any upper bound u_bar on the cardinality-
// constrained optimum: ||X (beta_opt - rel.beta)||^2 <= returned slack.
// Equals max(0, u_bar - rel.dual_value) plus a displacement term for the
// inexactness of rel.beta that vanishes with the solver gap.
double ellipsoid_slack(const RelaxSolution& rel, double u_bar);

// x' beta_opt lies within sqrt(slack * x'A^{-1}x) of x' beta_relax, where A
// is G's matrix.  G must carry the geometry the slack was certified in: the
// plain slice gram (build_gram_chol) for ellipsoid_slack values.
PredictionInterval prediction_interval(const Eigen::VectorXd& x,
                                       const RelaxSolution& rel,
                                       const RegGram& G, double slack);

PointErrorBounds pointwise_error_bounds(double y, const PredictionInterval& iv);

// Exact min/max of ||y_fold - X_fold beta||^2 over the ellipsoid
// (beta - beta_relax)' A (beta - beta_relax) <= slack, A being G's matrix,
// via two trust-region subproblems.  Tighter than summing pointwise bounds;
// off the hot path.  As with prediction_interval, G fixes the geometry.
struct AggregatedBounds {
  double lo = 0.0;
  double hi = 0.0;
};
AggregatedBounds aggregated_fold_bounds(const Eigen::MatrixXd& X_fold,
                                        const Eigen::VectorXd& y_fold,
                                        const RelaxSolution& rel,
                                        const RegGram& G, double slack);

// v_bar - u: fold error of the optimal slice solution is at least the
// full-data relaxation bound minus the slice incumbent objective.  May be
// negative; callers clamp at zero.
double training_error_lower_bound(double v_bar, double u);

// Assembles one cell: per-point intervals with slack u - v, summed error
// bounds, and the training-error route folded into zeta_l.
//   rel   relaxation on the slice (training rows without this fold)
//   G     shifted RegGram of the slice
//   qf    quadratic form of the slice (plain gram, X'y, ||y||^2)
//   v_bar full-data relaxation lower bound at the same (gamma, tau)
//   v     slice relaxation lower bound
//   u     slice incumbent objective (feasible, so u >= v)
//   incumbent_beta  cardinality-feasible predictor attaining u, if available
// Intervals use the plain-gram geometry around rel.beta; slices whose plain
// gram is rank-deficient fall back to the sublevel ellipsoid of the shifted
// quadratic, which stays certified without any rank assumption.  The cell
// estimate is the fold error of incumbent_beta when given; the relaxation
// predictor is infeasibly dense and barely moves with the cardinality cap,
// so estimates taken there cannot rank caps.  Without an incumbent the
// estimate falls back to the relaxation predictor.
BoundCell compute_bounds(const Eigen::MatrixXd& X_fold,
                         const Eigen::VectorXd& y_fold,
                         const RelaxSolution& rel, const RegGram& G,
                         const QuadForm& qf, double v_bar, double v, double u,
                         bool aggregated = false,
                         const Eigen::VectorXd* incumbent_beta = nullptr);

}  // namespace sparsecv
