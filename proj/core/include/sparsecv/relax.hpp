#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sparsecv {

// Solution of the continuous relaxation
//   min_beta ||y - X beta||^2 + (gamma/2) * sum_i beta_i^2 / z_i
//   s.t. z in [0,1]^p, sum z <= tau.
// dual_value is a certified lower bound on the relaxation optimum (and hence
// on the cardinality-constrained optimum); gap = primal_value - dual_value.
struct RelaxSolution {
  Eigen::VectorXd beta;
  Eigen::VectorXd z;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool converged = true;
};

struct PerspOptions {
  double tol = 1e-6;  // relative duality-gap target
  int max_iter = 0;   // 0 means 50*p + 10000
  Eigen::VectorXd warm_beta;  // optional warm start (full-length, may be empty)
};

// Value of the budgeted quadratic-over-linear penalty
//   min_z { sum_i beta_i^2 / z_i : z in [0,1]^p, sum z <= tau }
// together with the optimal allocation.  The value excludes any gamma factor.
struct WaterFill {
  double value = 0.0;
  Eigen::VectorXd z;
};
WaterFill persp_penalty(const Eigen::VectorXd& beta, int tau);

// Quadratic form of the data-fit term: ||y - X b||^2 = b'G b - 2 r'b + yy.
// Slices reuse these across solves; lmax bounds the gradient Lipschitz
// constant (= 2*lmax).
struct QuadForm {
  Eigen::MatrixXd G;  // X'X (no ridge shift)
  Eigen::VectorXd r;  // X'y
  double yy = 0.0;    // ||y||^2
  double lmax = 0.0;  // largest eigenvalue of G
};
QuadForm make_quad_form(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Largest eigenvalue of a symmetric PSD matrix.
double sym_lmax(const Eigen::MatrixXd& S);

// Coordinate status for solves inside a search tree: coordinates in one_idx
// have z pinned to 1, coordinates in free_idx carry the remaining budget,
// everything else is pinned to 0.
struct PinSet {
  std::vector<int> free_idx;
  std::vector<int> one_idx;
};

RelaxSolution solve_perspective(const QuadForm& qf, double gamma, int tau,
                                const PinSet& pins,
                                const PerspOptions& opts = {});

RelaxSolution solve_perspective(const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y, double gamma,
                                int tau, const PerspOptions& opts = {});

// Feasible point recovered from a relaxation: the tau coordinates with the
// largest z (ties by larger |beta|, then lower index) refit by ridge.
struct RoundedSolution {
  Eigen::VectorXd beta;          // full-length, zeros off the support
  std::vector<int> support;
  double value = 0.0;
};
RoundedSolution greedy_round(const RelaxSolution& rel, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, double gamma, int tau);

// Same rounding through a precomputed quadratic form.
RoundedSolution greedy_round(const RelaxSolution& rel, const QuadForm& qf,
                             double gamma, int tau);

}  // namespace sparsecv
