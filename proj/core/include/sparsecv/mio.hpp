#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sparsecv/relax.hpp"

namespace sparsecv {

// Exact solution of min ||y - X b||^2 + (gamma/2)||b||^2 s.t. ||b||_0 <= tau.
// upper is the incumbent objective, lower a certified bound;
// gap = (upper - lower) / max(1, |upper|).
struct MioSolution {
  Eigen::VectorXd beta;
  Eigen::VectorXd z;  // 0/1 support indicator
  std::vector<int> support;
  double upper = 0.0;
  double lower = 0.0;
  double gap = 0.0;
  long nodes = 0;
  long relax_solves = 0;
  std::string status;  // "optimal" | "gap-limit" | "time-limit"
};

struct MioOptions {
  double gap_tol = 1e-6;
  double time_limit = 0.0;  // seconds; 0 disables the limit
  long node_limit = 0;      // 0 disables the limit
  bool screening = true;
  bool greedy_warm_start = true;  // round node relaxations into incumbents
  double relax_tol = 1e-6;        // tolerance for node relaxations
  Eigen::VectorXd warm_beta;      // optional initial incumbent (empty = none)
};

// Ridge restricted to the given columns; beta is full-length with zeros off
// the support.
struct SupportFit {
  Eigen::VectorXd beta;
  double value = 0.0;
};
SupportFit solve_ridge_on_support(const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y, double gamma,
                                  const std::vector<int>& support);

// Same solve through a precomputed quadratic form (value = yy - b_S' beta_S).
SupportFit solve_ridge_on_support(const QuadForm& qf, double gamma,
                                  const std::vector<int>& support);

// Variable fixing from a relaxation lower bound and an incumbent value f_bar:
// coordinates whose forced inclusion/exclusion provably exceeds f_bar.
struct ScreenResult {
  std::vector<int> fixed_zero;
  std::vector<int> fixed_one;
};
ScreenResult screen(const RelaxSolution& rel, double f_bar, double gamma,
                    int tau);

MioSolution solve_mio(const QuadForm& qf, double gamma, int tau,
                      const MioOptions& opts = {});

MioSolution solve_mio(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      double gamma, int tau, const MioOptions& opts = {});

}  // namespace sparsecv
