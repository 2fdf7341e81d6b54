#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sparsecv/bounds.hpp"
#include "sparsecv/dataset.hpp"
#include "sparsecv/mio.hpp"

namespace sparsecv {

struct SolveStats {
  long mio_count = 0;
  long node_count = 0;
  long relax_count = 0;
  double wall_time = 0.0;  // seconds
};

enum class TauSearchMode { kExact, kRelaxationOnly };

struct TauSearchOptions {
  double epsilon = 1e-4;  // relative gap target on the CV-error bounds
  long mio_budget = 0;    // max inner exact solves; 0 = unlimited
  TauSearchMode mode = TauSearchMode::kExact;
  int threads = 1;
  double relax_tol = 1e-6;
  bool aggregated_bounds = false;  // trust-region cell bounds (slower, tighter)
  MioOptions mio;                  // inner exact-solver controls
};

// One inner exact solve during the bound-refinement loop.
struct TauTraceEntry {
  int iteration = 0;
  int tau = 0;
  int fold = 0;
  double cell_value = 0.0;  // exact squared-error sum of the solved cell
  double lower = 0.0;       // global CV-error bounds after the solve (per-row scale)
  double upper = 0.0;
  long mio_count = 0;
};

// Cells are stored row-major as (tau - tau_min) * k + fold and carry
// unnormalized per-fold squared-error sums; lower/upper/h_by_tau are divided
// by n so they read as mean squared prediction error.
struct TauSearchResult {
  int tau_star = 0;
  double lower = 0.0;
  double upper = 0.0;
  bool converged = false;         // relative gap <= epsilon at exit
  bool budget_exhausted = false;  // stopped by mio_budget instead
  int tau_min = 0;
  int tau_max = 0;
  std::vector<BoundCell> cells;
  std::vector<double> h_by_tau;
  std::vector<char> tau_all_exact;
  SolveStats stats;
  std::vector<TauTraceEntry> trace;
};

// Bound-first selection of the sparsity level: relaxation bounds for every
// (tau, fold) cell, then exact solves only where the bounds leave the argmin
// ambiguous.  Stops at relative gap epsilon or when the budget runs out.
TauSearchResult tau_search(const Dataset& data, const FoldPartition& folds,
                           double gamma, int tau_min, int tau_max,
                           const TauSearchOptions& opts = {});

// Reference strategy: every (tau, fold) cell solved independently.
// exact=true uses the exact solver per cell; exact=false evaluates the same
// relaxation estimates the bound-first search starts from.
TauSearchResult grid_search_tau(const Dataset& data, const FoldPartition& folds,
                                double gamma, int tau_min, int tau_max,
                                bool exact, const TauSearchOptions& opts = {});

// Fixed-support CV error as a function of gamma, with its exact derivative
// (one extra SPD solve per fold).  Value is the unnormalized squared-error
// sum over all folds.
struct GammaObjective {
  double value = 0.0;
  double derivative = 0.0;
};
GammaObjective gamma_objective(const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y,
                               const FoldPartition& folds,
                               const std::vector<std::vector<int>>& supports,
                               double gamma);

// Minimizes the fixed-support CV error over gamma in [gamma_lo, gamma_hi]:
// derivative root-finding (secant with bisection safeguard) from gamma_prev
// plus log-spaced restarts, keeping the best value found.  Returns gamma_prev
// unless a strictly better candidate exists.
double optimize_gamma(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const FoldPartition& folds,
                      const std::vector<std::vector<int>>& supports,
                      double gamma_prev, double gamma_lo = 1e-3,
                      double gamma_hi = 10.0);

struct CdSweep {
  int sweep = 0;
  double gamma = 0.0;
  int tau = 0;
  double h = 0.0;  // per-row scale
  bool tau_changed = false;
  bool gamma_changed = false;
};

struct CdOptions {
  CdOptions() { tau.mode = TauSearchMode::kRelaxationOnly; }
  int max_sweeps = 20;
  double revisit_log_tol = 1e-6;  // |log gamma - log gamma'| for cycle detection
  double gamma_lo = 1e-3;
  double gamma_hi = 10.0;
  TauSearchOptions tau;
};

struct CdState {
  double gamma_t = 0.0;
  int tau_t = 0;
  double h_t = 0.0;
  std::vector<CdSweep> history;
  std::string status = "improving";  // "cycled" | "converged" | "budget" after exit
  SolveStats stats;
};

// Alternates a sparsity step (bound-first search at fixed gamma) with a ridge
// step (fixed-support gamma optimization), accepting only non-increasing CV
// error; returns the best state visited.
CdState coordinate_descent(const Dataset& data, const FoldPartition& folds,
                           double gamma0, int tau_min, int tau_max,
                           const CdOptions& opts = {});

// Largest t >= 2 with t * ln(t) <= min(n, p), capped at p.
int tau_max_default(int n, int p);

}  // namespace sparsecv
