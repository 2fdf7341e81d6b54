#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace sparsecv {

// Design matrix in the normal form the solvers assume: columns of X have mean
// zero and unit sample variance, y has mean zero.  The constants that were
// removed are kept so reports can translate back to the original scale.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;
  std::string response_name;
  Eigen::VectorXd col_mean;    // per-column mean of the raw data
  Eigen::VectorXd col_scale;   // per-column sd removed; 1.0 for flagged columns
  double y_mean = 0.0;
  std::vector<int> constant_columns;  // raw columns with ~zero variance, zeroed

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
};

// Partition of row indices 0..n-1 into k disjoint folds whose sizes differ by
// at most one.  k == n is leave-one-out.
struct FoldPartition {
  int k = 0;
  std::vector<std::vector<int>> folds;

  int n() const {
    int total = 0;
    for (const auto& f : folds) total += static_cast<int>(f.size());
    return total;
  }
};

struct SyntheticSpec {
  int n = 0;
  int p = 0;
  int tau_true = 0;
  double rho = 0.0;  // AR(1) correlation between adjacent features
  double nu = 1.0;   // signal-to-noise ratio Var(X beta) / Var(eps)
  std::uint64_t seed = 0;
};

struct SyntheticData {
  Dataset data;
  Eigen::VectorXd beta_true;  // coefficients on the raw (pre-standardized) scale
  double noise_sd = 0.0;
};

// Centers y and standardizes each column of X to unit sample variance.
// Columns with (near-)zero variance are zeroed out and recorded.
Dataset standardize(Eigen::MatrixXd X_raw, Eigen::VectorXd y_raw,
                    std::vector<std::string> feature_names,
                    std::string response_name);

// Reads a CSV file with a header row.  `response` selects the response column
// by name or by 0-based index; empty means the last column.  All remaining
// columns become features.  The result is standardized.
Dataset load_csv(const std::string& path, const std::string& response = "");

// Writes the standardized data back out; loading the file again reproduces
// the dataset (standardization is idempotent up to roundoff).
void write_csv(const std::string& path, const Dataset& data);

// Uniformly shuffles 0..n-1 (seeded) and cuts the result into k contiguous
// chunks.  Requires 2 <= k <= n.
FoldPartition make_folds(int n, int k, std::uint64_t seed);

// Draws rows x_i ~ N(0, Sigma) with Sigma_ab = rho^|a-b|, plants tau_true unit
// coefficients at equispaced indices, and adds Gaussian noise scaled so that
// Var(x' beta_true) / Var(eps) = nu.  Output is standardized.  The same spec
// always produces bit-identical data.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Rows of (X, y) belonging to the given fold.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> fold_rows(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
    const std::vector<int>& fold);

// Rows of (X, y) with the given fold removed.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> fold_complement(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
    const std::vector<int>& fold);

}  // namespace sparsecv
