#pragma once

// Reference implementations for the test suite.  Everything here favors
// directness over speed: exhaustive support enumeration, dense 1-D grids,
// and pivoted solves that share no code with the library under test.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

struct Fit {
  double value = std::numeric_limits<double>::infinity();
  std::vector<int> support;
  Eigen::VectorXd beta;
};

// Ridge fit restricted to a support, objective |y - X b|^2 + (g/2)|b|^2,
// evaluated from the definition rather than any algebraic shortcut.
inline Fit ridge_on(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    double gamma, const std::vector<int>& S) {
  Fit f;
  f.support = S;
  f.beta = Eigen::VectorXd::Zero(X.cols());
  if (S.empty()) {
    f.value = y.squaredNorm();
    return f;
  }
  const int s = static_cast<int>(S.size());
  Eigen::MatrixXd Xs(X.rows(), s);
  for (int c = 0; c < s; ++c) Xs.col(c) = X.col(S[static_cast<std::size_t>(c)]);
  Eigen::MatrixXd A = Xs.transpose() * Xs;
  A.diagonal().array() += gamma / 2.0;
  Eigen::VectorXd bs = A.fullPivLu().solve(Xs.transpose() * y);
  f.value = (y - Xs * bs).squaredNorm() + 0.5 * gamma * bs.squaredNorm();
  for (int c = 0; c < s; ++c) f.beta[S[static_cast<std::size_t>(c)]] = bs[c];
  return f;
}

// All index subsets of {0..p-1} with size exactly s, lexicographic order.
inline void for_each_subset(int p, int s,
                            const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> idx(static_cast<std::size_t>(s));
  std::iota(idx.begin(), idx.end(), 0);
  if (s == 0) {
    fn(idx);
    return;
  }
  if (s > p) return;
  for (;;) {
    fn(idx);
    int i = s - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == p - s + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < s; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
}

// Exhaustive best-subset solve: minimum ridge objective over all supports of
// size at most tau.  Ties keep the first support visited.
inline Fit enum_best(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     double gamma, int tau) {
  Fit best;
  const int p = static_cast<int>(X.cols());
  for (int s = 0; s <= std::min(tau, p); ++s) {
    for_each_subset(p, s, [&](const std::vector<int>& S) {
      Fit f = ridge_on(X, y, gamma, S);
      if (f.value < best.value) best = f;
    });
  }
  return best;
}

// All supports whose objective is within rel_tol of the optimum; used to
// check screening decisions against the complete optimal set.
inline std::vector<std::vector<int>> enum_optimal_supports(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double gamma, int tau,
    double rel_tol = 1e-9) {
  const Fit best = enum_best(X, y, gamma, tau);
  std::vector<std::vector<int>> out;
  const int p = static_cast<int>(X.cols());
  const double cut = best.value + rel_tol * std::max(1.0, std::abs(best.value));
  for (int s = 0; s <= std::min(tau, p); ++s) {
    for_each_subset(p, s, [&](const std::vector<int>& S) {
      if (ridge_on(X, y, gamma, S).value <= cut) out.push_back(S);
    });
  }
  return out;
}

// Exact CV cell: train by enumeration on the complement of `fold`, report the
// squared prediction error summed over the fold, plus the trained model.
struct CvCell {
  double h = 0.0;
  Fit fit;
};

inline CvCell cv_cell_exact(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const std::vector<int>& fold, double gamma, int tau) {
  const int n = static_cast<int>(X.rows());
  std::vector<char> in_fold(static_cast<std::size_t>(n), 0);
  for (int i : fold) in_fold[static_cast<std::size_t>(i)] = 1;
  std::vector<int> rest;
  for (int i = 0; i < n; ++i) {
    if (!in_fold[static_cast<std::size_t>(i)]) rest.push_back(i);
  }
  Eigen::MatrixXd Xc(static_cast<Eigen::Index>(rest.size()), X.cols());
  Eigen::VectorXd yc(static_cast<Eigen::Index>(rest.size()));
  for (std::size_t t = 0; t < rest.size(); ++t) {
    Xc.row(static_cast<Eigen::Index>(t)) = X.row(rest[t]);
    yc[static_cast<Eigen::Index>(t)] = y[rest[t]];
  }
  CvCell cell;
  cell.fit = enum_best(Xc, yc, gamma, tau);
  for (int i : fold) {
    const double r = y[i] - X.row(i).dot(cell.fit.beta);
    cell.h += r * r;
  }
  return cell;
}

// p=2 perspective-relaxation oracle.  The relaxed objective is non-increasing
// in each z_i, so the optimum saturates the budget (or the unit caps); a dense
// 1-D scan over the binding face with the closed-form 2x2 inner solve covers
// every case for tau < 2, and tau >= 2 is plain ridge at z = (1,1).
inline double persp_p2_min(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double gamma, double tau, int steps = 200000) {
  const double yy = y.squaredNorm();
  if (tau <= 0.0) return yy;
  const Eigen::MatrixXd G = X.transpose() * X;
  const Eigen::VectorXd r = X.transpose() * y;
  const auto eval = [&](double z1, double z2) {
    const bool a1 = z1 > 1e-14, a2 = z2 > 1e-14;
    if (!a1 && !a2) return yy;
    if (a1 != a2) {
      const int i = a1 ? 0 : 1;
      const double zi = a1 ? z1 : z2;
      const double d = G(i, i) + gamma / (2.0 * zi);
      const double b = r[i] / d;
      return yy - 2.0 * r[i] * b + d * b * b;
    }
    const double a = G(0, 0) + gamma / (2.0 * z1);
    const double c = G(1, 1) + gamma / (2.0 * z2);
    const double b01 = G(0, 1);
    const double det = a * c - b01 * b01;
    const double b1 = (c * r[0] - b01 * r[1]) / det;
    const double b2 = (a * r[1] - b01 * r[0]) / det;
    return yy - 2.0 * (r[0] * b1 + r[1] * b2) + a * b1 * b1 +
           2.0 * b01 * b1 * b2 + c * b2 * b2;
  };
  if (tau >= 2.0) return eval(1.0, 1.0);
  const double lo = std::max(0.0, tau - 1.0);
  const double hi = std::min(1.0, tau);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const double z1 = lo + (hi - lo) * i / steps;
    best = std::min(best, eval(z1, tau - z1));
  }
  return best;
}

// Central finite difference of a scalar function.
template <typename F>
double central_diff(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Random dense regression instance with AR(1)-correlated columns and a
// planted sparse signal; self-contained so the tests control every draw.
struct Instance {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

inline Instance random_instance(std::mt19937_64& rng, int n, int p,
                                double rho = 0.3, int s = 3,
                                double noise = 0.5) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd Sigma(p, p);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) Sigma(a, b) = std::pow(rho, std::abs(a - b));
  }
  Eigen::MatrixXd L = Sigma.llt().matrixL();
  Eigen::MatrixXd Z(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) Z(i, j) = nd(rng);
  }
  Instance inst;
  inst.X = Z * L.transpose();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int t = 0; t < std::min(s, p); ++t) {
    beta[(t * p) / std::max(1, std::min(s, p))] = (t % 2 == 0) ? 1.0 : -1.0;
  }
  inst.y.resize(n);
  for (int i = 0; i < n; ++i) inst.y[i] = inst.X.row(i).dot(beta) + noise * nd(rng);
  return inst;
}

}  // namespace oracle
