#include "sparsecv/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "sparsecv/errors.hpp"
#include "sparsecv/log.hpp"

namespace sparsecv {

namespace {

// Decreasing secular function sum_i num_i / (d_i + mu)^2 = target, solved for
// mu in (lo, hi) by bisection; all num_i >= 0.
double solve_secular(const std::vector<double>& num,
                     const std::vector<double>& d, double target, double lo,
                     double hi) {
  auto phi = [&](double mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) {
      const double den = d[i] + mu;
      s += num[i] / (den * den);
    }
    return s;
  };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (phi(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-14 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

PredictionInterval interval_at(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& center, const RegGram& G,
                               double slack) {
  PredictionInterval iv;
  iv.center = x.dot(center);
  const double q = quad_form_inv(G, x);
  iv.halfwidth = std::sqrt(std::max(0.0, slack) * q);
  iv.lo = iv.center - iv.halfwidth;
  iv.hi = iv.center + iv.halfwidth;
  return iv;
}

AggregatedBounds aggregated_at(const Eigen::MatrixXd& X_fold,
                               const Eigen::VectorXd& y_fold,
                               const Eigen::VectorXd& center, const RegGram& G,
                               double slack) {
  const Eigen::Index m = X_fold.rows();
  AggregatedBounds out;
  if (m == 0) return out;
  const double s = std::max(0.0, slack);

  // Whiten the ellipsoid: beta = center + L^{-T} w with ||w||^2 <= s turns
  // both extrema of ||y_fold - X_fold beta||^2 into trust-region subproblems
  // min/max ||r - M w||^2 over ||w|| <= sqrt(s), where M = X_fold L^{-T}.
  Eigen::VectorXd r = y_fold - X_fold * center;
  Eigen::MatrixXd M =
      G.L.triangularView<Eigen::Lower>().solve(X_fold.transpose()).transpose();
  Eigen::MatrixXd H = M * M.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  if (es.info() != Eigen::Success) {
    throw NumericError("aggregated_fold_bounds: eigendecomposition failed");
  }
  const Eigen::VectorXd lam_raw = es.eigenvalues();
  Eigen::VectorXd lam = lam_raw.cwiseMax(0.0);
  Eigen::VectorXd c = es.eigenvectors().transpose() * r;
  const double lmax = lam.maxCoeff();
  const double eig_eps = 1e-12 * std::max(1.0, lmax);
  const double rr = c.squaredNorm();

  if (s <= 0.0) {
    out.lo = rr;
    out.hi = rr;
    return out;
  }

  // Minimum: interior when the unconstrained least-squares correction fits in
  // the ball, otherwise on the boundary with multiplier mu > 0.
  {
    double interior_norm = 0.0;
    double fitted = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (lam[i] > eig_eps) {
        interior_norm += c[i] * c[i] / lam[i];
        fitted += c[i] * c[i];
      }
    }
    if (interior_norm <= s) {
      out.lo = std::max(0.0, rr - fitted);
    } else {
      std::vector<double> num(static_cast<std::size_t>(m)),
          den(static_cast<std::size_t>(m));
      double weighted = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        num[static_cast<std::size_t>(i)] = lam[i] * c[i] * c[i];
        den[static_cast<std::size_t>(i)] = lam[i];
        weighted += lam[i] * c[i] * c[i];
      }
      const double mu_hi = std::sqrt(weighted / s) + 1e-30;
      const double mu = solve_secular(num, den, s, 0.0, mu_hi);
      double value = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double ratio = mu / (lam[i] + mu);
        value += c[i] * c[i] * ratio * ratio;
      }
      out.lo = value;
    }
  }

  // Maximum: always on the boundary, multiplier mu > lmax; the hard case
  // (no residual component along the top eigenspace) caps mu at lmax and
  // spends the leftover budget on that eigenvector.
  {
    double c_top_sq = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (lam[i] >= lmax - eig_eps) c_top_sq += c[i] * c[i];
    }
    double psi_at_top = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (lam[i] < lmax - eig_eps) {
        const double den = lmax - lam[i];
        psi_at_top += lam[i] * c[i] * c[i] / (den * den);
      }
    }
    const bool hard = c_top_sq <= eig_eps * std::max(1.0, rr) &&
                      (lmax <= eig_eps || psi_at_top <= s);
    if (lmax <= eig_eps) {
      out.hi = rr;  // M ~ 0: predictions immune to the ellipsoid
    } else if (hard) {
      double value = lmax * (s - psi_at_top);
      for (Eigen::Index i = 0; i < m; ++i) {
        if (lam[i] < lmax - eig_eps) {
          const double ratio = lmax / (lmax - lam[i]);
          value += c[i] * c[i] * ratio * ratio;
        } else {
          value += c[i] * c[i];  // negligible; keeps the bound valid
        }
      }
      out.hi = value;
    } else {
      std::vector<double> num(static_cast<std::size_t>(m)),
          den(static_cast<std::size_t>(m));
      double weighted = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        num[static_cast<std::size_t>(i)] = lam[i] * c[i] * c[i];
        den[static_cast<std::size_t>(i)] = -lam[i];  // (mu - lam)^2
        weighted += lam[i] * c[i] * c[i];
      }
      const double mu_hi = lmax + std::sqrt(weighted / s) + 1e-30;
      const double mu =
          solve_secular(num, den, s, lmax * (1.0 + 1e-14) + 1e-300, mu_hi);
      double value = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double ratio = mu / (mu - lam[i]);
        value += c[i] * c[i] * ratio * ratio;
      }
      out.hi = value;
    }
  }
  return out;
}

}  // namespace

double ellipsoid_slack(const RelaxSolution& rel, double u_bar) {
  // Squared radius, in the ||X d|| seminorm, of a ball around rel.beta that
  // contains every cardinality-feasible solution with objective <= u_bar.
  // Two contributions.  Any such solution lies within u_bar - dual of the
  // exact relaxation minimizer: the penalty term equals its own linearization
  // gap there, so the shifted part of the curvature cancels and only the
  // data-fit quadratic survives.  And rel.beta itself sits within sqrt(gap)
  // of that minimizer, because the data-fit term alone is strongly convex in
  // this seminorm.  Both pieces vanish as the relaxation is solved exactly
  // and u_bar approaches the optimum.
  const double s = std::max(0.0, u_bar - rel.dual_value);
  const double g = std::max(0.0, rel.gap);
  const double r = std::sqrt(s) + std::sqrt(g);
  return r * r;
}

PredictionInterval prediction_interval(const Eigen::VectorXd& x,
                                       const RelaxSolution& rel,
                                       const RegGram& G, double slack) {
  return interval_at(x, rel.beta, G, slack);
}

PointErrorBounds pointwise_error_bounds(double y, const PredictionInterval& iv) {
  PointErrorBounds b;
  const double dlo = y - iv.lo;
  const double dhi = y - iv.hi;
  b.hi = std::max(dlo * dlo, dhi * dhi);
  if (y >= iv.lo && y <= iv.hi) {
    b.lo = 0.0;
  } else {
    b.lo = std::min(dlo * dlo, dhi * dhi);
  }
  return b;
}

AggregatedBounds aggregated_fold_bounds(const Eigen::MatrixXd& X_fold,
                                        const Eigen::VectorXd& y_fold,
                                        const RelaxSolution& rel,
                                        const RegGram& G, double slack) {
  return aggregated_at(X_fold, y_fold, rel.beta, G, slack);
}

double training_error_lower_bound(double v_bar, double u) { return v_bar - u; }

BoundCell compute_bounds(const Eigen::MatrixXd& X_fold,
                         const Eigen::VectorXd& y_fold,
                         const RelaxSolution& rel, const RegGram& G,
                         const QuadForm& qf, double v_bar, double v, double u,
                         bool aggregated, const Eigen::VectorXd* incumbent_beta) {
  BoundCell cell;
  const double slack = u - v;
  if (slack < -1e-9 * std::max(1.0, std::abs(u))) {
    log_warn("compute_bounds: incumbent ", u, " below slice lower bound ", v,
             "; clamping slack to zero");
  }
  const double r = std::sqrt(std::max(0.0, slack)) +
                   std::sqrt(std::max(0.0, rel.gap));
  const double s = r * r;

  // Estimate at the feasible incumbent when one is given; its training
  // objective is u, so it sits inside the certificate ellipsoid and the
  // estimate lands between the bounds.  The relaxation predictor is the
  // fallback, independent of which geometry carries the intervals.
  const Eigen::VectorXd& est_beta = incumbent_beta ? *incumbent_beta : rel.beta;
  double h_est = 0.0;
  for (Eigen::Index i = 0; i < X_fold.rows(); ++i) {
    const double res = y_fold[i] - X_fold.row(i).dot(est_beta);
    h_est += res * res;
  }

  // Certificate geometry.  Preferred: ball of squared radius s around
  // rel.beta in the ||X d|| seminorm (see ellipsoid_slack), which requires
  // the plain slice gram to be invertible.  Rank-deficient slices fall back
  // to the sublevel set of the shifted quadratic: every solution with
  // objective <= u satisfies ||beta - c||_A^2 <= u - q_min, where c is the
  // dense minimizer of that quadratic and q_min its value.  The fallback
  // needs no solver guarantees but is centered away from rel.beta.
  Eigen::VectorXd center = rel.beta;
  double s_used = s;
  RegGram plain;
  const RegGram* geom = nullptr;
  try {
    plain = factor_spd(qf.G, 0.0);
    geom = &plain;
  } catch (const NumericError&) {
    center = solve_spd(G, qf.r);
    const double q_min = qf.yy - qf.r.dot(center);
    s_used = std::max(0.0, u - q_min);
    geom = &G;
  }

  double lo_sum = 0.0, hi_sum = 0.0;
  for (Eigen::Index i = 0; i < X_fold.rows(); ++i) {
    PredictionInterval iv =
        interval_at(X_fold.row(i).transpose(), center, *geom, s_used);
    PointErrorBounds eb = pointwise_error_bounds(y_fold[i], iv);
    lo_sum += eb.lo;
    hi_sum += eb.hi;
  }

  double lo = lo_sum, hi = hi_sum;
  if (aggregated && X_fold.rows() > 0) {
    AggregatedBounds ab = aggregated_at(X_fold, y_fold, center, *geom, s_used);
    lo = std::max(lo, ab.lo);
    hi = std::min(hi, ab.hi);
  }

  cell.zeta_u = hi;
  cell.zeta_l = std::max({0.0, training_error_lower_bound(v_bar, u), lo});
  cell.h_estimate = h_est;
  cell.incumbent_value = u;
  cell.exact = false;
  return cell;
}

}  // namespace sparsecv
