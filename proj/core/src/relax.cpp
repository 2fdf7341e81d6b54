#include "sparsecv/relax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sparsecv/errors.hpp"
#include "sparsecv/log.hpp"
#include "sparsecv/mio.hpp"

namespace sparsecv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

WaterFill persp_penalty(const Eigen::VectorXd& beta, int tau) {
  const Eigen::Index p = beta.size();
  WaterFill out;
  out.z = Eigen::VectorXd::Zero(p);
  if (tau <= 0) {
    out.value = beta.isZero(0.0) ? 0.0 : kInf;
    return out;
  }

  std::vector<double> a;
  a.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) {
    if (beta[i] != 0.0) a.push_back(std::abs(beta[i]));
  }
  const int nnz = static_cast<int>(a.size());
  if (nnz <= tau) {
    for (Eigen::Index i = 0; i < p; ++i) out.z[i] = beta[i] != 0.0 ? 1.0 : 0.0;
    out.value = beta.squaredNorm();
    return out;
  }

  std::sort(a.begin(), a.end(), std::greater<double>());
  // Budget binds: z_i = min(1, |beta_i| / t) with the threshold t chosen so
  // that sum z = tau.  Scan the number m of coordinates capped at z = 1.
  double tail = std::accumulate(a.begin(), a.end(), 0.0);
  double head_sq = 0.0;
  double t = 0.0;
  for (int m = 0; m < tau; ++m) {
    t = tail / static_cast<double>(tau - m);
    if (t >= a[static_cast<std::size_t>(m)]) {
      out.value = head_sq + tail * t;
      for (Eigen::Index i = 0; i < p; ++i) {
        out.z[i] = std::min(1.0, std::abs(beta[i]) / t);
      }
      return out;
    }
    head_sq += a[static_cast<std::size_t>(m)] * a[static_cast<std::size_t>(m)];
    tail -= a[static_cast<std::size_t>(m)];
  }
  // m = tau - 1 always satisfies t >= a[m]; reaching here means NaNs got in.
  throw NumericError("persp_penalty: threshold scan failed (non-finite input?)");
}

QuadForm make_quad_form(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  QuadForm qf;
  const Eigen::Index p = X.cols();
  qf.G = Eigen::MatrixXd::Zero(p, p);
  qf.G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  qf.G.triangularView<Eigen::StrictlyUpper>() =
      qf.G.triangularView<Eigen::StrictlyLower>().transpose();
  qf.r = X.transpose() * y;
  qf.yy = y.squaredNorm();
  qf.lmax = sym_lmax(qf.G);
  return qf;
}

double sym_lmax(const Eigen::MatrixXd& S) {
  if (S.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

namespace {

// Subproblem on the active coordinates [free..., one...]:
//   min w'G w - 2 r'w + yy + (gamma/2) * (Omega_tauf(w_head) + ||w_tail||^2)
struct ActiveProblem {
  Eigen::MatrixXd G;
  Eigen::VectorXd r;
  double yy = 0.0;
  double lmax = 0.0;
  double gamma = 0.0;
  int n_free = 0;
  int tau_free = 0;
};

// Exact prox of step * (gamma/2) * Omega_tauf on the free head plus plain
// ridge shrinkage on the pinned tail.
Eigen::VectorXd prox_step(const ActiveProblem& ap, const Eigen::VectorXd& v,
                          double step) {
  const double c = step * ap.gamma / 2.0;  // 2c = step * gamma
  const Eigen::Index total = v.size();
  Eigen::VectorXd w(total);
  for (Eigen::Index i = ap.n_free; i < total; ++i) {
    w[i] = v[i] / (1.0 + 2.0 * c);
  }
  const int nf = ap.n_free;
  if (nf == 0) return w;
  if (ap.tau_free <= 0) {
    w.head(nf).setZero();
    return w;
  }

  int nnz = 0;
  for (int i = 0; i < nf; ++i) {
    if (v[i] != 0.0) ++nnz;
  }
  if (nnz <= ap.tau_free) {
    for (int i = 0; i < nf; ++i) {
      w[i] = v[i] == 0.0 ? 0.0 : v[i] / (1.0 + 2.0 * c);
    }
    return w;
  }

  // Allocation z_i(s) = clip(|v_i| s - 2c, 0, 1) with s chosen so the budget
  // is met exactly; piecewise-linear in s, so walk the breakpoints.
  std::vector<double> av;
  av.reserve(static_cast<std::size_t>(nnz));
  std::vector<double> events;
  events.reserve(2 * static_cast<std::size_t>(nnz));
  for (int i = 0; i < nf; ++i) {
    if (v[i] == 0.0) continue;
    const double a = std::abs(v[i]);
    av.push_back(a);
    events.push_back(2.0 * c / a);          // z_i starts growing
    events.push_back((1.0 + 2.0 * c) / a);  // z_i hits its cap
  }
  std::sort(events.begin(), events.end());

  // The budget is nondecreasing in s, so the first segment whose right
  // endpoint reaches the target brackets a root.  Both the endpoint value
  // and the segment coefficients are recomputed directly per candidate
  // segment; a running sum across events cancels catastrophically when the
  // weights span many orders of magnitude, which is enough to skip a root
  // sitting on a breakpoint (the budget can plateau exactly at the target).
  const double target = static_cast<double>(ap.tau_free);
  double s_star = events.back();
  for (std::size_t e = 0; e < events.size(); ++e) {
    const double seg_lo = events[e];
    const bool last = e + 1 == events.size();
    const double seg_hi = last ? seg_lo : events[e + 1];
    double at_hi = 0.0;
    for (const double a : av) at_hi += std::clamp(a * seg_hi - 2.0 * c, 0.0, 1.0);
    if (at_hi < target && !last) continue;
    double W = 0.0;      // sum |v_i| over active (started, not capped)
    double m_act = 0.0;  // count active
    double n_cap = 0.0;  // count capped
    for (const double a : av) {
      if ((1.0 + 2.0 * c) / a <= seg_lo) {
        n_cap += 1.0;
      } else if (2.0 * c / a <= seg_lo) {
        W += a;
        m_act += 1.0;
      }
    }
    s_star = W > 0.0 ? std::clamp((target + 2.0 * c * m_act - n_cap) / W,
                                  seg_lo, seg_hi)
                     : seg_lo;
    break;
  }
  for (int i = 0; i < nf; ++i) {
    if (v[i] == 0.0) {
      w[i] = 0.0;
      continue;
    }
    const double z =
        std::clamp(std::abs(v[i]) * s_star - 2.0 * c, 0.0, 1.0);
    w[i] = z <= 0.0 ? 0.0 : v[i] * z / (z + 2.0 * c);
  }
  return w;
}

double penalty_value(const ActiveProblem& ap, const Eigen::VectorXd& w) {
  const Eigen::Index total = w.size();
  double pen = w.tail(total - ap.n_free).squaredNorm();
  if (ap.n_free > 0) {
    pen += persp_penalty(w.head(ap.n_free), ap.tau_free).value;
  }
  return ap.gamma / 2.0 * pen;
}

double fit_value(const ActiveProblem& ap, const Eigen::VectorXd& w) {
  return w.dot(ap.G * w) - 2.0 * ap.r.dot(w) + ap.yy;
}

// Fenchel lower bound from the data-fit gradient g = 2(G w - r): the
// conjugate of the penalty spends the z-budget on the tau_free largest
// squared gradient entries of the free head.
double dual_value(const ActiveProblem& ap, const Eigen::VectorXd& w,
                  const Eigen::VectorXd& g, double fit) {
  const Eigen::Index total = w.size();
  double hstar = g.tail(total - ap.n_free).squaredNorm();
  if (ap.n_free > 0) {
    const int nf = ap.n_free;
    if (ap.tau_free >= nf) {
      hstar += g.head(nf).squaredNorm();
    } else if (ap.tau_free > 0) {
      std::vector<double> sq(static_cast<std::size_t>(nf));
      for (int i = 0; i < nf; ++i) sq[static_cast<std::size_t>(i)] = g[i] * g[i];
      std::nth_element(sq.begin(), sq.begin() + (ap.tau_free - 1), sq.end(),
                       std::greater<double>());
      for (int i = 0; i < ap.tau_free; ++i) hstar += sq[static_cast<std::size_t>(i)];
    }
  }
  hstar /= 2.0 * ap.gamma;
  return -2.0 * (w.dot(ap.r) - ap.yy) - fit - hstar;
}

struct ActiveResult {
  Eigen::VectorXd w;
  double primal = 0.0;
  double dual = 0.0;
  int iterations = 0;
  bool converged = true;
};

// Plain ridge on all active coordinates; used when the budget cannot bind.
ActiveResult solve_active_ridge(const ActiveProblem& ap) {
  ActiveResult res;
  const Eigen::Index total = ap.G.rows();
  Eigen::MatrixXd A = ap.G;
  A.diagonal().array() += ap.gamma / 2.0;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    throw NumericError("perspective ridge subproblem: factorization failed");
  }
  res.w = llt.solve(ap.r);
  res.primal = ap.yy - ap.r.dot(res.w);
  res.dual = res.primal;
  (void)total;
  return res;
}

ActiveResult solve_active_fista(const ActiveProblem& ap,
                                const PerspOptions& opts,
                                const Eigen::VectorXd& w0) {
  ActiveResult res;
  const Eigen::Index total = ap.G.rows();
  const double L = std::max(2.0 * ap.lmax, 1e-12);
  const double step = 1.0 / L;
  const int cap = opts.max_iter > 0
                      ? opts.max_iter
                      : 50 * static_cast<int>(total) + 10000;

  Eigen::VectorXd x = w0;
  double fx = fit_value(ap, x);
  double Px = fx + penalty_value(ap, x);
  Eigen::VectorXd g = 2.0 * (ap.G * x - ap.r);
  double dual_best = dual_value(ap, x, g, fx);

  Eigen::VectorXd yv = x;
  double t = 1.0;
  int k = 0;
  bool converged = false;
  for (; k < cap; ++k) {
    double rel_gap = (Px - dual_best) / std::max(1.0, std::abs(Px));
    if (rel_gap <= opts.tol) {
      converged = true;
      break;
    }
    Eigen::VectorXd gy = 2.0 * (ap.G * yv - ap.r);
    Eigen::VectorXd xn = prox_step(ap, yv - step * gy, step);
    double fxn = fit_value(ap, xn);
    double Pn = fxn + penalty_value(ap, xn);
    Eigen::VectorXd gn = 2.0 * (ap.G * xn - ap.r);
    dual_best = std::max(dual_best, dual_value(ap, xn, gn, fxn));
    if (Pn > Px) {
      // Momentum overshot; restart from the last monotone iterate.
      t = 1.0;
      yv = x;
      continue;
    }
    const double t_new = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    yv = xn + ((t - 1.0) / t_new) * (xn - x);
    x = std::move(xn);
    Px = Pn;
    t = t_new;
  }
  res.w = std::move(x);
  res.primal = Px;
  res.dual = std::min(dual_best, Px);
  res.iterations = k;
  res.converged = converged;
  if (!converged) {
    const double rel_gap = (Px - dual_best) / std::max(1.0, std::abs(Px));
    if (rel_gap > 100.0 * opts.tol) {
      log_warn("solve_perspective: iteration cap ", cap,
               " hit with relative gap ", rel_gap, " (target ", opts.tol, ")");
    }
  }
  return res;
}

}  // namespace

RelaxSolution solve_perspective(const QuadForm& qf, double gamma, int tau,
                                const PinSet& pins, const PerspOptions& opts) {
  const Eigen::Index p = qf.G.rows();
  if (!(gamma > 0.0)) throw ConfigError("solve_perspective: gamma must be positive");
  if (tau < 0) throw ConfigError("solve_perspective: tau must be nonnegative");
  const int n_free = static_cast<int>(pins.free_idx.size());
  const int n_one = static_cast<int>(pins.one_idx.size());
  const int tau_free = tau - n_one;
  if (tau_free < 0) {
    throw InternalError("solve_perspective: more pinned-one coordinates than tau");
  }

  RelaxSolution sol;
  sol.beta = Eigen::VectorXd::Zero(p);
  sol.z = Eigen::VectorXd::Zero(p);

  std::vector<int> active;
  active.reserve(static_cast<std::size_t>(n_free + n_one));
  // Free head first, pinned tail second; drop free coordinates when they
  // cannot receive any budget.
  const bool free_usable = tau_free > 0;
  if (free_usable) {
    active.insert(active.end(), pins.free_idx.begin(), pins.free_idx.end());
  }
  active.insert(active.end(), pins.one_idx.begin(), pins.one_idx.end());

  const int na = static_cast<int>(active.size());
  if (na == 0) {
    sol.primal_value = qf.yy;
    sol.dual_value = qf.yy;
    sol.gap = 0.0;
    return sol;
  }

  ActiveProblem ap;
  ap.G.resize(na, na);
  ap.r.resize(na);
  for (int i = 0; i < na; ++i) {
    ap.r[i] = qf.r[active[static_cast<std::size_t>(i)]];
    for (int j = 0; j < na; ++j) {
      ap.G(i, j) = qf.G(active[static_cast<std::size_t>(i)],
                        active[static_cast<std::size_t>(j)]);
    }
  }
  ap.yy = qf.yy;
  ap.lmax = qf.lmax;  // upper bound on the submatrix spectrum
  ap.gamma = gamma;
  ap.n_free = free_usable ? n_free : 0;
  ap.tau_free = free_usable ? tau_free : 0;

  ActiveResult ar;
  if (ap.n_free == 0 || ap.tau_free >= ap.n_free) {
    ar = solve_active_ridge(ap);
  } else {
    Eigen::VectorXd w0 = Eigen::VectorXd::Zero(na);
    if (opts.warm_beta.size() == p) {
      for (int i = 0; i < na; ++i) {
        w0[i] = opts.warm_beta[active[static_cast<std::size_t>(i)]];
      }
    }
    ar = solve_active_fista(ap, opts, w0);
  }

  for (int i = 0; i < na; ++i) {
    sol.beta[active[static_cast<std::size_t>(i)]] = ar.w[i];
  }
  if (ap.n_free > 0 && ap.tau_free < ap.n_free) {
    // Binding budget: free head carries the optimal allocation given beta,
    // pinned tail carries z = 1.
    WaterFill wf = persp_penalty(ar.w.head(ap.n_free), ap.tau_free);
    for (int i = 0; i < ap.n_free; ++i) {
      sol.z[active[static_cast<std::size_t>(i)]] = wf.z[i];
    }
    for (int i = ap.n_free; i < na; ++i) {
      sol.z[active[static_cast<std::size_t>(i)]] = 1.0;
    }
  } else {
    // Ridge path: the budget cannot bind, z = 1 on every active coordinate.
    for (int i = 0; i < na; ++i) {
      sol.z[active[static_cast<std::size_t>(i)]] = 1.0;
    }
  }

  sol.primal_value = ar.primal;
  sol.dual_value = std::min(ar.dual, ar.primal);
  sol.gap = sol.primal_value - sol.dual_value;
  sol.iterations = ar.iterations;
  sol.converged = ar.converged;
  return sol;
}

RelaxSolution solve_perspective(const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y, double gamma,
                                int tau, const PerspOptions& opts) {
  QuadForm qf = make_quad_form(X, y);
  PinSet pins;
  pins.free_idx.resize(static_cast<std::size_t>(X.cols()));
  std::iota(pins.free_idx.begin(), pins.free_idx.end(), 0);
  return solve_perspective(qf, gamma, tau, pins, opts);
}

namespace {

std::vector<int> top_tau_support(const RelaxSolution& rel, int tau) {
  const Eigen::Index p = rel.beta.size();
  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (rel.z[a] != rel.z[b]) return rel.z[a] > rel.z[b];
    const double ba = std::abs(rel.beta[a]), bb = std::abs(rel.beta[b]);
    if (ba != bb) return ba > bb;
    return a < b;
  });
  const int s = std::min<int>(tau, static_cast<int>(p));
  std::vector<int> support(order.begin(), order.begin() + s);
  std::sort(support.begin(), support.end());
  return support;
}

}  // namespace

RoundedSolution greedy_round(const RelaxSolution& rel, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, double gamma, int tau) {
  std::vector<int> support = top_tau_support(rel, tau);
  SupportFit fit = solve_ridge_on_support(X, y, gamma, support);
  RoundedSolution out;
  out.beta = std::move(fit.beta);
  out.support = std::move(support);
  out.value = fit.value;
  return out;
}

RoundedSolution greedy_round(const RelaxSolution& rel, const QuadForm& qf,
                             double gamma, int tau) {
  std::vector<int> support = top_tau_support(rel, tau);
  SupportFit fit = solve_ridge_on_support(qf, gamma, support);
  RoundedSolution out;
  out.beta = std::move(fit.beta);
  out.support = std::move(support);
  out.value = fit.value;
  return out;
}

}  // namespace sparsecv
