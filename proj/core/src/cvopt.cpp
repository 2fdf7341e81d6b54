#include "sparsecv/cvopt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "sparsecv/errors.hpp"
#include "sparsecv/log.hpp"
#include "sparsecv/parallel.hpp"

namespace sparsecv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct SliceCtx {
  QuadForm qf;
  RegGram rg;
  Eigen::MatrixXd Xf;
  Eigen::VectorXd yf;
};

struct CvContext {
  QuadForm full;
  std::vector<SliceCtx> slices;
  PinSet all_free;
};

void check_partition(const Dataset& data, const FoldPartition& folds) {
  if (folds.k < 2 || static_cast<std::size_t>(folds.k) != folds.folds.size()) {
    throw ConfigError("fold partition: need k >= 2 folds");
  }
  std::vector<char> seen(static_cast<std::size_t>(data.n()), 0);
  int total = 0;
  for (const auto& fold : folds.folds) {
    for (int i : fold) {
      if (i < 0 || i >= data.n() || seen[static_cast<std::size_t>(i)]) {
        throw ConfigError("fold partition does not partition the rows");
      }
      seen[static_cast<std::size_t>(i)] = 1;
      ++total;
    }
  }
  if (total != data.n()) {
    throw ConfigError("fold partition does not cover all rows");
  }
}

CvContext build_cv_context(const Dataset& data, const FoldPartition& folds,
                           double gamma, int threads) {
  CvContext ctx;
  ctx.full = make_quad_form(data.X, data.y);
  ctx.all_free.free_idx.resize(static_cast<std::size_t>(data.p()));
  std::iota(ctx.all_free.free_idx.begin(), ctx.all_free.free_idx.end(), 0);
  RegGram rg_full = build_reg_gram(data.X, gamma);
  const std::size_t k = folds.folds.size();
  ctx.slices.resize(k);
  parallel_for(k, threads, [&](std::size_t j) {
    SliceCtx& sc = ctx.slices[j];
    auto [Xf, yf] = fold_rows(data.X, data.y, folds.folds[j]);
    sc.qf.G = ctx.full.G;
    sc.qf.G.selfadjointView<Eigen::Lower>().rankUpdate(Xf.transpose(), -1.0);
    sc.qf.G.triangularView<Eigen::StrictlyUpper>() =
        sc.qf.G.triangularView<Eigen::StrictlyLower>().transpose();
    sc.qf.r = ctx.full.r - Xf.transpose() * yf;
    sc.qf.yy = ctx.full.yy - yf.squaredNorm();
    sc.qf.lmax = sym_lmax(sc.qf.G);
    sc.rg = downdate_fold(rg_full, Xf);
    sc.Xf = std::move(Xf);
    sc.yf = std::move(yf);
  });
  return ctx;
}

void validate_tau_inputs(const Dataset& data, const FoldPartition& folds,
                         double gamma, int tau_min, int tau_max,
                         const TauSearchOptions& opts) {
  if (!(gamma > 0.0)) throw ConfigError("tau search: gamma must be positive");
  if (tau_min < 1 || tau_min > tau_max || tau_max > data.p()) {
    throw ConfigError("tau search: need 1 <= tau_min <= tau_max <= p");
  }
  if (opts.epsilon < 0.0) throw ConfigError("tau search: epsilon must be >= 0");
  if (opts.mio_budget < 0) throw ConfigError("tau search: mio_budget must be >= 0");
  check_partition(data, folds);
}

// Relaxation bounds for every cell, plus full-data relaxation values vbar.
// Returns the incumbent coefficient vectors alongside the cells so exact
// solves can warm-start from them.
void run_bound_pass(const CvContext& ctx, double gamma, int tau_min,
                    int tau_max, const TauSearchOptions& opts,
                    std::vector<BoundCell>& cells,
                    std::vector<Eigen::VectorXd>& inc_beta,
                    SolveStats& stats) {
  const int R = tau_max - tau_min + 1;
  const std::size_t k = ctx.slices.size();
  cells.assign(static_cast<std::size_t>(R) * k, BoundCell{});
  inc_beta.assign(static_cast<std::size_t>(R) * k, Eigen::VectorXd{});

  std::vector<double> vbar(static_cast<std::size_t>(R));
  PerspOptions popts;
  popts.tol = opts.relax_tol;
  for (int t = 0; t < R; ++t) {
    RelaxSolution rel =
        solve_perspective(ctx.full, gamma, tau_min + t, ctx.all_free, popts);
    vbar[static_cast<std::size_t>(t)] = rel.dual_value;
    popts.warm_beta = rel.beta;
  }

  parallel_for(k, opts.threads, [&](std::size_t j) {
    const SliceCtx& sc = ctx.slices[j];
    PerspOptions sopts;
    sopts.tol = opts.relax_tol;
    for (int t = 0; t < R; ++t) {
      const int tau = tau_min + t;
      RelaxSolution rel =
          solve_perspective(sc.qf, gamma, tau, ctx.all_free, sopts);
      sopts.warm_beta = rel.beta;
      RoundedSolution round = greedy_round(rel, sc.qf, gamma, tau);
      BoundCell cell = compute_bounds(sc.Xf, sc.yf, rel, sc.rg, sc.qf,
                                      vbar[static_cast<std::size_t>(t)],
                                      rel.dual_value, round.value,
                                      opts.aggregated_bounds, &round.beta);
      cell.tau = tau;
      cell.fold = static_cast<int>(j);
      cell.support = round.support;
      const std::size_t idx = static_cast<std::size_t>(t) * k + j;
      cells[idx] = std::move(cell);
      inc_beta[idx] = std::move(round.beta);
    }
  });
  stats.relax_count += static_cast<long>(R) * static_cast<long>(k + 1);
}

// Certified per-tau score used for the returned argmin: per-cell estimates
// clamped into [zeta_l, zeta_u] so the selection respects the bounds.
std::vector<double> clamped_scores(const std::vector<BoundCell>& cells, int R,
                                   std::size_t k) {
  std::vector<double> score(static_cast<std::size_t>(R), 0.0);
  for (int t = 0; t < R; ++t) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const BoundCell& c = cells[static_cast<std::size_t>(t) * k + j];
      s += std::clamp(c.h_estimate, c.zeta_l, c.zeta_u);
    }
    score[static_cast<std::size_t>(t)] = s;
  }
  return score;
}

void finalize_result(TauSearchResult& res, const std::vector<BoundCell>& cells,
                     int tau_min, int tau_max, std::size_t k, double n) {
  const int R = tau_max - tau_min + 1;
  std::vector<double> score = clamped_scores(cells, R, k);
  int best_t = 0;
  for (int t = 1; t < R; ++t) {
    if (score[static_cast<std::size_t>(t)] < score[static_cast<std::size_t>(best_t)]) {
      best_t = t;
    }
  }
  res.tau_star = tau_min + best_t;
  res.tau_min = tau_min;
  res.tau_max = tau_max;
  res.h_by_tau.resize(static_cast<std::size_t>(R));
  res.tau_all_exact.assign(static_cast<std::size_t>(R), 1);
  double lb = kInf, ub = kInf;
  for (int t = 0; t < R; ++t) {
    res.h_by_tau[static_cast<std::size_t>(t)] = score[static_cast<std::size_t>(t)] / n;
    double sl = 0.0, su = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const BoundCell& c = cells[static_cast<std::size_t>(t) * k + j];
      sl += c.zeta_l;
      su += c.zeta_u;
      if (!c.exact) res.tau_all_exact[static_cast<std::size_t>(t)] = 0;
    }
    lb = std::min(lb, sl);
    ub = std::min(ub, su);
  }
  res.lower = lb / n;
  res.upper = ub / n;
}

}  // namespace

TauSearchResult tau_search(const Dataset& data, const FoldPartition& folds,
                           double gamma, int tau_min, int tau_max,
                           const TauSearchOptions& opts) {
  validate_tau_inputs(data, folds, gamma, tau_min, tau_max, opts);
  const auto t0 = Clock::now();
  const int R = tau_max - tau_min + 1;
  const std::size_t k = folds.folds.size();
  const double n = static_cast<double>(data.n());

  CvContext ctx = build_cv_context(data, folds, gamma, opts.threads);
  TauSearchResult res;
  std::vector<Eigen::VectorXd> inc_beta;
  run_bound_pass(ctx, gamma, tau_min, tau_max, opts, res.cells, inc_beta,
                 res.stats);

  std::vector<double> lbs(static_cast<std::size_t>(R), 0.0);
  std::vector<double> ubs(static_cast<std::size_t>(R), 0.0);
  auto refresh_sums = [&](int t) {
    double sl = 0.0, su = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const BoundCell& c = res.cells[static_cast<std::size_t>(t) * k + j];
      sl += c.zeta_l;
      su += c.zeta_u;
    }
    lbs[static_cast<std::size_t>(t)] = sl;
    ubs[static_cast<std::size_t>(t)] = su;
  };
  for (int t = 0; t < R; ++t) refresh_sums(t);

  if (opts.mode == TauSearchMode::kExact) {
    int iteration = 0;
    for (;;) {
      const double lb = *std::min_element(lbs.begin(), lbs.end());
      const double ub = *std::min_element(ubs.begin(), ubs.end());
      const double gap = (ub - lb) / std::max(ub, 1e-12);
      if (gap <= opts.epsilon) {
        res.converged = true;
        break;
      }
      if (opts.mio_budget > 0 && res.stats.mio_count >= opts.mio_budget) {
        res.budget_exhausted = true;
        break;
      }
      int t_star = 0;
      for (int t = 1; t < R; ++t) {
        if (lbs[static_cast<std::size_t>(t)] < lbs[static_cast<std::size_t>(t_star)]) {
          t_star = t;
        }
      }
      int j_star = -1;
      double best_width = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const BoundCell& c = res.cells[static_cast<std::size_t>(t_star) * k + j];
        if (c.exact) continue;
        const double w = c.zeta_u - c.zeta_l;
        if (j_star < 0 || w > best_width) {
          j_star = static_cast<int>(j);
          best_width = w;
        }
      }
      if (j_star < 0) {
        log_warn("tau_search: no refinable cell at tau ", tau_min + t_star,
                 " despite open gap; stopping");
        break;
      }

      const std::size_t idx =
          static_cast<std::size_t>(t_star) * k + static_cast<std::size_t>(j_star);
      MioOptions mopts = opts.mio;
      mopts.relax_tol = opts.relax_tol;
      mopts.warm_beta = inc_beta[idx];
      MioSolution sol =
          solve_mio(ctx.slices[static_cast<std::size_t>(j_star)].qf, gamma,
                    tau_min + t_star, mopts);
      const SliceCtx& sc = ctx.slices[static_cast<std::size_t>(j_star)];
      const double exact_err = (sc.yf - sc.Xf * sol.beta).squaredNorm();

      BoundCell& cell = res.cells[idx];
      cell.zeta_l = exact_err;
      cell.zeta_u = exact_err;
      cell.h_estimate = exact_err;
      cell.incumbent_value = sol.upper;
      cell.support = sol.support;
      cell.exact = true;
      inc_beta[idx] = sol.beta;

      res.stats.mio_count += 1;
      res.stats.node_count += sol.nodes;
      res.stats.relax_count += sol.relax_solves;
      refresh_sums(t_star);

      ++iteration;
      TauTraceEntry te;
      te.iteration = iteration;
      te.tau = tau_min + t_star;
      te.fold = j_star;
      te.cell_value = exact_err;
      te.lower = *std::min_element(lbs.begin(), lbs.end()) / n;
      te.upper = *std::min_element(ubs.begin(), ubs.end()) / n;
      te.mio_count = res.stats.mio_count;
      res.trace.push_back(te);
    }
  } else {
    const double lb = *std::min_element(lbs.begin(), lbs.end());
    const double ub = *std::min_element(ubs.begin(), ubs.end());
    res.converged = (ub - lb) / std::max(ub, 1e-12) <= opts.epsilon;
  }

  finalize_result(res, res.cells, tau_min, tau_max, k, n);
  res.stats.wall_time = seconds_since(t0);
  return res;
}

TauSearchResult grid_search_tau(const Dataset& data, const FoldPartition& folds,
                                double gamma, int tau_min, int tau_max,
                                bool exact, const TauSearchOptions& opts) {
  if (!exact) {
    TauSearchOptions ropts = opts;
    ropts.mode = TauSearchMode::kRelaxationOnly;
    return tau_search(data, folds, gamma, tau_min, tau_max, ropts);
  }
  validate_tau_inputs(data, folds, gamma, tau_min, tau_max, opts);
  const auto t0 = Clock::now();
  const int R = tau_max - tau_min + 1;
  const std::size_t k = folds.folds.size();
  const double n = static_cast<double>(data.n());

  CvContext ctx = build_cv_context(data, folds, gamma, opts.threads);
  TauSearchResult res;
  const std::size_t total = static_cast<std::size_t>(R) * k;
  res.cells.assign(total, BoundCell{});
  std::vector<long> nodes(total, 0), relaxes(total, 0);

  parallel_for(total, opts.threads, [&](std::size_t idx) {
    const int t = static_cast<int>(idx / k);
    const std::size_t j = idx % k;
    const SliceCtx& sc = ctx.slices[j];
    MioOptions mopts = opts.mio;
    mopts.relax_tol = opts.relax_tol;
    MioSolution sol = solve_mio(sc.qf, gamma, tau_min + t, mopts);
    const double exact_err = (sc.yf - sc.Xf * sol.beta).squaredNorm();
    BoundCell& cell = res.cells[idx];
    cell.tau = tau_min + t;
    cell.fold = static_cast<int>(j);
    cell.zeta_l = exact_err;
    cell.zeta_u = exact_err;
    cell.h_estimate = exact_err;
    cell.incumbent_value = sol.upper;
    cell.support = sol.support;
    cell.exact = true;
    nodes[idx] = sol.nodes;
    relaxes[idx] = sol.relax_solves;
  });

  res.stats.mio_count = static_cast<long>(total);
  for (std::size_t i = 0; i < total; ++i) {
    res.stats.node_count += nodes[i];
    res.stats.relax_count += relaxes[i];
  }
  res.converged = true;
  finalize_result(res, res.cells, tau_min, tau_max, k, n);
  res.stats.wall_time = seconds_since(t0);
  return res;
}

GammaObjective gamma_objective(const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y,
                               const FoldPartition& folds,
                               const std::vector<std::vector<int>>& supports,
                               double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("gamma_objective: gamma must be positive");
  if (supports.size() != folds.folds.size()) {
    throw ConfigError("gamma_objective: one support per fold required");
  }
  GammaObjective out;
  for (std::size_t j = 0; j < folds.folds.size(); ++j) {
    const auto& fold = folds.folds[j];
    const auto& S = supports[j];
    if (S.empty()) {
      for (int i : fold) out.value += y[i] * y[i];
      continue;
    }
    const int s = static_cast<int>(S.size());
    auto [Xc, yc] = fold_complement(X, y, fold);
    Eigen::MatrixXd Xcs(Xc.rows(), s);
    for (int c = 0; c < s; ++c) Xcs.col(c) = Xc.col(S[static_cast<std::size_t>(c)]);
    Eigen::MatrixXd A = Xcs.transpose() * Xcs;
    A.diagonal().array() += gamma / 2.0;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
      throw NumericError("gamma_objective: factorization failed");
    }
    Eigen::VectorXd beta_s = llt.solve(Xcs.transpose() * yc);
    // Sensitivity of the slice coefficients: d beta / d gamma = -A^{-1} beta/2,
    // so each fold contributes res' Xfs A^{-1} beta_s to the derivative.
    Eigen::VectorXd w = llt.solve(beta_s);
    Eigen::MatrixXd Xfs(static_cast<Eigen::Index>(fold.size()), s);
    Eigen::VectorXd yf(static_cast<Eigen::Index>(fold.size()));
    for (std::size_t t = 0; t < fold.size(); ++t) {
      for (int c = 0; c < s; ++c) {
        Xfs(static_cast<Eigen::Index>(t), c) = X(fold[t], S[static_cast<std::size_t>(c)]);
      }
      yf[static_cast<Eigen::Index>(t)] = y[fold[t]];
    }
    Eigen::VectorXd res = yf - Xfs * beta_s;
    out.value += res.squaredNorm();
    out.derivative += res.dot(Xfs * w);
  }
  return out;
}

double optimize_gamma(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const FoldPartition& folds,
                      const std::vector<std::vector<int>>& supports,
                      double gamma_prev, double gamma_lo, double gamma_hi) {
  if (!(gamma_lo > 0.0) || !(gamma_hi > gamma_lo)) {
    throw ConfigError("optimize_gamma: need 0 < gamma_lo < gamma_hi");
  }
  auto clamp_g = [&](double g) { return std::clamp(g, gamma_lo, gamma_hi); };
  auto deriv = [&](double g) {
    return gamma_objective(X, y, folds, supports, g).derivative;
  };
  auto value = [&](double g) {
    return gamma_objective(X, y, folds, supports, g).value;
  };

  std::vector<double> starts;
  starts.push_back(clamp_g(gamma_prev));
  const double llo = std::log10(gamma_lo), lhi = std::log10(gamma_hi);
  for (int i = 0; i < 7; ++i) {
    starts.push_back(std::pow(10.0, llo + (lhi - llo) * i / 6.0));
  }

  std::vector<double> candidates = starts;
  for (double g0 : starts) {
    double fa = deriv(g0);
    if (fa == 0.0) continue;  // stationary start; already a candidate
    const double dir = fa > 0.0 ? -1.0 : 1.0;
    double a = g0, b = g0;
    double fb = fa;
    bool bracketed = false;
    double step = 0.25;  // log10 step, doubled each expansion
    for (int w = 0; w < 48; ++w) {
      const double next = clamp_g(std::pow(10.0, std::log10(b) + dir * step));
      if (next == b) break;  // pinned at a boundary
      const double fn = deriv(next);
      if ((fn > 0.0) != (fa > 0.0) || fn == 0.0) {
        a = b;
        fa = fb;
        b = next;
        fb = fn;
        bracketed = true;
        break;
      }
      a = b;
      fa = fb;
      b = next;
      fb = fn;
      step *= 2.0;
    }
    if (!bracketed) {
      candidates.push_back(b);  // derivative kept its sign to the boundary
      continue;
    }
    if (a > b) {
      std::swap(a, b);
      std::swap(fa, fb);
    }
    // Secant proposals safeguarded by bisection on the derivative sign.
    for (int it = 0; it < 80 && b - a > 1e-12 * b; ++it) {
      double m = 0.5 * (a + b);
      if (fb != fa) {
        const double sec = b - fb * (b - a) / (fb - fa);
        if (sec > a && sec < b && std::isfinite(sec)) m = sec;
      }
      const double fm = deriv(m);
      if (fm == 0.0) {
        a = b = m;
        break;
      }
      if ((fm > 0.0) == (fa > 0.0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
        fb = fm;
      }
    }
    candidates.push_back(0.5 * (a + b));
  }

  double best_g = clamp_g(gamma_prev);
  double best_v = value(best_g);
  for (double g : candidates) {
    const double v = value(clamp_g(g));
    if (v < best_v) {
      best_v = v;
      best_g = clamp_g(g);
    }
  }
  return best_g;
}

CdState coordinate_descent(const Dataset& data, const FoldPartition& folds,
                           double gamma0, int tau_min, int tau_max,
                           const CdOptions& opts) {
  if (opts.max_sweeps < 1) {
    throw ConfigError("coordinate_descent: need max_sweeps >= 1");
  }
  if (!(opts.gamma_lo > 0.0) || !(opts.gamma_hi > opts.gamma_lo)) {
    throw ConfigError("coordinate_descent: need 0 < gamma_lo < gamma_hi");
  }
  const auto t0 = Clock::now();
  CdState st;
  double gamma = std::clamp(gamma0, opts.gamma_lo, opts.gamma_hi);
  if (gamma != gamma0) {
    log_info("coordinate_descent: gamma0 projected to ", gamma);
  }

  const std::size_t k = folds.folds.size();
  double h_cur = kInf;
  int tau_cur = -1;
  std::vector<std::vector<int>> supports_cur(k);
  double best_h = kInf, best_gamma = gamma;
  int best_tau = -1;
  std::vector<std::pair<double, int>> visited;

  auto merge = [&](const SolveStats& s) {
    st.stats.mio_count += s.mio_count;
    st.stats.node_count += s.node_count;
    st.stats.relax_count += s.relax_count;
  };

  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    TauSearchResult ts =
        tau_search(data, folds, gamma, tau_min, tau_max, opts.tau);
    merge(ts.stats);
    const double h_new =
        ts.h_by_tau[static_cast<std::size_t>(ts.tau_star - tau_min)];
    // Establishing tau on the first sweep is not a move; a run that starts
    // at a coordinate-wise minimum must converge after one sweep.
    bool tau_changed = false;
    if (tau_cur < 0 || h_new <= h_cur) {
      tau_changed = tau_cur >= 0 && tau_cur != ts.tau_star;
      tau_cur = ts.tau_star;
      h_cur = h_new;
    }
    for (std::size_t j = 0; j < k; ++j) {
      supports_cur[j] =
          ts.cells[static_cast<std::size_t>(tau_cur - tau_min) * k + j].support;
    }

    bool gamma_changed = false;
    const double gamma_cand = optimize_gamma(data.X, data.y, folds,
                                             supports_cur, gamma,
                                             opts.gamma_lo, opts.gamma_hi);
    if (gamma_cand != gamma) {
      TauSearchOptions eval_opts = opts.tau;
      eval_opts.mode = TauSearchMode::kRelaxationOnly;
      TauSearchResult ev =
          tau_search(data, folds, gamma_cand, tau_cur, tau_cur, eval_opts);
      merge(ev.stats);
      const double h_cand = ev.h_by_tau[0];
      if (h_cand <= h_cur) {
        gamma = gamma_cand;
        h_cur = h_cand;
        gamma_changed = true;
      }
    }

    st.history.push_back({sweep, gamma, tau_cur, h_cur, tau_changed, gamma_changed});
    if (h_cur < best_h) {
      best_h = h_cur;
      best_gamma = gamma;
      best_tau = tau_cur;
    }

    if (!tau_changed && !gamma_changed) {
      st.status = "converged";
      break;
    }
    bool cycled = false;
    for (const auto& [g_old, t_old] : visited) {
      if (t_old == tau_cur &&
          std::abs(std::log(gamma) - std::log(g_old)) <= opts.revisit_log_tol) {
        cycled = true;
        break;
      }
    }
    if (cycled) {
      st.status = "cycled";
      break;
    }
    visited.emplace_back(gamma, tau_cur);
    if (sweep == opts.max_sweeps) st.status = "budget";
  }

  st.gamma_t = best_gamma;
  st.tau_t = best_tau;
  st.h_t = best_h;
  st.stats.wall_time = seconds_since(t0);
  return st;
}

int tau_max_default(int n, int p) {
  const int m = std::min(n, p);
  int t = 2;
  while ((t + 1) * std::log(static_cast<double>(t + 1)) <=
         static_cast<double>(m)) {
    ++t;
  }
  return std::max(2, std::min(t, p));
}

}  // namespace sparsecv
