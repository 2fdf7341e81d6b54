#include "sparsecv/mio.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "sparsecv/errors.hpp"
#include "sparsecv/log.hpp"

namespace sparsecv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIntegralTol = 1e-6;

SupportFit fit_from_gram(const QuadForm& qf, double gamma,
                         const std::vector<int>& support) {
  const Eigen::Index p = qf.G.rows();
  SupportFit fit;
  fit.beta = Eigen::VectorXd::Zero(p);
  const int s = static_cast<int>(support.size());
  if (s == 0) {
    fit.value = qf.yy;
    return fit;
  }
  Eigen::MatrixXd A(s, s);
  Eigen::VectorXd b(s);
  for (int i = 0; i < s; ++i) {
    b[i] = qf.r[support[static_cast<std::size_t>(i)]];
    for (int j = 0; j < s; ++j) {
      A(i, j) = qf.G(support[static_cast<std::size_t>(i)],
                     support[static_cast<std::size_t>(j)]);
    }
  }
  A.diagonal().array() += gamma / 2.0;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    throw NumericError("solve_ridge_on_support: factorization failed");
  }
  Eigen::VectorXd bs = llt.solve(b);
  for (int i = 0; i < s; ++i) {
    fit.beta[support[static_cast<std::size_t>(i)]] = bs[i];
  }
  // At the optimum the objective collapses to yy - b's.
  fit.value = qf.yy - b.dot(bs);
  return fit;
}

void check_support(const std::vector<int>& support, Eigen::Index p) {
  int prev = -1;
  for (int idx : support) {
    if (idx < 0 || idx >= p) {
      throw ConfigError("support index " + std::to_string(idx) +
                        " out of range");
    }
    if (idx <= prev) {
      throw ConfigError("support indices must be strictly increasing");
    }
    prev = idx;
  }
}

struct Node {
  std::vector<int> free_idx;
  std::vector<int> one_idx;
  double bound = -kInf;
  Eigen::VectorXd warm;
  long seq = 0;
};

struct NodeCmp {
  // Min-heap on bound; FIFO among equal bounds for determinism.
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.seq > b.seq;
  }
};

// Support selection from a relaxation: pinned coordinates first, then the
// best free coordinates by (z, |beta|, index).
std::vector<int> select_support(const RelaxSolution& rel,
                                const std::vector<int>& free_idx,
                                const std::vector<int>& one_idx, int tau) {
  std::vector<int> order = free_idx;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (rel.z[a] != rel.z[b]) return rel.z[a] > rel.z[b];
    const double ba = std::abs(rel.beta[a]), bb = std::abs(rel.beta[b]);
    if (ba != bb) return ba > bb;
    return a < b;
  });
  std::vector<int> support = one_idx;
  const int take = std::min<int>(tau - static_cast<int>(one_idx.size()),
                                 static_cast<int>(order.size()));
  for (int i = 0; i < take; ++i) support.push_back(order[static_cast<std::size_t>(i)]);
  std::sort(support.begin(), support.end());
  return support;
}

}  // namespace

SupportFit solve_ridge_on_support(const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y, double gamma,
                                  const std::vector<int>& support) {
  if (!(gamma > 0.0)) {
    throw ConfigError("solve_ridge_on_support: gamma must be positive");
  }
  check_support(support, X.cols());
  SupportFit fit;
  fit.beta = Eigen::VectorXd::Zero(X.cols());
  const int s = static_cast<int>(support.size());
  if (s == 0) {
    fit.value = y.squaredNorm();
    return fit;
  }
  Eigen::MatrixXd Xs(X.rows(), s);
  for (int i = 0; i < s; ++i) Xs.col(i) = X.col(support[static_cast<std::size_t>(i)]);
  Eigen::MatrixXd A = Xs.transpose() * Xs;
  A.diagonal().array() += gamma / 2.0;
  Eigen::VectorXd b = Xs.transpose() * y;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    throw NumericError("solve_ridge_on_support: factorization failed");
  }
  Eigen::VectorXd bs = llt.solve(b);
  for (int i = 0; i < s; ++i) {
    fit.beta[support[static_cast<std::size_t>(i)]] = bs[i];
  }
  fit.value = y.squaredNorm() - b.dot(bs);
  return fit;
}

SupportFit solve_ridge_on_support(const QuadForm& qf, double gamma,
                                  const std::vector<int>& support) {
  if (!(gamma > 0.0)) {
    throw ConfigError("solve_ridge_on_support: gamma must be positive");
  }
  check_support(support, qf.G.rows());
  return fit_from_gram(qf, gamma, support);
}

ScreenResult screen(const RelaxSolution& rel, double f_bar, double gamma,
                    int tau) {
  const Eigen::Index p = rel.beta.size();
  if (tau < 1 || tau > p) {
    throw ConfigError("screen: need 1 <= tau <= p");
  }
  std::vector<double> sq(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) sq[static_cast<std::size_t>(i)] = rel.beta[i] * rel.beta[i];
  std::vector<double> sorted = sq;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  const double thr_in = sorted[static_cast<std::size_t>(tau - 1)];  // tau-th largest
  const double thr_out = tau < p ? sorted[static_cast<std::size_t>(tau)] : 0.0;

  const double f_low = rel.dual_value;
  const double c = 1.0 / (2.0 * gamma);
  ScreenResult out;
  for (Eigen::Index i = 0; i < p; ++i) {
    const double s = sq[static_cast<std::size_t>(i)];
    if (s <= thr_out && f_low - c * (s - thr_in) > f_bar) {
      out.fixed_zero.push_back(static_cast<int>(i));
    } else if (s >= thr_in && f_low + c * (s - thr_out) > f_bar) {
      out.fixed_one.push_back(static_cast<int>(i));
    }
  }
  if (static_cast<int>(out.fixed_one.size()) > tau) {
    throw InternalError("screen: fixed more than tau coordinates to one; "
                        "incumbent value is below the certified lower bound");
  }
  return out;
}

MioSolution solve_mio(const QuadForm& qf, double gamma, int tau,
                      const MioOptions& opts) {
  const Eigen::Index p = qf.G.rows();
  if (!(gamma > 0.0)) throw ConfigError("solve_mio: gamma must be positive");
  if (tau < 1 || tau > p) throw ConfigError("solve_mio: need 1 <= tau <= p");

  const auto t0 = std::chrono::steady_clock::now();
  auto out_of_time = [&]() {
    if (opts.time_limit <= 0.0) return false;
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    return dt.count() >= opts.time_limit;
  };

  MioSolution sol;
  sol.beta = Eigen::VectorXd::Zero(p);
  sol.z = Eigen::VectorXd::Zero(p);
  sol.upper = kInf;
  sol.lower = -kInf;

  std::vector<int> best_support;
  auto consider = [&](const SupportFit& fit, const std::vector<int>& support) {
    if (fit.value < sol.upper) {
      sol.upper = fit.value;
      sol.beta = fit.beta;
      best_support = support;
    }
  };

  // Swap refinement of a rounded support: first-improvement over exchanging
  // one in-support free coordinate for one out-of-support free coordinate.
  auto local_search = [&](std::vector<int> support,
                          const std::vector<int>& free_idx,
                          const std::vector<int>& one_idx) {
    SupportFit cur = fit_from_gram(qf, gamma, support);
    consider(cur, support);
    std::vector<char> in_sup(static_cast<std::size_t>(p), 0);
    for (int i : support) in_sup[static_cast<std::size_t>(i)] = 1;
    std::vector<char> pinned(static_cast<std::size_t>(p), 0);
    for (int i : one_idx) pinned[static_cast<std::size_t>(i)] = 1;
    const double eps = 1e-12 * std::max(1.0, std::abs(cur.value));
    for (int pass = 0; pass < 50; ++pass) {
      bool improved = false;
      for (std::size_t si = 0; si < support.size() && !improved; ++si) {
        const int s = support[si];
        if (pinned[static_cast<std::size_t>(s)]) continue;
        for (int j : free_idx) {
          if (in_sup[static_cast<std::size_t>(j)]) continue;
          std::vector<int> cand = support;
          cand[si] = j;
          std::sort(cand.begin(), cand.end());
          SupportFit fit = fit_from_gram(qf, gamma, cand);
          if (fit.value < cur.value - eps) {
            in_sup[static_cast<std::size_t>(s)] = 0;
            in_sup[static_cast<std::size_t>(j)] = 1;
            support = std::move(cand);
            cur = std::move(fit);
            consider(cur, support);
            improved = true;
            break;
          }
        }
      }
      if (!improved) break;
    }
  };

  // Initial incumbent from a caller-provided point, refit on its support.
  if (opts.warm_beta.size() == p) {
    std::vector<int> idx;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (opts.warm_beta[i] != 0.0) idx.push_back(static_cast<int>(i));
    }
    if (static_cast<int>(idx.size()) > tau) {
      std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const double ba = std::abs(opts.warm_beta[a]),
                     bb = std::abs(opts.warm_beta[b]);
        if (ba != bb) return ba > bb;
        return a < b;
      });
      idx.resize(static_cast<std::size_t>(tau));
      std::sort(idx.begin(), idx.end());
    }
    consider(fit_from_gram(qf, gamma, idx), idx);
  }

  std::vector<int> all(static_cast<std::size_t>(p));
  std::iota(all.begin(), all.end(), 0);

  std::priority_queue<Node, std::vector<Node>, NodeCmp> pq;
  long seq = 0;
  double lower_running = -kInf;
  bool stopped_by_limit = false;
  bool stopped_by_gap = false;

  // Root: trivial when the budget covers every coordinate, otherwise solve
  // the relaxation once, round it, and optionally screen.
  if (static_cast<int>(p) <= tau) {
    sol.nodes = 1;
    consider(fit_from_gram(qf, gamma, all), all);
    lower_running = sol.upper;
  } else {
    sol.nodes = 1;
    RelaxSolution rel0 = solve_perspective(qf, gamma, tau, {all, {}},
                                           {opts.relax_tol, 0, {}});
    ++sol.relax_solves;
    lower_running = rel0.dual_value;
    if (opts.greedy_warm_start) {
      local_search(select_support(rel0, all, {}, tau), all, {});
    }
    bool integral = true;
    for (Eigen::Index i = 0; i < p && integral; ++i) {
      integral = rel0.z[i] <= kIntegralTol || rel0.z[i] >= 1.0 - kIntegralTol;
    }
    if (integral) {
      std::vector<int> sel;
      for (Eigen::Index i = 0; i < p; ++i) {
        if (rel0.z[i] >= 1.0 - kIntegralTol) sel.push_back(static_cast<int>(i));
      }
      consider(fit_from_gram(qf, gamma, sel), sel);
      lower_running = sol.upper;
    } else if (rel0.dual_value < sol.upper) {
      Node root;
      root.bound = rel0.dual_value;
      root.warm = rel0.beta;
      root.seq = seq++;
      if (opts.screening && std::isfinite(sol.upper)) {
        ScreenResult scr = screen(rel0, sol.upper, gamma, tau);
        std::vector<char> fz(static_cast<std::size_t>(p), 0), fo(static_cast<std::size_t>(p), 0);
        for (int i : scr.fixed_zero) fz[static_cast<std::size_t>(i)] = 1;
        for (int i : scr.fixed_one) fo[static_cast<std::size_t>(i)] = 1;
        for (int i = 0; i < static_cast<int>(p); ++i) {
          if (fo[static_cast<std::size_t>(i)]) {
            root.one_idx.push_back(i);
          } else if (!fz[static_cast<std::size_t>(i)]) {
            root.free_idx.push_back(i);
          }
        }
        for (int i : scr.fixed_zero) root.warm[i] = 0.0;
      } else {
        root.free_idx = all;
      }
      pq.push(std::move(root));
    } else {
      lower_running = sol.upper;  // root pruned: incumbent is optimal
    }
  }

  while (!pq.empty()) {
    if (out_of_time() ||
        (opts.node_limit > 0 && sol.nodes >= opts.node_limit)) {
      stopped_by_limit = true;
      break;
    }
    Node node = pq.top();
    pq.pop();
    lower_running = std::max(lower_running, std::min(node.bound, sol.upper));
    if (std::isfinite(sol.upper)) {
      const double g = (sol.upper - lower_running) / std::max(1.0, std::abs(sol.upper));
      if (g <= opts.gap_tol) {
        stopped_by_gap = g > 0.0;
        if (!stopped_by_gap) lower_running = sol.upper;
        break;
      }
    }
    if (node.bound >= sol.upper) continue;  // dominated; not processed

    ++sol.nodes;
    const int tau_f = tau - static_cast<int>(node.one_idx.size());
    if (tau_f <= 0 ||
        static_cast<int>(node.one_idx.size() + node.free_idx.size()) <= tau) {
      std::vector<int> S = node.one_idx;
      if (tau_f > 0) {
        S.insert(S.end(), node.free_idx.begin(), node.free_idx.end());
        std::sort(S.begin(), S.end());
      }
      consider(fit_from_gram(qf, gamma, S), S);
      continue;
    }

    PerspOptions popts{opts.relax_tol, 0, node.warm};
    RelaxSolution rel =
        solve_perspective(qf, gamma, tau, {node.free_idx, node.one_idx}, popts);
    ++sol.relax_solves;
    const double bound = std::max(node.bound, rel.dual_value);

    if (opts.greedy_warm_start) {
      std::vector<int> support =
          select_support(rel, node.free_idx, node.one_idx, tau);
      SupportFit fit = fit_from_gram(qf, gamma, support);
      if (fit.value < sol.upper) {
        consider(fit, support);
        local_search(support, node.free_idx, node.one_idx);
      }
    }
    if (bound >= sol.upper) continue;

    bool integral = true;
    for (int i : node.free_idx) {
      if (rel.z[i] > kIntegralTol && rel.z[i] < 1.0 - kIntegralTol) {
        integral = false;
        break;
      }
    }
    if (integral) {
      std::vector<int> S = node.one_idx;
      for (int i : node.free_idx) {
        if (rel.z[i] >= 1.0 - kIntegralTol) S.push_back(i);
      }
      std::sort(S.begin(), S.end());
      consider(fit_from_gram(qf, gamma, S), S);
      continue;
    }

    int branch = -1;
    double best_frac = kInf;
    for (int i : node.free_idx) {
      const double frac = std::abs(rel.z[i] - 0.5);
      if (frac < best_frac ||
          (frac == best_frac && branch >= 0 &&
           (std::abs(rel.beta[i]) > std::abs(rel.beta[branch])))) {
        best_frac = frac;
        branch = i;
      }
    }

    Node child0, child1;
    child0.one_idx = node.one_idx;
    child1.one_idx = node.one_idx;
    child1.one_idx.insert(
        std::lower_bound(child1.one_idx.begin(), child1.one_idx.end(), branch),
        branch);
    for (int i : node.free_idx) {
      if (i == branch) continue;
      child0.free_idx.push_back(i);
      child1.free_idx.push_back(i);
    }
    child0.bound = bound;
    child1.bound = bound;
    child0.warm = rel.beta;
    child0.warm[branch] = 0.0;
    child1.warm = rel.beta;
    child0.seq = seq++;
    child1.seq = seq++;
    pq.push(std::move(child1));  // inclusion side first among equal bounds
    pq.push(std::move(child0));
  }

  if (pq.empty() && !stopped_by_limit) {
    lower_running = sol.upper;  // exhausted: incumbent certified optimal
  }

  sol.lower = std::min(lower_running, sol.upper);
  if (std::isfinite(sol.upper)) {
    sol.gap = (sol.upper - sol.lower) / std::max(1.0, std::abs(sol.upper));
  } else {
    sol.gap = kInf;
  }
  if (stopped_by_limit) {
    sol.status = "time-limit";
  } else if (stopped_by_gap) {
    sol.status = "gap-limit";
  } else {
    sol.status = "optimal";
  }

  sol.support = best_support;
  for (int i : best_support) sol.z[i] = 1.0;
  return sol;
}

MioSolution solve_mio(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      double gamma, int tau, const MioOptions& opts) {
  return solve_mio(make_quad_form(X, y), gamma, tau, opts);
}

}  // namespace sparsecv
