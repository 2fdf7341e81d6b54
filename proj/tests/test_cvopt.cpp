#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sparsecv/cvopt.hpp"
#include "sparsecv/errors.hpp"

using namespace sparsecv;

namespace {

Dataset wrap(const oracle::Instance& inst) {
  Dataset d;
  d.X = inst.X;
  d.y = inst.y;
  return d;
}

std::vector<double> oracle_h_by_tau(const oracle::Instance& inst,
                                    const FoldPartition& folds, double gamma,
                                    int tau_min, int tau_max) {
  std::vector<double> out;
  for (int t = tau_min; t <= tau_max; ++t) {
    double sum = 0.0;
    for (const auto& fold : folds.folds) {
      sum += oracle::cv_cell_exact(inst.X, inst.y, fold, gamma, t).h;
    }
    out.push_back(sum / static_cast<double>(inst.X.rows()));
  }
  return out;
}

int oracle_argmin_tau(const std::vector<double>& h, int tau_min) {
  int best = tau_min;
  double best_v = h.front();
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i] < best_v) {
      best_v = h[i];
      best = tau_min + static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

TEST_SUITE_BEGIN("cvopt");

TEST_CASE("exact grid search reproduces the enumeration oracle") {
  std::mt19937_64 rng(211);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 16 + 2 * trial, p = 5, tau_min = 1, tau_max = 4;
    const double gamma = 0.1 + 0.2 * trial;
    oracle::Instance inst = oracle::random_instance(rng, n, p);
    FoldPartition folds = make_folds(n, trial == 3 ? n : 4, 7 + trial);
    TauSearchOptions opts;
    TauSearchResult res = grid_search_tau(wrap(inst), folds, gamma, tau_min,
                                          tau_max, true, opts);
    std::vector<double> href =
        oracle_h_by_tau(inst, folds, gamma, tau_min, tau_max);
    REQUIRE(res.h_by_tau.size() == href.size());
    for (std::size_t i = 0; i < href.size(); ++i) {
      CHECK(res.h_by_tau[i] ==
            doctest::Approx(href[i]).epsilon(1e-6));
    }
    CHECK(res.tau_star == oracle_argmin_tau(href, tau_min));
    CHECK(res.converged);
    CHECK(!res.budget_exhausted);
    CHECK(res.stats.mio_count ==
          static_cast<long>(res.cells.size()));
    for (const auto& c : res.cells) CHECK(c.exact);
    for (char flag : res.tau_all_exact) CHECK(flag == 1);
  }
}

TEST_CASE("bound-first search matches the exact grid at epsilon zero") {
  std::mt19937_64 rng(223);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 15 + trial, p = 5 + trial % 2, tau_min = 1, tau_max = 4;
    const double gamma = (trial % 2 == 0) ? 0.08 : 0.4;
    oracle::Instance inst = oracle::random_instance(rng, n, p);
    const int k = (trial == 5) ? n : 4 + trial % 2;
    FoldPartition folds = make_folds(n, k, 31 + trial);
    TauSearchOptions opts;
    opts.epsilon = 0.0;
    TauSearchResult bf =
        tau_search(wrap(inst), folds, gamma, tau_min, tau_max, opts);
    TauSearchResult grid = grid_search_tau(wrap(inst), folds, gamma, tau_min,
                                           tau_max, true, opts);
    CHECK(bf.tau_star == grid.tau_star);
    CHECK(bf.converged);
    CHECK(!bf.budget_exhausted);
    const double scale = std::max(1.0, grid.h_by_tau[static_cast<std::size_t>(
                                            grid.tau_star - tau_min)]);
    CHECK(std::abs(bf.h_by_tau[static_cast<std::size_t>(bf.tau_star - tau_min)] -
                   grid.h_by_tau[static_cast<std::size_t>(grid.tau_star -
                                                          tau_min)]) <=
          1e-8 * scale);
    CHECK(std::abs(bf.lower - bf.upper) <= 1e-9 * std::max(1.0, bf.upper));
    // Never more exact solves than the grid needs.
    CHECK(bf.stats.mio_count <= grid.stats.mio_count);
  }
}

TEST_CASE("cell table invariants and sandwich against the oracle") {
  std::mt19937_64 rng(227);
  const int n = 20, p = 6, tau_min = 1, tau_max = 4;
  const double gamma = 0.25;
  oracle::Instance inst = oracle::random_instance(rng, n, p);
  FoldPartition folds = make_folds(n, 5, 11);
  TauSearchOptions opts;
  opts.epsilon = 0.0;
  TauSearchResult res =
      tau_search(wrap(inst), folds, gamma, tau_min, tau_max, opts);
  const std::size_t k = folds.folds.size();
  REQUIRE(res.cells.size() == static_cast<std::size_t>(tau_max - tau_min + 1) * k);
  for (int t = tau_min; t <= tau_max; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      const BoundCell& c =
          res.cells[static_cast<std::size_t>(t - tau_min) * k + j];
      CHECK(c.tau == t);
      CHECK(c.fold == static_cast<int>(j));
      CHECK(c.zeta_l >= 0.0);
      CHECK(c.zeta_l <= c.zeta_u + 1e-9);
      CHECK(static_cast<int>(c.support.size()) <= t);
      CHECK(std::is_sorted(c.support.begin(), c.support.end()));
      for (int idx : c.support) {
        CHECK(idx >= 0);
        CHECK(idx < p);
      }
      if (c.exact) {
        CHECK(c.zeta_u - c.zeta_l <= 1e-9 * std::max(1.0, c.zeta_u));
      }
      oracle::CvCell ref =
          oracle::cv_cell_exact(inst.X, inst.y, folds.folds[j], gamma, t);
      const double tol = 1e-6 * std::max(1.0, ref.h);
      CHECK(c.zeta_l <= ref.h + tol);
      CHECK(c.zeta_u >= ref.h - tol);
    }
  }
}

TEST_CASE("relaxation-only mode solves no integer programs") {
  std::mt19937_64 rng(229);
  oracle::Instance inst = oracle::random_instance(rng, 18, 6);
  FoldPartition folds = make_folds(18, 4, 3);
  TauSearchOptions opts;
  opts.mode = TauSearchMode::kRelaxationOnly;
  TauSearchResult res = tau_search(wrap(inst), folds, 0.3, 1, 4, opts);
  CHECK(res.stats.mio_count == 0);
  CHECK(res.stats.node_count == 0);
  CHECK(res.trace.empty());
  CHECK(!res.budget_exhausted);
  CHECK(res.stats.relax_count > 0);
  for (double h : res.h_by_tau) {
    CHECK(std::isfinite(h));
    CHECK(h >= 0.0);
  }

  // The estimate-only grid search is the same computation.
  TauSearchResult grid = grid_search_tau(wrap(inst), folds, 0.3, 1, 4, false, opts);
  REQUIRE(grid.cells.size() == res.cells.size());
  for (std::size_t i = 0; i < res.cells.size(); ++i) {
    CHECK(grid.cells[i].zeta_l == res.cells[i].zeta_l);
    CHECK(grid.cells[i].zeta_u == res.cells[i].zeta_u);
    CHECK(grid.cells[i].h_estimate == res.cells[i].h_estimate);
  }
  CHECK(grid.tau_star == res.tau_star);
}

TEST_CASE("exact-solve budget is respected") {
  std::mt19937_64 rng(233);
  oracle::Instance inst = oracle::random_instance(rng, 20, 6);
  FoldPartition folds = make_folds(20, 5, 13);
  TauSearchOptions opts;
  opts.epsilon = 0.0;
  TauSearchResult full = tau_search(wrap(inst), folds, 0.15, 1, 4, opts);
  REQUIRE(full.stats.mio_count >= 3);

  opts.mio_budget = 2;
  TauSearchResult capped = tau_search(wrap(inst), folds, 0.15, 1, 4, opts);
  CHECK(capped.budget_exhausted);
  CHECK(!capped.converged);
  CHECK(capped.stats.mio_count == 2);
  REQUIRE(capped.trace.size() == 2);
  CHECK(capped.trace[0].mio_count == 1);
  CHECK(capped.trace[1].mio_count == 2);
  CHECK(capped.lower <= capped.upper + 1e-12);
}

TEST_CASE("trace bounds tighten monotonically to the final gap") {
  std::mt19937_64 rng(239);
  oracle::Instance inst = oracle::random_instance(rng, 22, 6);
  FoldPartition folds = make_folds(22, 5, 17);
  TauSearchOptions opts;
  opts.epsilon = 0.0;
  TauSearchResult res = tau_search(wrap(inst), folds, 0.2, 1, 4, opts);
  REQUIRE(res.converged);
  REQUIRE(!res.trace.empty());
  for (std::size_t i = 0; i < res.trace.size(); ++i) {
    const TauTraceEntry& e = res.trace[i];
    CHECK(e.lower <= e.upper + 1e-12);
    CHECK(e.tau >= 1);
    CHECK(e.tau <= 4);
    CHECK(e.fold >= 0);
    CHECK(e.fold < 5);
    CHECK(e.cell_value >= 0.0);
    if (i > 0) {
      CHECK(e.iteration > res.trace[i - 1].iteration);
      CHECK(e.lower >= res.trace[i - 1].lower - 1e-12);
      CHECK(e.upper <= res.trace[i - 1].upper + 1e-12);
    }
  }
  const TauTraceEntry& last = res.trace.back();
  CHECK(last.lower == doctest::Approx(res.lower).epsilon(1e-12));
  CHECK(last.upper == doctest::Approx(res.upper).epsilon(1e-12));
  CHECK(last.mio_count == res.stats.mio_count);
}

TEST_CASE("search results are deterministic and thread-count independent") {
  std::mt19937_64 rng(241);
  oracle::Instance inst = oracle::random_instance(rng, 24, 6);
  FoldPartition folds = make_folds(24, 6, 19);
  TauSearchOptions opts;
  opts.epsilon = 0.0;
  TauSearchResult a = tau_search(wrap(inst), folds, 0.3, 1, 4, opts);
  TauSearchResult b = tau_search(wrap(inst), folds, 0.3, 1, 4, opts);
  opts.threads = 3;
  TauSearchResult c = tau_search(wrap(inst), folds, 0.3, 1, 4, opts);
  for (const TauSearchResult* r : {&b, &c}) {
    CHECK(a.tau_star == r->tau_star);
    CHECK(a.lower == r->lower);
    CHECK(a.upper == r->upper);
    CHECK(a.stats.mio_count == r->stats.mio_count);
    CHECK(a.stats.relax_count == r->stats.relax_count);
    REQUIRE(a.h_by_tau.size() == r->h_by_tau.size());
    for (std::size_t i = 0; i < a.h_by_tau.size(); ++i) {
      CHECK(a.h_by_tau[i] == r->h_by_tau[i]);
    }
  }
}

TEST_CASE("input validation") {
  std::mt19937_64 rng(251);
  oracle::Instance inst = oracle::random_instance(rng, 12, 4);
  Dataset d = wrap(inst);
  FoldPartition folds = make_folds(12, 3, 1);
  CHECK_THROWS_AS(tau_search(d, folds, 0.0, 1, 3), ConfigError);
  CHECK_THROWS_AS(tau_search(d, folds, -1.0, 1, 3), ConfigError);
  CHECK_THROWS_AS(tau_search(d, folds, 0.5, 0, 3), ConfigError);
  CHECK_THROWS_AS(tau_search(d, folds, 0.5, 1, 5), ConfigError);
  CHECK_THROWS_AS(tau_search(d, folds, 0.5, 3, 2), ConfigError);
  CHECK_THROWS_AS(grid_search_tau(d, folds, 0.5, 1, 5, true), ConfigError);

  FoldPartition bad = folds;
  bad.folds[0][0] = 12;  // out of range
  CHECK_THROWS_AS(tau_search(d, bad, 0.5, 1, 3), ConfigError);
  bad = folds;
  bad.folds[0][0] = bad.folds[1][0];  // duplicated row
  CHECK_THROWS_AS(tau_search(d, bad, 0.5, 1, 3), ConfigError);
  bad = folds;
  bad.folds.pop_back();  // rows missing
  CHECK_THROWS_AS(tau_search(d, bad, 0.5, 1, 3), ConfigError);
}

TEST_CASE("fixed-support objective matches a direct refit and its derivative") {
  std::mt19937_64 rng(257);
  std::uniform_int_distribution<int> size_dist(0, 3);
  int evals = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 18, p = 6;
    oracle::Instance inst = oracle::random_instance(rng, n, p);
    FoldPartition folds = make_folds(n, trial % 2 == 0 ? 3 : 6, 41 + trial);
    std::vector<std::vector<int>> supports;
    for (std::size_t j = 0; j < folds.folds.size(); ++j) {
      std::vector<int> all(p);
      std::iota(all.begin(), all.end(), 0);
      std::shuffle(all.begin(), all.end(), rng);
      const int s = (trial == 0 && j == 0) ? 0 : size_dist(rng);
      std::vector<int> S(all.begin(), all.begin() + s);
      std::sort(S.begin(), S.end());
      supports.push_back(S);
    }
    for (double gamma : {0.05, 0.3, 1.2}) {
      GammaObjective go = gamma_objective(inst.X, inst.y, folds, supports, gamma);

      double ref = 0.0;
      for (std::size_t j = 0; j < folds.folds.size(); ++j) {
        auto [Xc, yc] = fold_complement(inst.X, inst.y, folds.folds[j]);
        oracle::Fit fit = oracle::ridge_on(Xc, yc, gamma, supports[j]);
        for (int i : folds.folds[j]) {
          const double r = inst.y[i] - inst.X.row(i).dot(fit.beta);
          ref += r * r;
        }
      }
      CHECK(go.value == doctest::Approx(ref).epsilon(1e-9));

      const double h = 1e-5 * std::max(0.05, gamma);
      const double fd = oracle::central_diff(
          [&](double g) {
            return gamma_objective(inst.X, inst.y, folds, supports, g).value;
          },
          gamma, h);
      CHECK(std::abs(go.derivative - fd) <=
            1e-5 * std::max(1.0, std::abs(go.derivative)));
      ++evals;
    }
  }
  CHECK(evals == 15);
}

TEST_CASE("gamma optimization reaches the dense log-grid minimum") {
  std::mt19937_64 rng(263);
  std::uniform_int_distribution<int> size_dist(1, 3);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 20, p = 6;
    oracle::Instance inst = oracle::random_instance(rng, n, p);
    FoldPartition folds = make_folds(n, 4, 53 + trial);
    std::vector<std::vector<int>> supports;
    for (std::size_t j = 0; j < folds.folds.size(); ++j) {
      std::vector<int> all(p);
      std::iota(all.begin(), all.end(), 0);
      std::shuffle(all.begin(), all.end(), rng);
      std::vector<int> S(all.begin(), all.begin() + size_dist(rng));
      std::sort(S.begin(), S.end());
      supports.push_back(S);
    }
    const double lo = 1e-3, hi = 10.0;
    const double g_star =
        optimize_gamma(inst.X, inst.y, folds, supports, 1.0, lo, hi);
    CHECK(g_star >= lo - 1e-12);
    CHECK(g_star <= hi + 1e-12);
    const double v_star =
        gamma_objective(inst.X, inst.y, folds, supports, g_star).value;

    double grid_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 2000; ++i) {
      const double g =
          std::pow(10.0, std::log10(lo) +
                             (std::log10(hi) - std::log10(lo)) * i / 1999.0);
      grid_min = std::min(
          grid_min, gamma_objective(inst.X, inst.y, folds, supports, g).value);
    }
    CHECK(v_star <= grid_min + 1e-3 * std::max(1.0, grid_min));

    // Restarting from the optimum cannot lose ground.
    const double g_again =
        optimize_gamma(inst.X, inst.y, folds, supports, g_star, lo, hi);
    const double v_again =
        gamma_objective(inst.X, inst.y, folds, supports, g_again).value;
    CHECK(v_again <= v_star + 1e-12 * std::max(1.0, v_star));
  }
}

TEST_CASE("coordinate descent accepts only non-increasing CV error") {
  std::mt19937_64 rng(269);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 18 + trial, p = 5 + trial % 2;
    oracle::Instance inst = oracle::random_instance(rng, n, p);
    FoldPartition folds = make_folds(n, 4, 61 + trial);
    CdOptions opts;
    CdState st = coordinate_descent(wrap(inst), folds, 0.5, 1, 4, opts);
    CHECK((st.status == "converged" || st.status == "cycled" ||
           st.status == "budget"));
    REQUIRE(!st.history.empty());
    for (std::size_t i = 1; i < st.history.size(); ++i) {
      CHECK(st.history[i].h <=
            st.history[i - 1].h + 1e-12 * std::max(1.0, st.history[i - 1].h));
    }
    CHECK(st.gamma_t >= opts.gamma_lo - 1e-12);
    CHECK(st.gamma_t <= opts.gamma_hi + 1e-12);
    CHECK(st.tau_t >= 1);
    CHECK(st.tau_t <= 4);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& sw : st.history) best = std::min(best, sw.h);
    CHECK(st.h_t == doctest::Approx(best).epsilon(1e-12));

    CdState again = coordinate_descent(wrap(inst), folds, 0.5, 1, 4, opts);
    CHECK(again.status == st.status);
    CHECK(again.gamma_t == st.gamma_t);
    CHECK(again.tau_t == st.tau_t);
    CHECK(again.h_t == st.h_t);
    CHECK(again.history.size() == st.history.size());
  }
}

TEST_CASE("coordinate descent with exact sparsity steps") {
  std::mt19937_64 rng(271);
  oracle::Instance inst = oracle::random_instance(rng, 16, 5);
  FoldPartition folds = make_folds(16, 4, 71);
  CdOptions opts;
  opts.tau.mode = TauSearchMode::kExact;
  opts.tau.epsilon = 0.0;
  opts.max_sweeps = 6;
  CdState st = coordinate_descent(wrap(inst), folds, 0.8, 1, 4, opts);
  CHECK((st.status == "converged" || st.status == "cycled" ||
         st.status == "budget"));
  CHECK(st.stats.mio_count > 0);
  for (std::size_t i = 1; i < st.history.size(); ++i) {
    CHECK(st.history[i].h <= st.history[i - 1].h + 1e-12);
  }
}

TEST_CASE("sparsity cap default follows the budget rule") {
  CHECK(tau_max_default(200, 100) == 29);
  CHECK(tau_max_default(100, 200) == 29);
  CHECK(tau_max_default(15, 40) == 7);
  CHECK(tau_max_default(40, 15) == 7);
  CHECK(tau_max_default(6, 50) == 4);
  CHECK(tau_max_default(50, 4) == 3);
  CHECK(tau_max_default(2, 10) == 2);
  for (int n : {5, 12, 30, 77}) {
    for (int p : {2, 3, 8, 25}) {
      const int t = tau_max_default(n, p);
      CHECK(t >= 2);
      CHECK(t <= std::max(2, p));
    }
  }
}

TEST_SUITE_END();
