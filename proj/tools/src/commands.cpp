#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sparsecv/errors.hpp>
#include <sparsecv/log.hpp>
#include <sparsecv/mio.hpp>
#include <thread>

#include "cli.hpp"

namespace sparsecv::cli {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::string> support_names(const Dataset& data,
                                       const std::vector<int>& support) {
  std::vector<std::string> names;
  names.reserve(support.size());
  for (const int j : support) {
    names.push_back(data.feature_names[static_cast<std::size_t>(j)]);
  }
  return names;
}

json fit_json(const Dataset& data, const MioSolution& sol) {
  return json{{"objective", sol.upper},
              {"certified_gap", sol.gap},
              {"lower_bound", sol.lower},
              {"status", sol.status},
              {"support", sol.support},
              {"support_names", support_names(data, sol.support)},
              {"coefficients", coefficients_json(data, sol.beta)},
              {"nodes", sol.nodes},
              {"relax_solves", sol.relax_solves}};
}

json search_json(const TauSearchResult& res) {
  json h_rows = json::array();
  for (std::size_t i = 0; i < res.h_by_tau.size(); ++i) {
    h_rows.push_back(json{{"tau", res.tau_min + static_cast<int>(i)},
                          {"h", res.h_by_tau[i]},
                          {"exact", res.tau_all_exact[i] != 0}});
  }
  json cells = json::array();
  for (const BoundCell& c : res.cells) {
    cells.push_back(json{{"tau", c.tau},
                         {"fold", c.fold},
                         {"zeta_l", c.zeta_l},
                         {"zeta_u", c.zeta_u},
                         {"exact", c.exact},
                         {"h_estimate", c.h_estimate},
                         {"support", c.support}});
  }
  return json{{"tau_star", res.tau_star},
              {"lower", res.lower},
              {"upper", res.upper},
              {"converged", res.converged},
              {"budget_exhausted", res.budget_exhausted},
              {"tau_min", res.tau_min},
              {"tau_max", res.tau_max},
              {"h_by_tau", h_rows},
              {"cells", cells},
              {"stats", stats_json(res.stats)}};
}

void write_trace(const std::string& path,
                 const std::vector<TauTraceEntry>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write trace to " + path);
  for (const TauTraceEntry& e : trace) {
    const json line{{"iteration", e.iteration}, {"tau", e.tau},
                    {"fold", e.fold},           {"cell_value", e.cell_value},
                    {"lower", e.lower},         {"upper", e.upper},
                    {"mio_count", e.mio_count}};
    out << line.dump() << '\n';
  }
}

double single_gamma(const RunConfig& cfg) {
  if (cfg.gamma.size() != 1) {
    throw ConfigError("expected exactly one --gamma value, got " +
                      std::to_string(cfg.gamma.size()));
  }
  return cfg.gamma[0];
}

void print_h_table(const TauSearchResult& res) {
  std::printf("  tau            h  certified\n");
  for (std::size_t i = 0; i < res.h_by_tau.size(); ++i) {
    std::printf("  %3d  %11.6g  %s\n", res.tau_min + static_cast<int>(i),
                res.h_by_tau[i], res.tau_all_exact[i] ? "exact" : "estimate");
  }
}

}  // namespace

int cmd_gen(const RunConfig& cfg) {
  if (cfg.out.empty()) throw ConfigError("gen needs --out for the CSV path");
  if (cfg.n < 2) throw ConfigError("n must be at least 2");
  if (cfg.p < 1) throw ConfigError("p must be at least 1");
  if (cfg.tau_true < 1 || cfg.tau_true > cfg.p) {
    throw ConfigError("tau-true must lie in [1, p]");
  }
  if (!(cfg.rho > -1.0 && cfg.rho < 1.0)) {
    throw ConfigError("rho must lie in (-1, 1)");
  }
  if (!(cfg.nu > 0.0)) throw ConfigError("nu must be positive");

  SyntheticSpec spec;
  spec.n = cfg.n;
  spec.p = cfg.p;
  spec.tau_true = cfg.tau_true;
  spec.rho = cfg.rho;
  spec.nu = cfg.nu;
  spec.seed = cfg.seed;
  const SyntheticData sd = generate_synthetic(spec);
  write_csv(cfg.out, sd.data);

  std::vector<double> beta_true(sd.beta_true.data(),
                                sd.beta_true.data() + sd.beta_true.size());
  const json sidecar{{"kind", "gen_sidecar"},
                     {"schema_version", 1},
                     {"csv", cfg.out},
                     {"spec",
                      {{"n", spec.n},
                       {"p", spec.p},
                       {"tau_true", spec.tau_true},
                       {"rho", spec.rho},
                       {"nu", spec.nu},
                       {"seed", spec.seed}}},
                     {"beta_true", beta_true},
                     {"noise_sd", sd.noise_sd}};
  const std::string sidecar_path = cfg.out + ".json";
  std::ofstream out(sidecar_path, std::ios::binary);
  if (!out) throw ConfigError("cannot write sidecar to " + sidecar_path);
  out << sidecar.dump(2) << '\n';
  std::printf("wrote %s (%d rows, %d features) and %s\n", cfg.out.c_str(),
              cfg.n, cfg.p, sidecar_path.c_str());
  return kExitOk;
}

int cmd_fit(const RunConfig& cfg) {
  validate_common(cfg);
  const double gamma = single_gamma(cfg);
  const Dataset data = load_dataset(cfg);
  const int p = static_cast<int>(data.p());
  if (cfg.tau < 1 || cfg.tau > p) {
    throw ConfigError("tau must lie in [1, " + std::to_string(p) + "]");
  }

  log_info("fit: n=", data.n(), " p=", p, " gamma=", gamma, " tau=", cfg.tau);
  log_debug("fit: gap_tol=", cfg.gap_tol, " time_limit=", cfg.time_limit);
  MioOptions opts;
  opts.gap_tol = cfg.gap_tol;
  opts.time_limit = cfg.time_limit;
  const auto t0 = Clock::now();
  const MioSolution sol = solve_mio(data.X, data.y, gamma, cfg.tau, opts);
  const double secs = seconds_since(t0);
  log_debug("fit: solved in ", secs, "s, ", sol.nodes, " nodes, status ",
            sol.status);

  json report{{"kind", "fit_report"},
              {"schema_version", 1},
              {"config",
               {{"dataset", cfg.dataset},
                {"response", cfg.response},
                {"gamma", gamma},
                {"tau", cfg.tau},
                {"gap_tol", cfg.gap_tol},
                {"time_limit", cfg.time_limit}}},
              {"result", fit_json(data, sol)},
              {"timing", {{"seconds", secs}}}};
  emit_report(cfg, report);

  std::printf("fit tau=%d gamma=%g: objective %.6g, certified gap %.3g, %s\n",
              cfg.tau, gamma, sol.upper, sol.gap, sol.status.c_str());
  std::printf("  support:");
  for (const int j : sol.support) {
    std::printf(" %s", data.feature_names[static_cast<std::size_t>(j)].c_str());
  }
  std::printf("\n");
  return sol.status == "time-limit" ? kExitPartial : kExitOk;
}

int cmd_tau_search(const RunConfig& cfg) {
  validate_common(cfg);
  const double gamma = single_gamma(cfg);
  const Dataset data = load_dataset(cfg);
  const int n = static_cast<int>(data.n());
  const int k = parse_folds(cfg.folds, n);
  int tau_min = 0, tau_max = 0;
  resolve_tau_range(cfg, n, static_cast<int>(data.p()), &tau_min, &tau_max);
  const FoldPartition folds = make_folds(n, k, cfg.seed);

  log_info("tau-search: n=", n, " p=", data.p(), " k=", k, " gamma=", gamma,
           " tau in [", tau_min, ", ", tau_max, "]");
  log_debug("tau-search: epsilon=", cfg.epsilon, " mio_budget=",
            cfg.mio_budget, " threads=", cfg.threads);
  TauSearchOptions opts;
  opts.epsilon = cfg.epsilon;
  opts.mio_budget = cfg.mio_budget;
  opts.threads = cfg.threads;
  opts.mio.gap_tol = cfg.gap_tol;
  opts.mio.time_limit = cfg.time_limit;
  const TauSearchResult res =
      tau_search(data, folds, gamma, tau_min, tau_max, opts);
  log_debug("tau-search: ", res.stats.mio_count, " exact solves, ",
            res.stats.relax_count, " relaxations");

  json report{{"kind", "tau_search_report"},
              {"schema_version", 1},
              {"config", config_echo(cfg, k)},
              {"result", search_json(res)}};
  report["config"]["tau_min"] = tau_min;
  report["config"]["tau_max"] = tau_max;
  emit_report(cfg, report);
  if (!cfg.trace.empty()) write_trace(cfg.trace, res.trace);

  print_h_table(res);
  std::printf(
      "selected tau=%d, cv error in [%.6g, %.6g], %s, %ld exact solves\n",
      res.tau_star, res.lower, res.upper,
      res.converged ? "converged" : "stopped", res.stats.mio_count);
  return res.budget_exhausted ? kExitPartial : kExitOk;
}

int cmd_tune(const RunConfig& cfg) {
  validate_common(cfg);
  const double gamma0 = cfg.gamma.empty() ? 0.1 : single_gamma(cfg);
  if (!(gamma0 > 0.0)) throw ConfigError("gamma must be positive");
  const Dataset data = load_dataset(cfg);
  const int n = static_cast<int>(data.n());
  const int k = parse_folds(cfg.folds, n);
  int tau_min = 0, tau_max = 0;
  resolve_tau_range(cfg, n, static_cast<int>(data.p()), &tau_min, &tau_max);
  const FoldPartition folds = make_folds(n, k, cfg.seed);

  log_info("tune: n=", n, " p=", data.p(), " k=", k, " gamma0=", gamma0,
           " tau in [", tau_min, ", ", tau_max, "]",
           cfg.exact ? " (exact steps)" : "");
  CdOptions opts;
  opts.tau.epsilon = cfg.epsilon;
  opts.tau.mio_budget = cfg.mio_budget;
  opts.tau.threads = cfg.threads;
  opts.tau.mio.gap_tol = cfg.gap_tol;
  opts.tau.mio.time_limit = cfg.time_limit;
  if (cfg.exact) opts.tau.mode = TauSearchMode::kExact;
  CdState st = coordinate_descent(data, folds, gamma0, tau_min, tau_max, opts);
  log_debug("tune: descent finished with status ", st.status, " after ",
            st.history.size(), " sweeps");

  MioOptions mio;
  mio.gap_tol = cfg.gap_tol;
  mio.time_limit = cfg.time_limit;

  // The descent tracks a relaxation-based estimate unless exact steps were
  // requested; with --exact the reported h is recertified fold by fold.
  double h_final = st.h_t;
  std::string h_label = cfg.exact ? "exact" : "estimate";
  if (cfg.exact) {
    double sse = 0.0;
    for (const auto& fold : folds.folds) {
      const auto [Xc, yc] = fold_complement(data.X, data.y, fold);
      const auto [Xf, yf] = fold_rows(data.X, data.y, fold);
      const MioSolution m = solve_mio(Xc, yc, st.gamma_t, st.tau_t, mio);
      sse += (yf - Xf * m.beta).squaredNorm();
      st.stats.mio_count += 1;
      st.stats.node_count += m.nodes;
      st.stats.relax_count += m.relax_solves;
    }
    h_final = sse / static_cast<double>(n);
  }

  const auto t0 = Clock::now();
  const MioSolution full = solve_mio(data.X, data.y, st.gamma_t, st.tau_t, mio);
  st.stats.mio_count += 1;
  st.stats.node_count += full.nodes;
  st.stats.relax_count += full.relax_solves;
  const double fit_secs = seconds_since(t0);

  json history = json::array();
  for (const CdSweep& s : st.history) {
    history.push_back(json{{"sweep", s.sweep},
                           {"gamma", s.gamma},
                           {"tau", s.tau},
                           {"h", s.h},
                           {"tau_changed", s.tau_changed},
                           {"gamma_changed", s.gamma_changed}});
  }
  json report{{"kind", "tune_report"},
              {"schema_version", 1},
              {"config", config_echo(cfg, k)},
              {"result",
               {{"gamma", st.gamma_t},
                {"tau", st.tau_t},
                {"h", h_final},
                {"h_label", h_label},
                {"status", st.status},
                {"history", history},
                {"final_fit", fit_json(data, full)},
                {"stats", stats_json(st.stats)}}},
              {"timing", {{"final_fit_seconds", fit_secs}}}};
  report["config"]["tau_min"] = tau_min;
  report["config"]["tau_max"] = tau_max;
  report["config"]["exact"] = cfg.exact;
  emit_report(cfg, report);

  std::printf("  sweep      gamma  tau            h\n");
  for (const CdSweep& s : st.history) {
    std::printf("  %5d  %9.4g  %3d  %11.6g\n", s.sweep, s.gamma, s.tau, s.h);
  }
  std::printf("tuned gamma=%g tau=%d, cv error %.6g (%s), status %s\n",
              st.gamma_t, st.tau_t, h_final, h_label.c_str(),
              st.status.c_str());
  return kExitOk;
}

int cmd_bench(const RunConfig& cfg) {
  validate_common(cfg);
  std::vector<double> gammas = cfg.gamma;
  if (gammas.empty()) gammas = {0.01, 0.02, 0.05, 0.10, 0.20, 0.50, 1.00};
  const Dataset data = load_dataset(cfg);
  const int n = static_cast<int>(data.n());
  const int k = parse_folds(cfg.folds, n);
  int tau_min = 0, tau_max = 0;
  resolve_tau_range(cfg, n, static_cast<int>(data.p()), &tau_min, &tau_max);
  const FoldPartition folds = make_folds(n, k, cfg.seed);

  struct Row {
    double gamma = 0.0;
    bool failed = false;
    bool numeric = false;
    bool budget = false;
    std::string error;
    TauSearchResult grid;
    TauSearchResult alg;
  };
  std::vector<Row> rows(gammas.size());

  // Rows are independent; grid and the bound-first search both run with an
  // exact-selection configuration so the comparison is counters only.
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= gammas.size()) return;
      Row& row = rows[i];
      row.gamma = gammas[i];
      TauSearchOptions opts;
      opts.epsilon = 0.0;
      opts.mio_budget = cfg.mio_budget;
      opts.threads = 1;
      opts.mio.gap_tol = cfg.gap_tol;
      opts.mio.time_limit = cfg.time_limit;
      try {
        row.grid = grid_search_tau(data, folds, row.gamma, tau_min, tau_max,
                                   true, opts);
        row.alg = tau_search(data, folds, row.gamma, tau_min, tau_max, opts);
        row.budget = row.alg.budget_exhausted;
      } catch (const NumericError& e) {
        row.failed = row.numeric = true;
        row.error = e.what();
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
    }
  };
  const int workers =
      std::max(1, std::min<int>(cfg.threads, static_cast<int>(gammas.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  bool partial = false;
  bool numeric = false;
  json jrows = json::array();
  for (const Row& row : rows) {
    if (row.failed) {
      partial = true;
      numeric = numeric || row.numeric;
      jrows.push_back(json{{"gamma", row.gamma}, {"error", row.error}});
      continue;
    }
    partial = partial || row.budget;
    const SolveStats& g = row.grid.stats;
    const SolveStats& a = row.alg.stats;
    jrows.push_back(json{
        {"gamma", row.gamma},
        {"grid",
         {{"seconds", g.wall_time},
          {"mio_count", g.mio_count},
          {"node_count", g.node_count},
          {"tau_star", row.grid.tau_star}}},
        {"algorithm",
         {{"seconds", a.wall_time},
          {"mio_count", a.mio_count},
          {"node_count", a.node_count},
          {"tau_star", row.alg.tau_star},
          {"budget_exhausted", row.budget}}},
        {"reduction",
         {{"mio_percent", percent(static_cast<double>(g.mio_count),
                                  static_cast<double>(a.mio_count))},
          {"node_percent", percent(static_cast<double>(g.node_count),
                                   static_cast<double>(a.node_count))},
          {"time_percent", percent(g.wall_time, a.wall_time)}}}});
  }

  json report{{"kind", "bench_report"},
              {"schema_version", 1},
              {"config", config_echo(cfg, k)},
              {"partial", partial},
              {"rows", jrows}};
  report["config"]["tau_min"] = tau_min;
  report["config"]["tau_max"] = tau_max;
  report["config"]["gamma"] = gammas;
  emit_report(cfg, report);

  std::printf(
      "  gamma   grid MIOs    alg MIOs   red   grid nodes   alg nodes   red"
      "     grid s      alg s   red\n");
  for (const Row& row : rows) {
    if (row.failed) {
      std::printf("  %5.3g   failed: %s\n", row.gamma, row.error.c_str());
      continue;
    }
    const SolveStats& g = row.grid.stats;
    const SolveStats& a = row.alg.stats;
    std::printf(
        "  %5.3g  %10ld  %10ld  %3ld%%  %11ld  %10ld  %3ld%%  %9.2f  %9.2f  "
        "%3ld%%\n",
        row.gamma, g.mio_count, a.mio_count,
        floor_percent(static_cast<double>(g.mio_count),
                      static_cast<double>(a.mio_count)),
        g.node_count, a.node_count,
        floor_percent(static_cast<double>(g.node_count),
                      static_cast<double>(a.node_count)),
        g.wall_time, a.wall_time, floor_percent(g.wall_time, a.wall_time));
  }
  if (numeric) return kExitNumeric;
  return partial ? kExitPartial : kExitOk;
}

}  // namespace sparsecv::cli
