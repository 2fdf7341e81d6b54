#include <CLI11.hpp>
#include <exception>
#include <iostream>
#include <sparsecv/errors.hpp>

#include "cli.hpp"

namespace cli = sparsecv::cli;

namespace {

void add_data_options(CLI::App* cmd, cli::RunConfig* cfg) {
  cmd->add_option("--data", cfg->dataset, "CSV file with a header row")
      ->required();
  cmd->add_option("--response", cfg->response,
                  "response column name or 0-based index (default: last)");
}

void add_search_options(CLI::App* cmd, cli::RunConfig* cfg) {
  cmd->add_option("--folds", cfg->folds,
                  "cross-validation folds: an integer or \"loo\"");
  cmd->add_option("--tau-min", cfg->tau_min, "smallest sparsity level");
  cmd->add_option("--tau-max", cfg->tau_max,
                  "largest sparsity level (default: budget rule)");
  cmd->add_option("--mio-budget", cfg->mio_budget,
                  "cap on exact solves, 0 = unlimited");
  cmd->add_option("--seed", cfg->seed, "seed for fold assignment");
  cmd->add_option("--threads", cfg->threads, "worker threads");
}

void add_solver_options(CLI::App* cmd, cli::RunConfig* cfg) {
  cmd->add_option("--gap-tol", cfg->gap_tol,
                  "relative optimality gap per exact solve");
  cmd->add_option("--time-limit", cfg->time_limit,
                  "seconds per exact solve, 0 = none");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsity and ridge selection for L0-constrained regression"};
  app.require_subcommand(1);
  cli::RunConfig cfg;

  CLI::App* gen = app.add_subcommand(
      "gen", "generate a synthetic dataset with a planted sparse model");
  gen->add_option("--out", cfg.out, "CSV output path")->required();
  gen->add_option("--n", cfg.n, "rows");
  gen->add_option("--p", cfg.p, "features");
  gen->add_option("--tau-true", cfg.tau_true, "planted support size");
  gen->add_option("--rho", cfg.rho, "adjacent-feature correlation");
  gen->add_option("--nu", cfg.nu, "signal-to-noise ratio");
  gen->add_option("--seed", cfg.seed, "generator seed");

  CLI::App* fit = app.add_subcommand(
      "fit", "fit one model at fixed sparsity and ridge weight");
  add_data_options(fit, &cfg);
  fit->add_option("--gamma", cfg.gamma, "ridge weight")
      ->required()
      ->expected(1);
  fit->add_option("--tau", cfg.tau, "sparsity level")->required();
  add_solver_options(fit, &cfg);
  fit->add_option("--out", cfg.out, "JSON report path");

  CLI::App* search = app.add_subcommand(
      "tau-search", "select the sparsity level by certified search");
  add_data_options(search, &cfg);
  search->add_option("--gamma", cfg.gamma, "ridge weight")
      ->required()
      ->expected(1);
  search->add_option("--epsilon", cfg.epsilon,
                     "relative gap at which the search stops");
  add_search_options(search, &cfg);
  add_solver_options(search, &cfg);
  search->add_option("--out", cfg.out, "JSON report path");
  search->add_option("--trace", cfg.trace, "JSONL bound-evolution path");

  CLI::App* tune = app.add_subcommand(
      "tune", "alternate sparsity and ridge steps to a local optimum");
  add_data_options(tune, &cfg);
  tune->add_option("--gamma", cfg.gamma, "starting ridge weight")
      ->expected(1);
  tune->add_option("--epsilon", cfg.epsilon,
                   "relative gap for the sparsity steps");
  tune->add_flag("--exact", cfg.exact,
                 "certify sparsity steps with exact solves");
  add_search_options(tune, &cfg);
  add_solver_options(tune, &cfg);
  tune->add_option("--out", cfg.out, "JSON report path");

  CLI::App* bench = app.add_subcommand(
      "bench", "compare per-cell grid search against the bound-first search");
  add_data_options(bench, &cfg);
  bench->add_option("--gamma", cfg.gamma,
                    "ridge weights to benchmark (default grid of 7)")
      ->delimiter(',');
  add_search_options(bench, &cfg);
  add_solver_options(bench, &cfg);
  bench->add_option("--out", cfg.out, "JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  try {
    if (gen->parsed()) return cli::cmd_gen(cfg);
    if (fit->parsed()) return cli::cmd_fit(cfg);
    if (search->parsed()) return cli::cmd_tau_search(cfg);
    if (tune->parsed()) return cli::cmd_tune(cfg);
    if (bench->parsed()) return cli::cmd_bench(cfg);
  } catch (const sparsecv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitNumeric;
  }
  return cli::kExitOk;
}
