#pragma once

#include <cstdint>
#include <json.hpp>
#include <sparsecv/cvopt.hpp>
#include <sparsecv/dataset.hpp>
#include <string>
#include <vector>

namespace sparsecv::cli {

using nlohmann::json;

// One bag of options for every subcommand; each command reads the fields it
// understands and validates them before touching the data.
struct RunConfig {
  std::string command;
  std::string dataset;      // CSV path
  std::string response;     // column name or 0-based index; empty = last
  std::string folds = "5";  // positive integer or "loo"
  std::vector<double> gamma;
  int tau_min = 2;
  int tau_max = 0;      // 0 = budget rule default
  double epsilon = 1e-4;
  long mio_budget = 0;  // 0 = unlimited
  double gap_tol = 1e-6;
  double time_limit = 0.0;  // seconds per exact solve; 0 = none
  std::uint64_t seed = 0;
  int threads = 1;
  bool exact = false;  // tune: exact sparsity steps instead of relaxation-only
  std::string out;     // JSON report path; empty = stdout only
  std::string trace;   // JSONL bound-evolution path; empty = off

  // gen
  int n = 100;
  int p = 10;
  int tau_true = 3;
  double rho = 0.3;
  double nu = 5.0;

  // fit
  int tau = 0;
};

// Exit codes shared by main and the command bodies.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitPartial = 4;

// "loo" or an integer in [2, n]; throws ConfigError otherwise.
int parse_folds(const std::string& folds, int n);

// Loads and standardizes the dataset named by the config.
Dataset load_dataset(const RunConfig& cfg);

// Resolves tau_min/tau_max against the dataset and validates the rest of the
// numeric surface; throws ConfigError with a message naming the bad field.
void resolve_tau_range(const RunConfig& cfg, int n, int p, int* tau_min,
                       int* tau_max);
void validate_common(const RunConfig& cfg);

// Writes the report to cfg.out when set (creating parent directories is the
// caller's business) and always returns the serialized bytes.
std::string emit_report(const RunConfig& cfg, const json& report);

json stats_json(const SolveStats& s);
json config_echo(const RunConfig& cfg, int k);

// Raw-scale view of standardized coefficients plus the intercept.
json coefficients_json(const Dataset& data, const Eigen::VectorXd& beta);

// Percentage reduction from before to after; the text tables floor it to a
// whole percent, the JSON reports keep the exact value.
double percent(double before, double after);
long floor_percent(double before, double after);

int cmd_gen(const RunConfig& cfg);
int cmd_fit(const RunConfig& cfg);
int cmd_tau_search(const RunConfig& cfg);
int cmd_tune(const RunConfig& cfg);
int cmd_bench(const RunConfig& cfg);

}  // namespace sparsecv::cli
