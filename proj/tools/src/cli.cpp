#include "cli.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sparsecv/errors.hpp>
#include <sparsecv/log.hpp>

namespace sparsecv::cli {

int parse_folds(const std::string& folds, int n) {
  if (folds == "loo") return n;
  errno = 0;
  char* end = nullptr;
  const long k = std::strtol(folds.c_str(), &end, 10);
  if (errno != 0 || end == folds.c_str() || *end != '\0') {
    throw ConfigError("folds must be a positive integer or \"loo\", got \"" +
                      folds + "\"");
  }
  if (k < 2 || k > n) {
    throw ConfigError("folds must lie in [2, " + std::to_string(n) +
                      "], got " + std::to_string(k));
  }
  return static_cast<int>(k);
}

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("no dataset given");
  Dataset data = load_csv(cfg.dataset, cfg.response);
  log_debug("loaded ", cfg.dataset, ": ", data.n(), " rows, ", data.p(),
            " features, response \"", data.response_name, "\"");
  return data;
}

void resolve_tau_range(const RunConfig& cfg, int n, int p, int* tau_min,
                       int* tau_max) {
  *tau_min = cfg.tau_min;
  *tau_max = cfg.tau_max > 0 ? cfg.tau_max : tau_max_default(n, p);
  if (*tau_min < 1) throw ConfigError("tau-min must be at least 1");
  if (*tau_max > p) {
    throw ConfigError("tau-max " + std::to_string(*tau_max) + " exceeds the " +
                      std::to_string(p) + " available features");
  }
  if (*tau_min > *tau_max) {
    throw ConfigError("tau-min " + std::to_string(*tau_min) +
                      " exceeds tau-max " + std::to_string(*tau_max));
  }
}

void validate_common(const RunConfig& cfg) {
  for (const double g : cfg.gamma) {
    if (!(g > 0.0)) throw ConfigError("gamma values must be positive");
  }
  if (!(cfg.epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
  if (!(cfg.gap_tol >= 0.0)) throw ConfigError("gap-tol must be nonnegative");
  if (!(cfg.time_limit >= 0.0))
    throw ConfigError("time-limit must be nonnegative");
  if (cfg.mio_budget < 0) throw ConfigError("mio-budget must be nonnegative");
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
}

std::string emit_report(const RunConfig& cfg, const json& report) {
  std::string bytes = report.dump(2);
  bytes.push_back('\n');
  if (!cfg.out.empty()) {
    std::ofstream out(cfg.out, std::ios::binary);
    if (!out) throw ConfigError("cannot write report to " + cfg.out);
    out << bytes;
  }
  return bytes;
}

json stats_json(const SolveStats& s) {
  return json{{"mio_count", s.mio_count},
              {"node_count", s.node_count},
              {"relax_count", s.relax_count},
              {"wall_time_seconds", s.wall_time}};
}

json config_echo(const RunConfig& cfg, int k) {
  return json{{"dataset", cfg.dataset}, {"response", cfg.response},
              {"folds", k},             {"gamma", cfg.gamma},
              {"epsilon", cfg.epsilon}, {"mio_budget", cfg.mio_budget},
              {"gap_tol", cfg.gap_tol}, {"time_limit", cfg.time_limit},
              {"seed", cfg.seed},       {"threads", cfg.threads}};
}

double percent(double before, double after) {
  if (!(before > 0.0)) return 0.0;
  return 100.0 * (before - after) / before;
}

long floor_percent(double before, double after) {
  if (!(before > 0.0)) return 0;
  return static_cast<long>(std::floor(100.0 * (before - after) / before));
}

json coefficients_json(const Dataset& data, const Eigen::VectorXd& beta) {
  const Eigen::Index p = data.p();
  std::vector<double> std_scale(static_cast<std::size_t>(p));
  std::vector<double> raw(static_cast<std::size_t>(p));
  double intercept = data.y_mean;
  for (Eigen::Index j = 0; j < p; ++j) {
    std_scale[static_cast<std::size_t>(j)] = beta[j];
    const double bj = beta[j] / data.col_scale[j];
    raw[static_cast<std::size_t>(j)] = bj;
    intercept -= bj * data.col_mean[j];
  }
  return json{{"standardized", std_scale},
              {"raw", raw},
              {"intercept", intercept}};
}

}  // namespace sparsecv::cli
