#include "sparsecv/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "sparsecv/errors.hpp"
#include "sparsecv/log.hpp"

namespace sparsecv {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("cannot parse numeric value '" + cell + "'", row, col);
  }
  return value;
}

}  // namespace

Dataset standardize(Eigen::MatrixXd X_raw, Eigen::VectorXd y_raw,
                    std::vector<std::string> feature_names,
                    std::string response_name) {
  const Eigen::Index n = X_raw.rows();
  const Eigen::Index p = X_raw.cols();
  if (n < 2) throw ConfigError("need at least 2 rows, got " + std::to_string(n));
  if (p < 1) throw ConfigError("need at least 1 feature column");

  Dataset d;
  d.col_mean.resize(p);
  d.col_scale.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = X_raw.col(j).mean();
    X_raw.col(j).array() -= mean;
    const double var = X_raw.col(j).squaredNorm() / static_cast<double>(n - 1);
    const double sd = std::sqrt(var);
    d.col_mean[j] = mean;
    if (sd <= 1e-12 * (1.0 + std::abs(mean))) {
      X_raw.col(j).setZero();
      d.col_scale[j] = 1.0;
      d.constant_columns.push_back(static_cast<int>(j));
    } else {
      X_raw.col(j) /= sd;
      d.col_scale[j] = sd;
    }
  }
  d.y_mean = y_raw.mean();
  y_raw.array() -= d.y_mean;

  d.X = std::move(X_raw);
  d.y = std::move(y_raw);
  d.feature_names = std::move(feature_names);
  d.response_name = std::move(response_name);
  if (!d.constant_columns.empty()) {
    log_warn("standardize: ", d.constant_columns.size(),
             " constant column(s) zeroed");
  }
  return d;
}

Dataset load_csv(const std::string& path, const std::string& response) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file", 1, 1);
  std::vector<std::string> header = split_line(line);
  const std::size_t ncol = header.size();
  if (ncol < 2) {
    throw ConfigError("need at least 2 columns (features + response), got " +
                      std::to_string(ncol));
  }

  // Resolve the response column: name match first, then 0-based index,
  // defaulting to the last column.
  std::size_t resp = ncol - 1;
  if (!response.empty()) {
    auto it = std::find(header.begin(), header.end(), response);
    if (it != header.end()) {
      resp = static_cast<std::size_t>(it - header.begin());
    } else {
      int idx = -1;
      auto [ptr, ec] = std::from_chars(response.data(),
                                       response.data() + response.size(), idx);
      if (ec != std::errc() || ptr != response.data() + response.size()) {
        throw ConfigError("response column '" + response + "' not found");
      }
      if (idx < 0 || static_cast<std::size_t>(idx) >= ncol) {
        throw ConfigError("response index " + std::to_string(idx) +
                          " out of range for " + std::to_string(ncol) +
                          " columns");
      }
      resp = static_cast<std::size_t>(idx);
    }
  }

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != ncol) {
      throw ParseError("expected " + std::to_string(ncol) + " fields, got " +
                           std::to_string(cells.size()),
                       lineno, cells.size());
    }
    std::vector<double> vals(ncol);
    for (std::size_t j = 0; j < ncol; ++j) {
      vals[j] = parse_cell(cells[j], lineno, j + 1);
    }
    rows.push_back(std::move(vals));
  }
  const std::size_t n = rows.size();
  if (n < 2) throw ConfigError("need at least 2 data rows, got " + std::to_string(n));

  const std::size_t p = ncol - 1;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t j = 0; j < ncol; ++j) {
    if (j != resp) names.push_back(header[j]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t jj = 0;
    for (std::size_t j = 0; j < ncol; ++j) {
      if (j == resp) {
        y[static_cast<Eigen::Index>(i)] = rows[i][j];
      } else {
        X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jj++)) =
            rows[i][j];
      }
    }
  }
  return standardize(std::move(X), std::move(y), std::move(names),
                     header[resp]);
}

void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    out << data.feature_names[static_cast<std::size_t>(j)] << ",";
  }
  out << (data.response_name.empty() ? "y" : data.response_name) << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.X(i, j));
      out << buf << ",";
    }
    std::snprintf(buf, sizeof buf, "%.17g", data.y[i]);
    out << buf << "\n";
  }
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

FoldPartition make_folds(int n, int k, std::uint64_t seed) {
  if (n < 2) throw ConfigError("make_folds: need n >= 2, got " + std::to_string(n));
  if (k < 2 || k > n) {
    throw ConfigError("make_folds: need 2 <= k <= n, got k=" +
                      std::to_string(k) + ", n=" + std::to_string(n));
  }
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  // Fisher-Yates, spelled out so the assignment is pinned by the seed alone.
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(pick(rng))]);
  }
  FoldPartition part;
  part.k = k;
  part.folds.resize(static_cast<std::size_t>(k));
  const int base = n / k;
  const int extra = n % k;  // first `extra` folds get one more row
  int pos = 0;
  for (int f = 0; f < k; ++f) {
    const int size = base + (f < extra ? 1 : 0);
    auto& fold = part.folds[static_cast<std::size_t>(f)];
    fold.reserve(static_cast<std::size_t>(size));
    for (int t = 0; t < size; ++t) fold.push_back(perm[static_cast<std::size_t>(pos++)]);
    std::sort(fold.begin(), fold.end());
  }
  return part;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 2) throw ConfigError("generate_synthetic: need n >= 2");
  if (spec.p < 1) throw ConfigError("generate_synthetic: need p >= 1");
  if (spec.tau_true < 1 || spec.tau_true > spec.p) {
    throw ConfigError("generate_synthetic: need 1 <= tau_true <= p");
  }
  if (!(spec.rho > -1.0 && spec.rho < 1.0)) {
    throw ConfigError("generate_synthetic: need -1 < rho < 1");
  }
  if (!(spec.nu > 0.0)) throw ConfigError("generate_synthetic: need nu > 0");

  const int n = spec.n;
  const int p = spec.p;

  Eigen::MatrixXd sigma(p, p);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      sigma(a, b) = std::pow(spec.rho, std::abs(a - b));
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw NumericError("generate_synthetic: AR(1) covariance not SPD");
  }
  Eigen::MatrixXd L = llt.matrixL();

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd Z(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) Z(i, j) = gauss(rng);
  }
  Eigen::MatrixXd X_raw = Z * L.transpose();

  Eigen::VectorXd beta_true = Eigen::VectorXd::Zero(p);
  for (int t = 0; t < spec.tau_true; ++t) {
    const int idx = static_cast<int>((static_cast<long long>(t) * p) / spec.tau_true);
    beta_true[idx] = 1.0;
  }

  const double signal_var = beta_true.dot(sigma * beta_true);
  const double noise_sd = std::sqrt(signal_var / spec.nu);
  Eigen::VectorXd eps(n);
  for (int i = 0; i < n; ++i) eps[i] = noise_sd * gauss(rng);

  Eigen::VectorXd y_raw = X_raw * beta_true + eps;

  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));

  SyntheticData out;
  out.data = standardize(std::move(X_raw), std::move(y_raw), std::move(names), "y");
  out.beta_true = std::move(beta_true);
  out.noise_sd = noise_sd;
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> fold_rows(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
    const std::vector<int>& fold) {
  Eigen::MatrixXd Xf(static_cast<Eigen::Index>(fold.size()), X.cols());
  Eigen::VectorXd yf(static_cast<Eigen::Index>(fold.size()));
  for (std::size_t t = 0; t < fold.size(); ++t) {
    Xf.row(static_cast<Eigen::Index>(t)) = X.row(fold[t]);
    yf[static_cast<Eigen::Index>(t)] = y[fold[t]];
  }
  return {std::move(Xf), std::move(yf)};
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> fold_complement(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
    const std::vector<int>& fold) {
  std::vector<char> in_fold(static_cast<std::size_t>(X.rows()), 0);
  for (int i : fold) in_fold[static_cast<std::size_t>(i)] = 1;
  const Eigen::Index m = X.rows() - static_cast<Eigen::Index>(fold.size());
  Eigen::MatrixXd Xc(m, X.cols());
  Eigen::VectorXd yc(m);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (!in_fold[static_cast<std::size_t>(i)]) {
      Xc.row(r) = X.row(i);
      yc[r] = y[i];
      ++r;
    }
  }
  return {std::move(Xc), std::move(yc)};
}

}  // namespace sparsecv
