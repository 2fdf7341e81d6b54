#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>
#include <sparsecv/bounds.hpp>
#include <sparsecv/dataset.hpp>
#include <sparsecv/linalg.hpp>
#include <sparsecv/relax.hpp>

namespace {

using namespace sparsecv;

SyntheticData make_instance(int n, int p) {
  SyntheticSpec spec;
  spec.n = n;
  spec.p = p;
  spec.tau_true = std::max(1, p / 5);
  spec.rho = 0.3;
  spec.nu = 5.0;
  spec.seed = 17;
  return generate_synthetic(spec);
}

void BM_GramBuild(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const SyntheticData sd = make_instance(4 * p, p);
  for (auto _ : state) {
    RegGram rg = build_reg_gram(sd.data.X, 0.1);
    benchmark::DoNotOptimize(rg.L);
  }
}
BENCHMARK(BM_GramBuild)->Arg(15)->Arg(50)->Arg(100);

void BM_PenaltyWaterFill(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd beta(p);
  for (int i = 0; i < p; ++i) beta[i] = gauss(rng);
  const int tau = std::max(1, p / 4);
  for (auto _ : state) {
    WaterFill wf = persp_penalty(beta, tau);
    benchmark::DoNotOptimize(wf.value);
  }
}
BENCHMARK(BM_PenaltyWaterFill)->Arg(15)->Arg(100)->Arg(1000);

void BM_PerspectiveRelaxation(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const SyntheticData sd = make_instance(4 * p, p);
  const QuadForm qf = make_quad_form(sd.data.X, sd.data.y);
  const int tau = std::max(1, p / 5);
  PinSet pins;
  for (int j = 0; j < p; ++j) pins.free_idx.push_back(j);
  for (auto _ : state) {
    RelaxSolution rel = solve_perspective(qf, 0.1, tau, pins);
    benchmark::DoNotOptimize(rel.primal_value);
  }
}
BENCHMARK(BM_PerspectiveRelaxation)->Arg(10)->Arg(15)->Arg(30);

void BM_FoldBounds(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const int n = 4 * p;
  const SyntheticData sd = make_instance(n, p);
  const FoldPartition folds = make_folds(n, 5, 7);
  const auto [Xc, yc] = fold_complement(sd.data.X, sd.data.y, folds.folds[0]);
  const auto [Xf, yf] = fold_rows(sd.data.X, sd.data.y, folds.folds[0]);
  const int tau = std::max(1, p / 5);
  const RelaxSolution rel = solve_perspective(Xc, yc, 0.1, tau);
  const RoundedSolution round = greedy_round(rel, Xc, yc, 0.1, tau);
  const RegGram G = build_gram_chol(Xc);
  const double slack = ellipsoid_slack(rel, round.value);
  for (auto _ : state) {
    AggregatedBounds agg = aggregated_fold_bounds(Xf, yf, rel, G, slack);
    benchmark::DoNotOptimize(agg.lo);
  }
}
BENCHMARK(BM_FoldBounds)->Arg(10)->Arg(15)->Arg(30);

}  // namespace

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
