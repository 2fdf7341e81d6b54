#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "sparsecv/relax.hpp"

using namespace sparsecv;

TEST_SUITE_BEGIN("relax");

TEST_CASE("water-filling penalty closed forms") {
  SUBCASE("at most tau nonzeros: plain squared norm, indicator z") {
    Eigen::VectorXd beta(4);
    beta << 2.0, 0.0, -1.0, 0.0;
    WaterFill w = persp_penalty(beta, 2);
    CHECK(w.value == doctest::Approx(5.0));
    CHECK(w.z[0] == 1.0);
    CHECK(w.z[1] == 0.0);
    CHECK(w.z[2] == 1.0);
    CHECK(w.z[3] == 0.0);
  }
  SUBCASE("binding budget without caps: squared l1 over tau") {
    Eigen::VectorXd beta(2);
    beta << 3.0, 1.0;
    WaterFill w = persp_penalty(beta, 1);
    CHECK(w.value == doctest::Approx(16.0));
    CHECK(w.z[0] == doctest::Approx(0.75));
    CHECK(w.z[1] == doctest::Approx(0.25));
  }
  SUBCASE("zero vector") {
    WaterFill w = persp_penalty(Eigen::VectorXd::Zero(3), 2);
    CHECK(w.value == 0.0);
    CHECK(w.z.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("grid verification of the binding case") {
    Eigen::VectorXd beta(2);
    beta << 3.0, 1.0;
    double best = 1e300;
    for (int i = 1; i <= 100000; ++i) {
      const double z1 = static_cast<double>(i) / 100000.0;
      const double z2 = 1.0 - z1;
      if (z2 <= 0.0) continue;
      best = std::min(best, 9.0 / z1 + 1.0 / z2);
    }
    CHECK(persp_penalty(beta, 1).value == doctest::Approx(best).epsilon(1e-8));
  }
}

TEST_CASE("water-filling dominates the plain squared norm") {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    const int p = 1 + static_cast<int>(rng() % 8);
    Eigen::VectorXd beta(p);
    for (int i = 0; i < p; ++i) beta[i] = nd(rng);
    const int tau = 1 + static_cast<int>(rng() % p);
    WaterFill w = persp_penalty(beta, tau);
    CHECK(w.value >= beta.squaredNorm() - 1e-10);
    int nnz = 0;
    for (int i = 0; i < p; ++i) {
      if (beta[i] != 0.0) ++nnz;
    }
    if (nnz <= tau) {
      CHECK(w.value == doctest::Approx(beta.squaredNorm()));
    } else {
      // Budget binds: the z allocation saturates it.
      CHECK(w.z.sum() == doctest::Approx(static_cast<double>(tau)).epsilon(1e-9));
    }
    CHECK(w.z.minCoeff() >= 0.0);
    CHECK(w.z.maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("relaxation at tau = p is exactly ridge regression") {
  std::mt19937_64 rng(53);
  oracle::Instance inst = oracle::random_instance(rng, 15, 4);
  const double gamma = 0.3;
  RelaxSolution rel = solve_perspective(inst.X, inst.y, gamma, 4);
  std::vector<int> all{0, 1, 2, 3};
  oracle::Fit ridge = oracle::ridge_on(inst.X, inst.y, gamma, all);
  CHECK(rel.primal_value ==
        doctest::Approx(ridge.value).epsilon(1e-8));
  CHECK(rel.converged);
  CHECK(rel.gap <= 1e-6 * std::max(1.0, std::abs(rel.primal_value)));
}

TEST_CASE("p=2 relaxation matches the dense z-grid oracle") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 12; ++trial) {
    oracle::Instance inst = oracle::random_instance(rng, 8, 2, 0.4, 2, 0.7);
    const double gamma = (trial % 2 == 0) ? 0.1 : 1.0;
    RelaxSolution rel = solve_perspective(inst.X, inst.y, gamma, 1);
    const double ref = oracle::persp_p2_min(inst.X, inst.y, gamma, 1.0);
    CHECK(rel.primal_value ==
          doctest::Approx(ref).epsilon(1e-5));
  }
}

TEST_CASE("relaxation solution invariants hold on random instances") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 3 + static_cast<int>(rng() % 6);
    const int n = p + 4 + static_cast<int>(rng() % 20);
    oracle::Instance inst = oracle::random_instance(rng, n, p);
    const int tau = 1 + static_cast<int>(rng() % p);
    const double gamma = 0.05 * (1 + static_cast<int>(rng() % 20));
    RelaxSolution rel = solve_perspective(inst.X, inst.y, gamma, tau);

    CHECK(rel.z.minCoeff() >= 0.0);
    CHECK(rel.z.maxCoeff() <= 1.0 + 1e-12);
    CHECK(rel.z.sum() <= tau + 1e-9);
    CHECK(rel.dual_value <= rel.primal_value + 1e-9);
    CHECK(rel.gap >= 0.0);
    for (int i = 0; i < p; ++i) {
      if (rel.z[i] == 0.0) CHECK(std::abs(rel.beta[i]) <= 1e-10);
    }

    // Certified lower bound on the integer optimum.
    oracle::Fit best = oracle::enum_best(inst.X, inst.y, gamma, tau);
    CHECK(rel.dual_value <= best.value + 1e-7 * std::max(1.0, best.value));
  }
}

TEST_CASE("relaxation value is non-increasing in tau") {
  std::mt19937_64 rng(67);
  oracle::Instance inst = oracle::random_instance(rng, 25, 6);
  double prev = 1e300;
  for (int tau = 1; tau <= 6; ++tau) {
    RelaxSolution rel = solve_perspective(inst.X, inst.y, 0.2, tau);
    CHECK(rel.primal_value <= prev + 1e-8 * std::max(1.0, prev));
    prev = rel.primal_value;
  }
}

TEST_CASE("greedy rounding sandwiches the enumeration optimum") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    oracle::Instance inst = oracle::random_instance(rng, 30, 8);
    const double gamma = 0.25;
    const int tau = 3;
    RelaxSolution rel = solve_perspective(inst.X, inst.y, gamma, tau);
    RoundedSolution round = greedy_round(rel, inst.X, inst.y, gamma, tau);
    oracle::Fit best = oracle::enum_best(inst.X, inst.y, gamma, tau);

    CHECK(static_cast<int>(round.support.size()) <= tau);
    const double tol = 1e-7 * std::max(1.0, best.value);
    CHECK(round.value >= best.value - tol);
    CHECK(round.value >= rel.dual_value - tol);
    CHECK(rel.dual_value <= best.value + tol);
  }
}

TEST_CASE("greedy rounding through the quadratic form matches the matrix path") {
  std::mt19937_64 rng(73);
  oracle::Instance inst = oracle::random_instance(rng, 20, 6);
  QuadForm qf = make_quad_form(inst.X, inst.y);
  RelaxSolution rel = solve_perspective(inst.X, inst.y, 0.5, 2);
  RoundedSolution a = greedy_round(rel, inst.X, inst.y, 0.5, 2);
  RoundedSolution b = greedy_round(rel, qf, 0.5, 2);
  CHECK(a.support == b.support);
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
}

TEST_CASE("tau = p rounding returns the relaxation value") {
  std::mt19937_64 rng(79);
  oracle::Instance inst = oracle::random_instance(rng, 18, 5);
  RelaxSolution rel = solve_perspective(inst.X, inst.y, 0.8, 5);
  RoundedSolution round = greedy_round(rel, inst.X, inst.y, 0.8, 5);
  CHECK(round.value == doctest::Approx(rel.primal_value).epsilon(1e-7));
}

TEST_CASE("pinned coordinates are respected") {
  std::mt19937_64 rng(83);
  oracle::Instance inst = oracle::random_instance(rng, 20, 5);
  QuadForm qf = make_quad_form(inst.X, inst.y);
  PinSet pins;
  pins.free_idx = {0, 2, 4};
  pins.one_idx = {1};
  // tau=2 with one pinned-on coordinate leaves one unit of budget for the
  // three free coordinates; coordinate 3 is pinned off.
  RelaxSolution rel = solve_perspective(qf, 0.3, 2, pins);
  CHECK(std::abs(rel.beta[3]) <= 1e-12);
  CHECK(rel.z[3] == 0.0);
  CHECK(rel.z[1] == doctest::Approx(1.0));
  CHECK(rel.z.sum() <= 2.0 + 1e-9);
  CHECK(rel.dual_value <= rel.primal_value + 1e-9);
}

TEST_CASE("warm starts do not change the answer") {
  std::mt19937_64 rng(89);
  oracle::Instance inst = oracle::random_instance(rng, 25, 7);
  QuadForm qf = make_quad_form(inst.X, inst.y);
  PinSet pins;
  pins.free_idx = {0, 1, 2, 3, 4, 5, 6};
  RelaxSolution cold = solve_perspective(qf, 0.4, 3, pins);
  PerspOptions opts;
  opts.warm_beta = cold.beta;
  RelaxSolution warm = solve_perspective(qf, 0.4, 3, pins, opts);
  CHECK(warm.primal_value ==
        doctest::Approx(cold.primal_value).epsilon(1e-6));
  CHECK(warm.iterations <= cold.iterations);
}

TEST_SUITE_END();
