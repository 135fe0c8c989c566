#include <doctest.h>

#include <random>

#include "dmpc/discretize.hpp"
#include "dmpc/powernet.hpp"
#include "test_util.hpp"

using namespace dmpc;
using namespace dmpc::testing;

TEST_CASE("matrix exponential: trivial and series-oracle values") {
  CHECK(matrix_exponential(Eigen::MatrixXd::Zero(3, 3), 1.0)
            .isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-14));

  Eigen::MatrixXd N(2, 2);
  N << 0, 1, 0, 0;  // nilpotent: series terminates exactly
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 1, 0, 1;
  CHECK(matrix_exponential(N, 1.0).isApprox(expected, 1e-15));

  // scalar a = -1, h = 1 against an independent plain series oracle
  double oracle = 0.0, term = 1.0;
  for (int k = 0; k <= 60; ++k) {
    oracle += term;
    term *= -1.0 / (k + 1);
  }
  const double got = matrix_exponential(Eigen::MatrixXd::Constant(1, 1, -1.0),
                                        1.0)(0, 0);
  CHECK(std::abs(got - oracle) < 1e-12);
  CHECK(got == doctest::Approx(0.367879441).epsilon(1e-8));
}

TEST_CASE("matrix exponential: inverse residual on random matrices") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 6);
    Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(
        n, n, [&](int, int) { return dist(rng); });
    const double h = 0.1 + 2.0 * std::generate_canonical<double, 53>(rng);
    const Eigen::MatrixXd E = matrix_exponential(A, h);
    const Eigen::MatrixXd Einv = matrix_exponential(A, -h);
    CHECK((E * Einv - Eigen::MatrixXd::Identity(n, n)).norm() <= 1e-8);
  }
}

TEST_CASE("pattern projection: zeroing, idempotence, optimality") {
  SparsityPattern diag;
  diag.blocks = {{0, 0}, {1, 1}};
  const std::vector<int> off{0, 1, 2};

  Eigen::MatrixXd M(2, 2);
  M << 1, 1, 0, 1;
  const Eigen::MatrixXd P = project_pattern(M, diag, off, off);
  CHECK(P(0, 0) == 1.0);
  CHECK(P(0, 1) == 0.0);
  CHECK(P(1, 1) == 1.0);

  CHECK(project_pattern(P, diag, off, off) == P);  // idempotent

  std::mt19937_64 rng(17);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd X = Eigen::MatrixXd::NullaryExpr(
        2, 2, [&](int, int) { return dist(rng); });
    const Eigen::MatrixXd PX = project_pattern(X, diag, off, off);
    CHECK(PX.norm() <= X.norm() + 1e-15);  // nonexpansive
    // any other pattern-feasible matrix is at least as far from X
    for (int k = 0; k < 10; ++k) {
      Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(2, 2);
      Y(0, 0) = dist(rng);
      Y(1, 1) = dist(rng);
      CHECK((PX - X).norm() <= (Y - X).norm() + 1e-12);
    }
  }
}

TEST_CASE("discretize: decoupled model reduces to blockwise exponential") {
  auto cont = decoupled_pair(-1.0, 1.0);
  std::vector<SubsystemModel> subs{cont.subsystem(0), cont.subsystem(1)};
  auto model = NetworkModel(subs, {{0}, {1}}, 3, /*continuous=*/true,
                            /*sampling_time=*/0.5);
  DiscretizeReport report;
  const auto disc = discretize_network(model, 0.5, &report);
  CHECK_FALSE(disc.is_continuous());
  CHECK(disc.sampling_time() == 0.5);
  const double expected = std::exp(-0.5);
  CHECK(disc.subsystem(0).A(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  // exact integral of e^{-s} over [0, 0.5]
  CHECK(disc.subsystem(0).B(0, 0) ==
        doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-12));
  CHECK_FALSE(report.instability_warning);
  CHECK(report.spectral_radius_projected ==
        doctest::Approx(report.spectral_radius_exact).epsilon(1e-12));
}

TEST_CASE("discretize: rejects discrete models and bad sampling times") {
  auto disc = decoupled_pair();
  CHECK_THROWS_AS(discretize_network(disc, 1.0), SchemaError);
  auto cont = NetworkModel({disc.subsystem(0), disc.subsystem(1)}, {{0}, {1}},
                           3, true, 1.0);
  CHECK_THROWS_AS(discretize_network(cont, 0.0), SchemaError);
}

TEST_CASE("discretize: 7-PGA keeps the coupling pattern exactly") {
  const auto cont = build_power_network();
  DiscretizeReport report;
  const auto disc = discretize_network(cont, 1.0, &report);
  const Eigen::MatrixXd Ad = disc.global_A();
  for (int i = 0; i < disc.size(); ++i) {
    for (int j = 0; j < disc.size(); ++j) {
      if (disc.is_neighbor(i, j)) continue;
      const Eigen::MatrixXd blk =
          Ad.block(disc.state_offset(i), disc.state_offset(j), 4, 4);
      CHECK(blk.cwiseAbs().maxCoeff() == 0.0);
    }
  }
  // warning flag consistent with the recorded spectral radii
  CHECK(report.instability_warning ==
        (report.spectral_radius_projected > 1.1 * report.spectral_radius_exact));
}

TEST_CASE("pattern from model contains all diagonal blocks") {
  const auto net = build_power_network();
  const auto pattern = SparsityPattern::from_model(net);
  pattern.validate(net.size());
  for (int i = 0; i < net.size(); ++i) {
    CHECK(pattern.allows(i, i));
    for (int j : net.neighbors(i)) CHECK(pattern.allows(i, j));
  }
  CHECK_FALSE(pattern.allows(0, 6));
  SparsityPattern broken;
  broken.blocks = {{0, 1}};
  CHECK_THROWS_AS(broken.validate(2), SchemaError);
}
