#include <doctest.h>

#include <random>

#include "dmpc/model.hpp"
#include "dmpc/powernet.hpp"
#include "test_util.hpp"

using namespace dmpc;
using namespace dmpc::testing;

namespace {

const char* kDecoupledJson = R"({
  "subsystems": [
    {"n": 1, "m": 1,
     "A": [[0.5]], "B": [[1.0]],
     "G": [[1.0],[-1.0]], "g": [1.0, 1.0],
     "Hc": [[1.0],[-1.0]], "hc": [1.0, 1.0],
     "Q": [[1.0]], "R": [[1.0]], "S": [[1.0]]},
    {"n": 1, "m": 1,
     "A": [[0.7]], "B": [[0.5]],
     "G": [[1.0],[-1.0]], "g": [2.0, 2.0],
     "Hc": [[1.0],[-1.0]], "hc": [1.0, 1.0],
     "Q": [[1.0]], "R": [[1.0]], "S": [[1.0]]}
  ],
  "neighbors": [[1], [2]],
  "horizon": 3
})";

const char* kAsymmetricJson = R"({
  "subsystems": [
    {"n": 1, "m": 1,
     "A": [[0.5]], "B": [[1.0]],
     "G": [[1.0],[-1.0]], "g": [1.0, 1.0],
     "Hc": [[1.0],[-1.0]], "hc": [1.0, 1.0],
     "Q": [[1.0]], "R": [[1.0]], "S": [[1.0]]},
    {"n": 1, "m": 1,
     "A": [[0.1, 0.7]], "B": [[0.5]],
     "G": [[0.0, 1.0],[0.0, -1.0]], "g": [2.0, 2.0],
     "Hc": [[1.0],[-1.0]], "hc": [1.0, 1.0],
     "Q": [[1.0, 0.0],[0.0, 1.0]], "R": [[1.0]], "S": [[1.0]]}
  ],
  "neighbors": [[1], [1, 2]],
  "horizon": 3
})";

}  // namespace

TEST_CASE("load: decoupled pair gets identity selectors") {
  TempFile f("net");
  write_file(f.path, kDecoupledJson);
  auto model = NetworkModel::load(f.path);
  CHECK(model.size() == 2);
  CHECK(model.neighbors(0) == std::vector<int>{0});
  CHECK(model.neighbors(1) == std::vector<int>{1});
  CHECK(model.selector(0, 0).isApprox(Eigen::MatrixXd::Identity(1, 1)));
  CHECK(model.horizon() == 3);
  CHECK_FALSE(model.is_continuous());
}

TEST_CASE("load: asymmetric neighbor declaration is rejected") {
  TempFile f("asym");
  write_file(f.path, kAsymmetricJson);
  CHECK_THROWS_AS(NetworkModel::load(f.path), ConventionError);
}

TEST_CASE("load: malformed file and schema violations") {
  TempFile f("bad");
  write_file(f.path, "{ not json");
  CHECK_THROWS_AS(NetworkModel::load(f.path), SchemaError);
  write_file(f.path, R"({"subsystems": [], "neighbors": [], "horizon": 3})");
  CHECK_THROWS_AS(NetworkModel::load(f.path), SchemaError);
}

TEST_CASE("validation: PD weights, zero B columns, empty polytopes") {
  auto base = decoupled_pair();
  {
    auto subs = std::vector<SubsystemModel>{base.subsystem(0), base.subsystem(1)};
    subs[0].Q(0, 0) = -1.0;
    CHECK_THROWS_AS(NetworkModel(subs, {{0}, {1}}, 3), SchemaError);
  }
  {
    auto subs = std::vector<SubsystemModel>{base.subsystem(0), base.subsystem(1)};
    subs[1].B.setZero();
    CHECK_THROWS_AS(NetworkModel(subs, {{0}, {1}}, 3), SchemaError);
  }
  {
    auto subs = std::vector<SubsystemModel>{base.subsystem(0), base.subsystem(1)};
    subs[0].g << -2.0, 1.0;  // x <= -2 and x >= -1: empty
    CHECK_THROWS_AS(NetworkModel(subs, {{0}, {1}}, 3), SchemaError);
  }
  {
    // i not in N_i
    auto subs = std::vector<SubsystemModel>{base.subsystem(0), base.subsystem(1)};
    CHECK_THROWS_AS(NetworkModel(subs, {{1}, {1}}, 3), ConventionError);
  }
}

TEST_CASE("7-PGA benchmark matches the published topology") {
  const auto model = build_power_network();
  CHECK(model.size() == 7);
  // edges 1-2, 2-3, 2-5, 3-4, 4-5, 5-6, 5-7 (1-based)
  CHECK(model.neighbors(0) == std::vector<int>{0, 1});
  CHECK(model.neighbors(1) == std::vector<int>{0, 1, 2, 4});
  CHECK(model.neighbors(2) == std::vector<int>{1, 2, 3});
  CHECK(model.neighbors(3) == std::vector<int>{2, 3, 4});
  CHECK(model.neighbors(4) == std::vector<int>{1, 3, 4, 5, 6});
  CHECK(model.neighbors(5) == std::vector<int>{4, 5});
  CHECK(model.neighbors(6) == std::vector<int>{4, 6});
  CHECK(model.nbhd_dim(4) == 20);
}

TEST_CASE("lift: declared-order concatenation and selector reconstruction") {
  const auto pair = coupled_pair();
  std::vector<Eigen::VectorXd> family(2);
  family[0] = Eigen::VectorXd::Constant(1, 1.0);
  family[1] = Eigen::VectorXd::Constant(1, 2.0);
  const Eigen::VectorXd lifted = pair.lift(family, 0);
  CHECK(lifted.size() == 2);
  CHECK(lifted[0] == 1.0);
  CHECK(lifted[1] == 2.0);

  const auto single = decoupled_pair();
  const Eigen::VectorXd one = single.lift(family, 0);
  CHECK(one.size() == 1);
  CHECK(one[0] == 1.0);

  family[1].resize(0);
  CHECK_THROWS_AS(pair.lift(family, 0), MissingNeighborError);

  // 7-PGA, i = 5 (0-based 4): W_5j x_{N_5} = x_j for every neighbor
  const auto net = build_power_network();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist;
  std::vector<Eigen::VectorXd> states(net.size());
  for (int j = 0; j < net.size(); ++j) {
    states[j] = Eigen::VectorXd::NullaryExpr(4, [&](int) { return dist(rng); });
  }
  const Eigen::VectorXd x_n5 = net.lift(states, 4);
  CHECK(x_n5.size() == 20);
  for (int j : net.neighbors(4)) {
    CHECK((net.selector(4, j) * x_n5).isApprox(states[j], 1e-14));
  }
}

TEST_CASE("selectors: W_ij W_ij^T = I and row-stacking permutes identity") {
  const auto net = build_power_network();
  for (int i = 0; i < net.size(); ++i) {
    for (int j : net.neighbors(i)) {
      const Eigen::MatrixXd W = net.selector(i, j);
      CHECK((W * W.transpose())
                .isApprox(Eigen::MatrixXd::Identity(W.rows(), W.rows()), 1e-14));
    }
    Eigen::MatrixXd stacked(net.nbhd_dim(i), net.nbhd_dim(i));
    int row = 0;
    for (int j : net.neighbors(i)) {
      const Eigen::MatrixXd W = net.selector(i, j);
      stacked.block(row, 0, W.rows(), W.cols()) = W;
      row += static_cast<int>(W.rows());
    }
    CHECK((stacked * stacked.transpose())
              .isApprox(Eigen::MatrixXd::Identity(net.nbhd_dim(i),
                                                  net.nbhd_dim(i)),
                        1e-14));
  }
}

TEST_CASE("stage cost: trivial values and quadratic-form oracle") {
  const auto pair = coupled_pair();
  Eigen::VectorXd x(2), xe(2), u(1), ue(1);
  x << 1, 1;
  xe << 0, 0;
  u << 2;
  ue << 0;
  CHECK(pair.stage_cost(0, x, u, x, u) == 0.0);
  CHECK(pair.stage_cost(0, x, u, xe, ue) == doctest::Approx(6.0));

  const auto net = build_power_network();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dist;
  for (int i = 0; i < net.size(); ++i) {
    const int nn = net.nbhd_dim(i);
    const auto rand_vec = [&](int len) {
      return Eigen::VectorXd::NullaryExpr(len, [&](int) { return dist(rng); });
    };
    const Eigen::VectorXd xi = rand_vec(nn), xei = rand_vec(nn);
    const Eigen::VectorXd ui = rand_vec(1), uei = rand_vec(1);
    // independent dense recomputation of the quadratic forms
    double expected = 0.0;
    const auto& s = net.subsystem(i);
    for (int r = 0; r < nn; ++r)
      for (int c = 0; c < nn; ++c)
        expected += (xi[r] - xei[r]) * s.Q(r, c) * (xi[c] - xei[c]);
    expected += (ui[0] - uei[0]) * s.R(0, 0) * (ui[0] - uei[0]);
    const double got = net.stage_cost(i, xi, ui, xei, uei);
    CHECK(std::abs(got - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
  }

  Eigen::VectorXd wrong(3);
  CHECK_THROWS_AS(pair.stage_cost(0, wrong, u, xe, ue), DimensionError);
}

TEST_CASE("save/load round trip is field-exact") {
  const auto net = build_power_network();
  TempFile f("roundtrip");
  net.save(f.path);
  const auto again = NetworkModel::load(f.path);
  CHECK(net == again);
  TempFile f2("roundtrip2");
  again.save(f2.path);
  CHECK(read_file(f.path) == read_file(f2.path));
}

TEST_CASE("reference signal segments") {
  ReferenceSignal ref;
  ref.segments.push_back({0, Eigen::VectorXd::Constant(2, 1.0)});
  ref.segments.push_back({5, Eigen::VectorXd::Constant(2, -1.0)});
  CHECK(ref.at(0)[0] == 1.0);
  CHECK(ref.at(4)[1] == 1.0);
  CHECK(ref.at(5)[0] == -1.0);
  CHECK(ref.at(100)[0] == -1.0);

  TempFile f("ref");
  save_reference(ref, f.path);
  const auto again = load_reference(f.path);
  REQUIRE(again.segments.size() == 2);
  CHECK(again.segments[1].start_time == 5);
  CHECK(again.segments[1].x_r == ref.segments[1].x_r);
}
