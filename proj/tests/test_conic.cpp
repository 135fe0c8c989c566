#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dmpc/conic.hpp"
#include "dmpc/solve.hpp"

using namespace dmpc;

namespace {

std::vector<std::string> backends() {
  std::vector<std::string> out{"native"};
  if (backend_available("clarabel")) out.insert(out.begin(), "clarabel");
  return out;
}

SolveOptions opts_for(const std::string& backend) {
  SolveOptions o;
  o.backend = backend;
  return o;
}

}  // namespace

TEST_CASE("svec round trip preserves inner products") {
  Eigen::MatrixXd M(3, 3);
  M << 2, -1, 0.5, -1, 3, 0, 0.5, 0, 1;
  Eigen::MatrixXd N(3, 3);
  N << 1, 2, -3, 2, 0, 1, -3, 1, 4;
  CHECK(unsvec(svec(M), 3).isApprox(M, 1e-14));
  CHECK(svec(M).dot(svec(N)) ==
        doctest::Approx((M.cwiseProduct(N)).sum()).epsilon(1e-12));
}

TEST_CASE("lp: min x subject to x >= 1") {
  for (const auto& be : backends()) {
    CAPTURE(be);
    ConicProgram p;
    auto x = p.add_variable("x", 1);
    p.add_nonneg({p.entry(x, 0) - 1.0});
    p.add_lin_cost(p.entry(x, 0));
    auto r = solve(p, opts_for(be));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.value(x)(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("soc: min t subject to ||(3,4)|| <= t") {
  for (const auto& be : backends()) {
    CAPTURE(be);
    ConicProgram p;
    auto t = p.add_variable("t", 1);
    AffVec cone{p.entry(t, 0), LinExpr(3.0), LinExpr(4.0)};
    p.add_soc(cone);
    p.add_lin_cost(p.entry(t, 0));
    auto r = solve(p, opts_for(be));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.value(t)(0, 0) == doctest::Approx(5.0).epsilon(1e-6));
  }
}

TEST_CASE("sdp: max trace(E) with 0 <= E <= I") {
  // Eigenvalue argument: both eigenvalues of E are pinned to [0, 1], the
  // trace is their sum, so the maximizer is E = I with trace 2.
  for (const auto& be : backends()) {
    CAPTURE(be);
    ConicProgram p;
    auto e = p.add_variable("e", 3);  // svec of symmetric 2x2: e11, e12, e22
    AffMat E(2, 2);
    E(0, 0) = p.entry(e, 0);
    E(0, 1) = p.entry(e, 1);
    E(1, 0) = p.entry(e, 1);
    E(1, 1) = p.entry(e, 2);
    p.add_psd(E);
    AffMat IminusE(2, 2);
    IminusE(0, 0) = LinExpr(1.0) - p.entry(e, 0);
    IminusE(0, 1) = -p.entry(e, 1);
    IminusE(1, 0) = -p.entry(e, 1);
    IminusE(1, 1) = LinExpr(1.0) - p.entry(e, 2);
    p.add_psd(IminusE);
    p.add_lin_cost(-1.0 * (p.entry(e, 0) + p.entry(e, 2)));
    auto r = solve(p, opts_for(be));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.value(e)(0, 0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.value(e)(2, 0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(std::abs(r.value(e)(1, 0)) < 1e-5);
  }
}

TEST_CASE("sdp off-diagonal svec convention: min t with tI - M >= 0") {
  // M = [[1,2],[2,1]] has eigenvalues 3 and -1, so the answer is t = 3.
  for (const auto& be : backends()) {
    CAPTURE(be);
    ConicProgram p;
    auto t = p.add_variable("t", 1);
    AffMat block(2, 2);
    block(0, 0) = p.entry(t, 0) - 1.0;
    block(0, 1) = LinExpr(-2.0);
    block(1, 0) = LinExpr(-2.0);
    block(1, 1) = p.entry(t, 0) - 1.0;
    p.add_psd(block);
    p.add_lin_cost(p.entry(t, 0));
    auto r = solve(p, opts_for(be));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.value(t)(0, 0) == doctest::Approx(3.0).epsilon(1e-6));
  }
}

TEST_CASE("quadratic objective: tracking a point under a box") {
  for (const auto& be : backends()) {
    CAPTURE(be);
    ConicProgram p;
    auto x = p.add_variable("x", 2);
    Eigen::VectorXd target(2);
    target << 3.0, -1.0;
    p.add_quad_cost(p.vec(x) - target);
    // |x_i| <= 2 keeps the optimum on the boundary for x0
    p.add_nonneg(constants(Eigen::VectorXd::Constant(2, 2.0)) - p.vec(x));
    p.add_nonneg(p.vec(x) + AffVec(constants(Eigen::VectorXd::Constant(2, 2.0))));
    auto r = solve(p, opts_for(be));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.value(x)(0, 0) == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(r.value(x)(1, 0) == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("infeasible and unbounded statuses") {
  for (const auto& be : backends()) {
    CAPTURE(be);
    {
      ConicProgram p;
      auto x = p.add_variable("x", 1);
      p.add_nonneg({p.entry(x, 0) - 1.0});
      p.add_nonneg({-1.0 * p.entry(x, 0) - 1.0});  // -x >= 1
      p.add_lin_cost(p.entry(x, 0));
      auto r = solve(p, opts_for(be));
      CHECK(r.status == SolveStatus::Infeasible);
    }
    {
      ConicProgram p;
      auto x = p.add_variable("x", 1);
      p.add_nonneg({-1.0 * p.entry(x, 0)});  // x <= 0
      p.add_lin_cost(p.entry(x, 0));
      auto r = solve(p, opts_for(be));
      CHECK(r.status == SolveStatus::Unbounded);
    }
  }
}

TEST_CASE("check_psd examples") {
  CHECK(check_psd(Eigen::MatrixXd::Identity(2, 2)).psd);
  CHECK(check_psd(Eigen::MatrixXd::Identity(2, 2)).min_eigenvalue ==
        doctest::Approx(1.0));
  Eigen::MatrixXd M(2, 2);
  M << 1, 2, 2, 1;
  auto r = check_psd(M);
  CHECK_FALSE(r.psd);
  CHECK(r.min_eigenvalue == doctest::Approx(-1.0));
  Eigen::MatrixXd N(2, 2);
  N << 2, -1, -1, 2;  // char poly x^2 - 4x + 3 -> eigenvalues 1, 3
  auto rn = check_psd(N);
  CHECK(rn.psd);
  CHECK(rn.min_eigenvalue == doctest::Approx(1.0));
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 1e-3, 0, 1;
  CHECK_THROWS_AS(check_psd(bad), AsymmetryError);
}

TEST_CASE("backends agree on a small corpus") {
  if (!backend_available("clarabel")) return;
  auto make_programs = [] {
    std::vector<ConicProgram> progs;
    {
      ConicProgram p;  // QP with equality
      auto x = p.add_variable("x", 3);
      Eigen::VectorXd tgt(3);
      tgt << 1, 2, 3;
      p.add_quad_cost(p.vec(x) - tgt);
      AffVec sum{p.entry(x, 0) + p.entry(x, 1) + p.entry(x, 2) - 1.0};
      p.add_zero(sum);
      progs.push_back(std::move(p));
    }
    {
      ConicProgram p;  // SOCP
      auto x = p.add_variable("x", 2);
      auto t = p.add_variable("t", 1);
      AffVec cone{p.entry(t, 0), p.entry(x, 0) - 1.0, p.entry(x, 1) + 2.0};
      p.add_soc(cone);
      p.add_nonneg({p.entry(x, 0) + p.entry(x, 1) - 1.0});
      p.add_lin_cost(p.entry(t, 0) + 0.1 * p.entry(x, 0));
      progs.push_back(std::move(p));
    }
    {
      ConicProgram p;  // small SDP
      auto y = p.add_variable("y", 2);
      AffMat B(2, 2);
      B(0, 0) = p.entry(y, 0);
      B(0, 1) = LinExpr(1.0) - p.entry(y, 1);
      B(1, 0) = B(0, 1);
      B(1, 1) = p.entry(y, 1);
      p.add_psd(B);
      p.add_lin_cost(2.0 * p.entry(y, 0) + p.entry(y, 1));
      progs.push_back(std::move(p));
    }
    return progs;
  };
  auto progs = make_programs();
  for (size_t k = 0; k < progs.size(); ++k) {
    CAPTURE(k);
    auto ra = solve(progs[k], opts_for("clarabel"));
    auto rb = solve(progs[k], opts_for("native"));
    REQUIRE(ra.status == SolveStatus::Optimal);
    REQUIRE(rb.status == SolveStatus::Optimal);
    const double scale = std::max(1.0, std::abs(ra.objective));
    CHECK(std::abs(ra.objective - rb.objective) / scale < 1e-5);
  }
}

TEST_CASE("warm-started re-solve reproduces the objective") {
  ConicProgram p;
  auto x = p.add_variable("x", 2);
  Eigen::VectorXd tgt(2);
  tgt << 0.3, 0.7;
  p.add_quad_cost(p.vec(x) - tgt);
  p.add_nonneg({p.entry(x, 0) + p.entry(x, 1) - 1.5});
  auto first = solve(p, opts_for("native"));
  REQUIRE(first.status == SolveStatus::Optimal);
  SolveOptions warm = opts_for("native");
  warm.warm_x = first.x;
  auto second = solve(p, warm);
  REQUIRE(second.status == SolveStatus::Optimal);
  CHECK(std::abs(first.objective - second.objective) <=
        1e-7 * std::max(1.0, std::abs(first.objective)));
  CHECK(second.stats.iterations <= first.stats.iterations);
}

TEST_CASE("session updates track rebuilt programs") {
  for (const auto& be : backends()) {
    CAPTURE(be);
    ConicProgram p;
    auto x = p.add_variable("x", 2);
    Eigen::VectorXd tgt(2);
    tgt << 1.0, 1.0;
    p.add_quad_cost(p.vec(x) - tgt, "track");
    // written constant-first so the row constant equals the pinned value
    p.add_zero({LinExpr(0.25) - p.entry(x, 0)}, "pin");
    auto cp = p.compile();
    SolverSession session(cp, opts_for(be));

    auto r1 = session.solve();
    REQUIRE(r1.status == SolveStatus::Optimal);
    CHECK(r1.value(x)(0, 0) == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(r1.value(x)(1, 0) == doctest::Approx(1.0).epsilon(1e-6));

    // move the pin via b, move the target via w
    const auto pin = cp.row_tags.at("pin");
    session.set_b(pin.first, Eigen::VectorXd::Constant(1, 0.5));
    const auto track = cp.quad_tags.at("track");
    Eigen::VectorXd new_w(2);
    new_w << -2.0, -3.0;  // tracks (2, 3)
    session.set_w(track.first, new_w);
    auto r2 = session.solve();
    REQUIRE(r2.status == SolveStatus::Optimal);
    CHECK(r2.value(x)(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r2.value(x)(1, 0) == doctest::Approx(3.0).epsilon(1e-6));

    Eigen::VectorXd q0 = Eigen::VectorXd::Zero(2);
    q0[1] = 2.0;  // shifts optimum of x1 to 3 - 1
    session.set_q0(q0);
    auto r3 = session.solve();
    REQUIRE(r3.status == SolveStatus::Optimal);
    CHECK(r3.value(x)(1, 0) == doctest::Approx(2.0).epsilon(1e-6));
  }
}

TEST_CASE("cbf dump carries the program structure") {
  ConicProgram p;
  auto x = p.add_variable("x", 2);
  auto t = p.add_variable("t", 1);
  p.add_quad_cost(p.vec(x));
  p.add_soc({p.entry(t, 0), p.entry(x, 0), p.entry(x, 1)});
  AffMat M(2, 2);
  M(0, 0) = p.entry(x, 0) + 1.0;
  M(0, 1) = p.entry(t, 0);
  M(1, 0) = p.entry(t, 0);
  M(1, 1) = LinExpr(2.0);
  p.add_psd(M);
  p.add_nonneg({p.entry(x, 0) + 5.0});
  p.add_lin_cost(p.entry(t, 0));
  const std::string cbf = p.dump_cbf();
  CHECK(cbf.find("VER") != std::string::npos);
  CHECK(cbf.find("PSDCON") != std::string::npos);
  CHECK(cbf.find("OBJACOORD") != std::string::npos);
  CHECK(cbf.find("L+") != std::string::npos);
  CHECK(cbf.find("Q ") != std::string::npos);
  // epigraph of the quadratic objective adds one variable
  CHECK(cbf.find("VAR\n4 1") != std::string::npos);
}

TEST_CASE("program validation rejects malformed input") {
  ConicProgram p;
  auto x = p.add_variable("x", 2);
  AffMat M(2, 2);
  M(0, 0) = p.entry(x, 0);
  M(0, 1) = p.entry(x, 1);
  M(1, 0) = 2.0 * p.entry(x, 1);  // not symmetric
  M(1, 1) = p.entry(x, 0);
  CHECK_THROWS_AS(p.add_psd(M), SchemaError);
  CHECK_THROWS_AS(p.add_variable("x", 1), SchemaError);
  CHECK_THROWS_AS((void)p.entry(x, 2, 0), DimensionError);
}
