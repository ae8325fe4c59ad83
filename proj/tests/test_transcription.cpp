#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "radau_hp/solver.hpp"
#include "radau_hp/transcription.hpp"
#include "test_support.hpp"

using namespace radau_hp;
using testing::perturbed;

namespace {

// f = 0, C = 0, no running cost
ControlProblem zero_problem(int n, int m)
{
  ControlProblem p;
  p.name              = "zero";
  p.state_dim         = n;
  p.control_dim       = m;
  p.initial_state     = Eigen::VectorXd::LinSpaced(n, 0.5, 1.5);
  p.dynamics          = [n](const Eigen::VectorXd &, const Eigen::VectorXd &) { return Eigen::VectorXd::Zero(n); };
  p.dynamics_jacobian = [n, m](const Eigen::VectorXd &, const Eigen::VectorXd &) {
    return DynamicsJacobian{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, m)};
  };
  p.dynamics_hessian = [n, m](const Eigen::VectorXd &, const Eigen::VectorXd &, const Eigen::VectorXd &) {
    return HessianBlocks{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, m), Eigen::MatrixXd::Zero(m, m)};
  };
  p.terminal_cost     = [](const Eigen::VectorXd &) { return 0.0; };
  p.terminal_gradient = [n](const Eigen::VectorXd &) { return Eigen::VectorXd::Zero(n); };
  p.terminal_hessian  = [n](const Eigen::VectorXd &) { return Eigen::MatrixXd::Zero(n, n); };
  p.control_bounds    = Box::unbounded(m);
  p.state_bounds      = Box::unbounded(n);
  return p;
}

double sup_t1_to_t5(const KktResidual & r)
{
  return std::max({r.block_sup[0], r.block_sup[1], r.block_sup[2], r.block_sup[3], r.block_sup[4]});
}

}  // namespace

TEST_CASE("zero dynamics with constant state gives a zero residual")
{
  const auto p    = zero_problem(2, 1);
  const auto mesh = HpMesh::uniform(0.0, 1.0, 3, 4);
  const auto sc   = schemes_for(mesh);
  auto s          = DiscreteSolution::zeros(mesh, 2, 1);
  for (auto & X : s.X) { X.colwise() = p.initial_state; }
  const auto r = assemble_kkt_residual(mesh, sc, p, s);
  CHECK(r.sup_norm < 1e-14);
  CHECK(r.composite_norm < 1e-13);
}

TEST_CASE("residual of the sampled example 1 reference decays with K")
{
  const auto [p, ref] = builtin_problem("example1");
  double prev         = 1e300;
  for (int K : {4, 8, 16, 32}) {
    CAPTURE(K);
    const auto mesh = HpMesh::uniform(p.t_start, p.t_end, K, 3);
    const auto sc   = schemes_for(mesh);
    const double r  = sup_t1_to_t5(assemble_kkt_residual(mesh, sc, p, sample_reference(mesh, sc, p, ref)));
    if (K >= 16) { CHECK(r <= 1e-3); }
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("dimension mismatches are rejected")
{
  const auto [p, ref] = builtin_problem("example1");
  const auto mesh     = HpMesh::uniform(0.0, 2.0, 2, 3);
  const auto other    = schemes_for(HpMesh::uniform(0.0, 2.0, 2, 4));
  const auto s        = DiscreteSolution::zeros(mesh, 1, 1);
  CHECK_THROWS_AS(assemble_kkt_residual(mesh, other, p, s), std::invalid_argument);
  auto bad = s;
  bad.U[1] = Eigen::MatrixXd::Zero(1, 2);
  CHECK_THROWS_AS(assemble_kkt_residual(mesh, schemes_for(mesh), p, bad), std::invalid_argument);
}

TEST_CASE("layout round trip and block structure")
{
  const HpMesh mesh({0.0, 0.3, 1.0, 1.2}, {2, 5, 3});
  const KktLayout L(mesh, 2, 1);
  CHECK(L.variables() == L.rows());
  std::mt19937_64 rng(1);
  const auto s         = perturbed(DiscreteSolution::zeros(mesh, 2, 1), rng, 1.0);
  const auto round     = L.unflatten(L.flatten(s));
  for (int k = 0; k < 3; ++k) {
    CHECK(round.X[k] == s.X[k]);
    CHECK(round.U[k] == s.U[k]);
    CHECK(round.Lambda[k] == s.Lambda[k]);
  }
  CHECK(round.lambda_terminal == s.lambda_terminal);
  CHECK_THROWS_AS(L.unflatten(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("Jacobian matches central differences and sparse equals dense")
{
  std::mt19937_64 rng(11);
  for (const char * name : {"example1", "example2"}) {
    CAPTURE(name);
    const auto [p, ref] = builtin_problem(name);
    const HpMesh mesh   = std::string(name) == "example1" ? HpMesh::uniform(0.0, 2.0, 3, 3)
                                                          : HpMesh::with_degree({0.0, 0.25, 0.75, 1.0}, 3);
    const auto sc       = schemes_for(mesh);
    const KktLayout L(mesh, 1, 1);
    for (int probe = 0; probe < 5; ++probe) {
      const auto s          = perturbed(sample_reference(mesh, sc, p, ref), rng, 0.2);
      const ActiveSet act   = detect_active_set(mesh, sc, p, s);
      const Eigen::MatrixXd J = assemble_kkt_jacobian(mesh, sc, p, s, act);
      CHECK((Eigen::MatrixXd(assemble_kkt_jacobian_sparse(mesh, sc, p, s, act)) - J).cwiseAbs().maxCoeff() == 0.0);

      Eigen::VectorXd v = Eigen::VectorXd::Random(L.variables()).normalized();
      const double eps  = 1e-6;
      const Eigen::VectorXd th = L.flatten(s);
      const auto sp = L.unflatten(th + eps * v), sm = L.unflatten(th - eps * v);
      if (!(detect_active_set(mesh, sc, p, sp) == act) || !(detect_active_set(mesh, sc, p, sm) == act)) { continue; }
      const Eigen::VectorXd fd =
        (assemble_kkt_residual(mesh, sc, p, sp).stacked() - assemble_kkt_residual(mesh, sc, p, sm).stacked()) / (2 * eps);
      const Eigen::VectorXd jv = J * v;
      CHECK((fd - jv).norm() <= 1e-5 * std::max(1.0, jv.norm()));
    }
  }
}

TEST_CASE("linear-quadratic Jacobian does not depend on the point")
{
  const auto [p, ref] = builtin_problem("example2");
  const auto mesh     = HpMesh::with_degree({0.0, 0.25, 0.75, 1.0}, 4);
  const auto sc       = schemes_for(mesh);
  std::mt19937_64 rng(5);
  const auto base = sample_reference(mesh, sc, p, ref);
  const auto act  = detect_active_set(mesh, sc, p, base);
  const auto J1   = assemble_kkt_jacobian(mesh, sc, p, perturbed(base, rng, 0.5), act);
  const auto J2   = assemble_kkt_jacobian(mesh, sc, p, perturbed(base, rng, 0.5), act);
  CHECK(J1 == J2);
}

TEST_CASE("continuity rows hold only unit entries")
{
  const auto [p, ref] = builtin_problem("example1");
  const auto mesh     = HpMesh::uniform(0.0, 2.0, 4, 3);
  const auto sc       = schemes_for(mesh);
  const KktLayout L(mesh, 1, 1);
  const auto J = assemble_kkt_jacobian(mesh, sc, p, sample_reference(mesh, sc, p, ref));
  for (int k = 0; k < 4; ++k) {
    const Eigen::VectorXd row = J.row(L.t2(k)).transpose();
    int plus = 0, minus = 0;
    for (Eigen::Index c = 0; c < row.size(); ++c) {
      if (row(c) == 1.0) { ++plus; }
      else if (row(c) == -1.0) { ++minus; }
      else { CHECK(row(c) == 0.0); }
    }
    CHECK(plus == 1);
    CHECK(minus == (k == 0 ? 0 : 1));
  }
}

TEST_CASE("multiplier transform")
{
  const auto mesh = HpMesh::uniform(0.0, 1.0, 2, 1);
  const auto sc   = schemes_for(mesh);
  RawMultipliers raw;
  raw.lambda   = {Eigen::MatrixXd::Constant(1, 2, 3.0), Eigen::MatrixXd::Constant(1, 2, -4.0)};
  raw.terminal = Eigen::VectorXd::Constant(1, 0.5);
  const auto L = transform_multipliers(raw, sc);
  CHECK(L[0](0, 1) == 1.5);
  CHECK(L[0](0, 0) == 3.0);
  CHECK(L[1](0, 1) == -2.0);

  std::mt19937_64 rng(2);
  const auto mesh2 = HpMesh({0.0, 0.5, 2.0}, {4, 7});
  const auto sc2   = schemes_for(mesh2);
  const auto s     = perturbed(DiscreteSolution::zeros(mesh2, 2, 1), rng, 1.0);
  const auto back  = transform_multipliers(raw_multipliers(s, sc2), sc2);
  for (int k = 0; k < 2; ++k) { CHECK((back[k] - s.Lambda[k]).cwiseAbs().maxCoeff() < 1e-15); }
}

TEST_CASE("T4 equals the weighted aggregation of T3")
{
  const auto [p, ref] = builtin_problem("example1");
  const auto mesh     = HpMesh::uniform(0.0, 2.0, 5, 4);
  const auto sc       = schemes_for(mesh);
  std::mt19937_64 rng(9);
  const auto s = perturbed(sample_reference(mesh, sc, p, ref), rng, 0.3);
  const auto r = assemble_kkt_residual(mesh, sc, p, s);
  Eigen::Index at = 0;
  for (int k = 0; k < 5; ++k) {
    const auto & c        = *sc[k];
    const Eigen::VectorXd dl = c.dddag * s.Lambda[k].row(0).tail(4).transpose();
    double agg            = s.Lambda[k](0, 0);
    for (int i = 0; i < 4; ++i) { agg += c.weights(i) * (dl(i) - r.t3(at + i)); }
    CHECK(std::abs(agg - r.t4(k)) < 1e-11);
    at += 4;
  }
}

TEST_CASE("converged solution: raw system, mesh-point identity, composite norm")
{
  for (const char * name : {"example1", "example2"}) {
    CAPTURE(name);
    const auto [p, ref] = builtin_problem(name);
    const HpMesh mesh   = std::string(name) == "example1" ? HpMesh::uniform(0.0, 2.0, 6, 3)
                                                          : HpMesh::with_degree({0.0, 0.25, 0.75, 1.0}, 8);
    const auto sc       = schemes_for(mesh);
    SolveOptions o;
    o.tol          = 1e-10;
    const auto res = solve(p, mesh, sc, o);
    REQUIRE(res.converged());
    const auto r = assemble_kkt_residual(mesh, sc, p, res.solution);
    CHECK(r.composite_norm <= 1e-10);
    CHECK(mesh_point_identity_error(sc, res.solution) < 1e-9);
    const auto raw = assemble_raw_kkt_residual(mesh, sc, p, res.solution, raw_multipliers(res.solution, sc));
    CHECK(raw.sup_norm < 1e-9);
  }
}

TEST_CASE("interpolation of a discrete solution")
{
  const auto [p, ref] = builtin_problem("example1");
  const auto mesh     = HpMesh::uniform(0.0, 2.0, 8, 3);
  const auto sc       = schemes_for(mesh);
  const auto res      = solve(p, mesh, sc);
  REQUIRE(res.converged());
  const auto & s = res.solution;

  const double t = mesh.time(2, sc[2]->nodes(2));
  const auto pt  = interpolate_solution(mesh, sc, s, t);
  CHECK(pt.x(0) == s.X[2](0, 2));
  CHECK(pt.u(0) == s.U[2](0, 1));
  CHECK(pt.lambda(0) == s.Lambda[2](0, 2));

  // at a mesh point the costate and control come from the left interval
  const auto mp = interpolate_solution(mesh, sc, s, mesh.breakpoints()[3]);
  CHECK(mp.lambda(0) == s.Lambda[2](0, 3));
  CHECK(mp.x(0) == doctest::Approx(s.X[3](0, 0)).epsilon(1e-14));

  const auto at0 = interpolate_solution(mesh, sc, s, 0.0);
  double colloc_err = 0.0;
  for (int i = 1; i <= 3; ++i) {
    colloc_err = std::max(colloc_err, std::abs(s.Lambda[0](0, i) - ref.costate(mesh.time(0, sc[0]->nodes(i)))(0)));
  }
  CHECK(std::abs(at0.lambda(0) - ref.costate(0.0)(0)) <= 5.0 * colloc_err);

  const auto mpp = interpolate_solution(mesh, sc, s, 0.61, &p, ControlEvaluation::MinimumPrinciple);
  CHECK(mpp.u(0) == doctest::Approx(mpp.x(0) / 2.0).epsilon(1e-12));

  CHECK_THROWS_AS(interpolate_solution(mesh, sc, s, 2.5), std::out_of_range);
  CHECK_THROWS_AS(interpolate_solution(mesh, sc, s, -0.1), std::out_of_range);
}

TEST_CASE("linear data is reproduced between nodes")
{
  const auto mesh = HpMesh({0.0, 0.4, 1.0}, {3, 5});
  const auto sc   = schemes_for(mesh);
  auto s          = DiscreteSolution::zeros(mesh, 1, 1);
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j <= mesh.degree(k); ++j) { s.X[k](0, j) = 3.0 * mesh.time(k, sc[k]->nodes(j)) - 1.0; }
  }
  for (double t : {0.2, 0.7, 0.95}) { CHECK(std::abs(interpolate_solution(mesh, sc, s, t).x(0) - (3.0 * t - 1.0)) < 1e-13); }
}

TEST_CASE("assumption diagnostics")
{
  const auto [p, ref] = builtin_problem("example1");
  const auto a4       = assumption_diagnostics(p, ref, HpMesh::uniform(0.0, 2.0, 4, 2));
  const auto a5       = assumption_diagnostics(p, ref, HpMesh::uniform(0.0, 2.0, 5, 2));
  CHECK(a4.d1 == doctest::Approx(2.5 * (1.0 - ref.control(2.0)(0))).epsilon(1e-6));
  CHECK(a4.d1 == doctest::Approx(a4.d2));
  CHECK(std::abs(a4.d1 - 2.49) < 0.01);
  CHECK(!a4.a2_ok);
  CHECK(a5.a2_ok);

  const auto z  = zero_problem(1, 1);
  AnalyticReference zr;
  zr.state   = [](double) { return Eigen::VectorXd::Constant(1, 0.5); };
  zr.control = [](double) { return Eigen::VectorXd::Zero(1); };
  const auto az = assumption_diagnostics(z, zr, HpMesh::uniform(0.0, 1.0, 1, 2));
  CHECK(az.d1 == 0.0);
  CHECK(az.d2 == 0.0);
  CHECK(az.a2_ok);

  const auto [p2, ref2] = builtin_problem("example2");
  const auto a2         = assumption_diagnostics(p2, ref2, HpMesh::uniform(0.0, 1.0, 1, 2));
  CHECK(a2.min_hessian_eig == doctest::Approx(1.0));
  CHECK(a2.min_hamiltonian_eig == doctest::Approx(1.0));
}
