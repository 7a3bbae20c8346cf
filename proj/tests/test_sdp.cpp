#include <doctest.h>

#include <cmath>

#include "densyn/sdp.hpp"
#include "densyn/sos.hpp"

using namespace densyn;
using namespace densyn::sdp;

namespace {

// min tr(X) s.t. X11 = 1, X 1x1.
SdpProblem trace_problem() {
  SdpProblem p;
  p.block_sizes = {1};
  p.objective_blocks = {{0, 0, 0, 1.0}};
  p.constraints = {{{{0, 0, 0, 1.0}}, {}, 1.0}};
  return p;
}

// min x+ + x- s.t. x+ - x- = 3.
SdpProblem l1_problem() {
  SdpProblem p;
  p.num_nonneg = 2;
  p.objective_linear = Vector::Ones(2);
  p.constraints = {{{}, {{0, 1.0}, {1, -1.0}}, 3.0}};
  return p;
}

// Gram feasibility for a univariate polynomial c0 + c1 x + c2 x^2 over z = (1, x).
SdpProblem gram_problem(double c0, double c1, double c2) {
  SdpProblem p;
  p.block_sizes = {2};
  p.constraints = {{{{0, 0, 0, 1.0}}, {}, c0}, {{{0, 1, 0, 1.0}}, {}, c1 / 2.0}, {{{0, 1, 1, 1.0}}, {}, c2}};
  return p;
}

// Same feasibility question through the SOS compiler (x^2 - 1, -x^2, ...).
SdpProblem sos_gram_problem(const Vector& coeffs) {
  SosProgram prog;
  prog.layout.n = 1;
  prog.layout.m = 0;
  prog.weights = Vector(0);
  AffinePolyMap map{build_basis(1, static_cast<int>(coeffs.size()) - 1), Matrix::Zero(coeffs.size(), 0), coeffs};
  prog.constraints.push_back({"p", map});
  return compile_sdp(prog).problem;
}

void check_optimal_residuals(const SdpProblem& p, const SdpSolution& s, double tol = 1e-7) {
  REQUIRE(s.status == Status::optimal);
  const ResidualReport r = check_solution(p, {s.X, s.x, s.y});
  CHECK(r.primal_residual <= tol);
  CHECK(r.dual_residual <= tol);
  CHECK(r.duality_gap <= tol);
  for (double e : r.min_eigenvalue) CHECK(e >= -tol);
  for (double e : r.dual_min_eigenvalue) CHECK(e >= -tol);
  CHECK(r.min_nonneg >= -tol);
  CHECK(r.dual_min_nonneg >= -tol);
  CHECK(std::max({s.primal_residual, s.dual_residual, s.duality_gap}) <= tol);
  // Weak duality on the returned point.
  CHECK(r.primal_objective >= r.dual_objective - 1e-9 * (1 + std::abs(r.primal_objective)));
}

}  // namespace

TEST_CASE("analytic problems") {
  const SdpProblem t = trace_problem();
  const SdpSolution st = solve(t);
  check_optimal_residuals(t, st);
  CHECK(std::abs(st.primal_objective - 1.0) <= 1e-6);

  const SdpProblem l = l1_problem();
  const SdpSolution sl = solve(l);
  check_optimal_residuals(l, sl);
  CHECK(std::abs(sl.primal_objective - 3.0) <= 1e-6);
  CHECK(std::abs(sl.x[0] - sl.x[1] - 3.0) <= 1e-6);

  const SdpProblem g = gram_problem(2, 2, 1);  // x^2 + 2x + 2 = (x + 1)^2 + 1
  const SdpSolution sg = solve(g);
  check_optimal_residuals(g, sg);
  Eigen::SelfAdjointEigenSolver<Matrix> es(sg.X[0]);
  CHECK(es.eigenvalues().minCoeff() >= -1e-7);
}

TEST_CASE("infeasible Gram problems are reported") {
  CHECK(solve(gram_problem(-1, 0, 1)).status == Status::infeasible);   // x^2 - 1
  CHECK(solve(gram_problem(0, 0, -1)).status == Status::infeasible);   // -x^2
  CHECK(solve(sos_gram_problem((Vector(3) << -1, 0, 1).finished())).status == Status::infeasible);
  CHECK(solve(sos_gram_problem((Vector(3) << 2, 2, 1).finished())).status == Status::optimal);
}

TEST_CASE("check_solution on hand-made points") {
  const SdpProblem t = trace_problem();
  const ResidualReport exact = check_solution(t, {{Matrix::Ones(1, 1)}, Vector(0), Vector::Ones(1)});
  CHECK(exact.primal_residual == 0.0);
  CHECK(exact.min_eigenvalue[0] == 1.0);
  CHECK(exact.primal_objective == 1.0);
  CHECK(exact.dual_residual == 0.0);
  CHECK(exact.duality_gap == 0.0);

  const ResidualReport off = check_solution(t, {{Matrix::Constant(1, 1, 3.0)}, Vector(0), Vector()});
  CHECK(off.primal_residual > 0.5);

  CHECK_THROWS(check_solution(t, {{Matrix::Ones(2, 2)}, Vector(0), Vector()}));
}

TEST_CASE("property: scaling the objective leaves the optimizer unchanged") {
  // min <C, X> with C = diag(1, 2) over X PSD, X11 + X22 = 1, X12 = 0.2.
  SdpProblem p;
  p.block_sizes = {2};
  p.objective_blocks = {{0, 0, 0, 1.0}, {0, 1, 1, 2.0}};
  p.constraints = {{{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, {}, 1.0}, {{{0, 1, 0, 1.0}}, {}, 0.2}};
  const SdpSolution a = solve(p);
  SdpProblem q = p;
  for (auto& e : q.objective_blocks) e.value *= 7.5;
  const SdpSolution b = solve(q);
  REQUIRE(a.status == Status::optimal);
  REQUIRE(b.status == Status::optimal);
  CHECK((a.X[0] - b.X[0]).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(std::abs(b.primal_objective - 7.5 * a.primal_objective) <= 1e-5);
}

TEST_CASE("property: determinism") {
  const SdpProblem g = gram_problem(2, 2, 1);
  const SdpSolution a = solve(g), b = solve(g);
  CHECK(a.iterations == b.iterations);
  CHECK(a.X[0] == b.X[0]);
  CHECK(a.y == b.y);
}

TEST_CASE("validation and JSON") {
  SdpProblem bad = trace_problem();
  bad.constraints[0].blocks[0].col = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  SdpProblem upper;
  upper.block_sizes = {2};
  upper.constraints = {{{{0, 0, 1, 1.0}}, {}, 1.0}};
  CHECK_THROWS_AS(upper.validate(), std::invalid_argument);

  const SdpProblem g = gram_problem(2, 2, 1);
  const SdpProblem r = problem_from_json(nlohmann::json::parse(to_json(g).dump()));
  CHECK(r.block_sizes == g.block_sizes);
  CHECK(r.num_constraints() == g.num_constraints());
  const SdpSolution s1 = solve(g), s2 = solve(r);
  CHECK(s1.X[0] == s2.X[0]);
  const auto js = to_json(s1);
  CHECK(js.at("status") == "optimal");
}

TEST_CASE("iteration limit returns the best iterate") {
  SolverParams p;
  p.max_iter = 2;
  const SdpSolution s = solve(gram_problem(2, 2, 1), p);
  CHECK(s.status == Status::max_iter);
  CHECK(s.X.size() == 1);
  CHECK(std::isfinite(s.primal_residual));
}
