#include <doctest.h>

#include <cmath>

#include "densyn/edmd.hpp"
#include "densyn/sos.hpp"
#include "support.hpp"

using namespace densyn;
using namespace densyn::testing;

namespace {

// Exact generator of a polynomial vector field: column k holds the coefficients of F . grad(x^k).
Matrix exact_generator(const BasisPtr& basis, const std::vector<PolyVec>& field) {
  const auto Q = static_cast<Eigen::Index>(basis->size());
  Matrix L = Matrix::Zero(Q, Q);
  for (Eigen::Index k = 0; k < Q; ++k) {
    PolyVec psi(basis);
    psi.coeffs()[k] = 1.0;
    PolyVec acc(build_basis(basis->dim(), 2 * basis->degree()));
    for (int i = 0; i < basis->dim(); ++i) {
      acc = acc + embed(multiply(field[static_cast<std::size_t>(i)], partial_derivative(psi, i)), acc.basis().degree());
    }
    L.col(k) = truncate(acc, basis->degree()).coeffs();
  }
  return L;
}

PolyVec poly(int n, int q, std::initializer_list<std::pair<std::initializer_list<int>, double>> terms) {
  PolyVec p(build_basis(n, q));
  for (const auto& [e, v] : terms) p.set_coeff(e, v);
  return p;
}

// Van der Pol with exact generators on a basis of degree q.
GeneratorSet exact_vdp(int q) {
  const auto B = build_basis(2, q);
  const std::vector<PolyVec> F{poly(2, 3, {{{0, 1}, 1.0}}), poly(2, 3, {{{0, 1}, 1.0}, {{2, 1}, -1.0}, {{1, 0}, -1.0}})};
  const std::vector<PolyVec> G{poly(2, 0, {}), poly(2, 0, {{{0, 0}, 1.0}})};
  return generators_from_matrices(B, 0.01, exact_generator(B, F), {exact_generator(B, G)});
}

// Scalar x' = -x + u.
GeneratorSet exact_scalar(int q) {
  const auto B = build_basis(1, q);
  return generators_from_matrices(B, 1e-3, exact_generator(B, {poly(1, 1, {{{1}, -1.0}})}),
                                  {exact_generator(B, {poly(1, 0, {{{0}, 1.0}})})});
}

SynthesisSpec vdp_spec() {
  SynthesisSpec s;
  s.alpha = 6;
  s.deg_c = {4};
  return s;
}

// One decision theta with constraint (theta - 1) x^2 SOS.
SosProgram theta_program() {
  SosProgram p;
  p.layout.n = 1;
  p.layout.m = 1;
  p.layout.a_fixed = true;
  p.layout.a_basis = build_basis(1, 0);
  p.layout.c_bases = {build_basis(1, 2)};
  p.layout.c_free = {{2}};
  p.weights = Vector::Ones(1);
  AffinePolyMap m{build_basis(1, 2), Matrix::Zero(3, 1), Vector::Zero(3)};
  m.lin(2, 0) = 1.0;
  m.offset[2] = -1.0;
  p.constraints.push_back({"theta", m});
  return p;
}

}  // namespace

TEST_CASE("decision layout") {
  SynthesisSpec s = vdp_spec();
  s.validate(2, 1);
  const DecisionLayout L = make_layout(2, 1, s);
  // Monomials of degree 1..4 in two variables: 2 + 3 + 4 + 5.
  CHECK(L.size() == 14);
  CHECK(L.a_fixed);
  const DecisionVector dv = decisions_to_polys(L, Vector::LinSpaced(14, 1, 14));
  CHECK(dv.a.coeffs()[0] == 1.0);
  CHECK(dv.c[0].coeffs()[0] == 0.0);  // no constant term
  CHECK(dv.c[0].coeff({1, 0}) == 1.0);
  CHECK(dv.c[0].coeff({0, 4}) == 14.0);

  SynthesisSpec g = s;
  g.fix_a_to_one = false;
  g.deg_a = 2;
  g.validate(2, 1);
  CHECK(make_layout(2, 1, g).size() == 14 + 6);
}

TEST_CASE("spec validation") {
  SynthesisSpec s = vdp_spec();
  CHECK_NOTHROW(s.validate(2, 1));
  CHECK(s.b.coeff({2, 0}) == 1.0);
  CHECK(s.b.coeff({0, 2}) == 1.0);
  CHECK_THROWS_AS(s.validate(2, 2), std::invalid_argument);
  SynthesisSpec bad = vdp_spec();
  bad.b = constant(2, 2, 1.0);
  CHECK_THROWS_AS(bad.validate(2, 1), std::invalid_argument);
  bad = vdp_spec();
  bad.margin_eps = -1;
  CHECK_THROWS_AS(bad.validate(2, 1), std::invalid_argument);
  const SynthesisSpec r = synthesis_spec_from_json(to_json(s));
  CHECK(to_json(r) == to_json(s));
}

TEST_CASE("assemble_stability_map examples") {
  SUBCASE("zero generators give the zero map") {
    const auto B = build_basis(2, 6);
    const auto Q = static_cast<Eigen::Index>(B->size());
    const GeneratorSet g = generators_from_matrices(B, 0.01, Matrix::Zero(Q, Q), {Matrix::Zero(Q, Q)});
    const AffinePolyMap m = assemble_stability_map(g, vdp_spec());
    CHECK(m.lin.isZero(0.0));
    CHECK(m.offset.isZero(0.0));
    CHECK(m.degree() == -1);
  }
  SUBCASE("scalar x' = -x + u with b = x^2, alpha = 4, c = theta x") {
    // V = (theta - 1) x, b div V - alpha grad b . V = (theta - 1) x^2 - 8 (theta - 1) x^2 = -7 (theta - 1) x^2.
    SynthesisSpec s;
    s.alpha = 4;
    s.deg_c = {1};
    s.b = poly(1, 2, {{{2}, 1.0}});
    const AffinePolyMap m = assemble_stability_map(exact_scalar(3), s);
    for (double theta : {-2.0, 0.0, 0.5, 3.0}) {
      const PolyVec p = m.apply((Vector(1) << theta).finished());
      for (Eigen::Index k = 0; k < p.coeffs().size(); ++k) {
        const double expect = k == 2 ? -7.0 * (theta - 1.0) : 0.0;
        CHECK(std::abs(p.coeffs()[k] - expect) < 1e-12);
      }
    }
    // Learned generators approach the same polynomial.
    SampleConfig c;
    c.dt = 1e-3;
    c.n_init = 5000;
    c.box = {{-1.0, 1.0}};
    c.filter = SampleFilter::blowup;
    const auto B = build_basis(1, 3);
    const SystemModel mdl = scalar_decay();
    const GeneratorSet g = build_generators(fit_koopman(collect_snapshots(mdl, InputLabel::zero(), c), B),
                                            {fit_koopman(collect_snapshots(mdl, InputLabel::unit(0), c), B)});
    const PolyVec learned = assemble_stability_map(g, s).apply((Vector(1) << 0.5).finished());
    CHECK(std::abs(learned.coeff({2}) - 3.5) < 0.05);
  }
  SUBCASE("alpha = 0 leaves only b div(F a + G c)") {
    SynthesisSpec s = vdp_spec();
    s.alpha = 0;
    const GeneratorSet g = exact_vdp(6);
    const AffinePolyMap m = assemble_stability_map(g, s);
    // a = 1, c = 0: b div F = (x1^2 + x2^2)(1 - x1^2).
    const PolyVec p = m.apply(Vector::Zero(14));
    CHECK(p.coeff({2, 0}) == 1.0);
    CHECK(p.coeff({0, 2}) == 1.0);
    CHECK(p.coeff({4, 0}) == -1.0);
    CHECK(p.coeff({2, 2}) == -1.0);
    CHECK(p.coeffs().cwiseAbs().sum() == 4.0);
  }
  SUBCASE("literal form differs from the derived form") {
    SynthesisSpec s = vdp_spec();
    const GeneratorSet g = exact_vdp(6);
    const AffinePolyMap derived = assemble_stability_map(g, s);
    s.literal_paper_form = true;
    const AffinePolyMap literal = assemble_stability_map(g, s);
    CHECK_FALSE(literal.offset.isApprox(derived.offset));
  }
}

TEST_CASE("property: the stability map is affine (exact on integer data)") {
  const GeneratorSet g = exact_vdp(6);
  const AffinePolyMap m = assemble_stability_map(g, vdp_spec());
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(-3, 3);
  for (int t = 0; t < 10; ++t) {
    Vector d1(14), d2(14);
    for (int k = 0; k < 14; ++k) {
      d1[k] = u(rng);
      d2[k] = u(rng);
    }
    const Vector lin_sum = m.lin * (d1 + d2);
    CHECK(lin_sum == Vector(m.lin * d1 + m.lin * d2));
    CHECK(Vector(m.lin * (2.0 * d1)) == Vector(2.0 * (m.lin * d1)));
    CHECK(m.apply(d1 + d2).coeffs() == (m.apply(d1).coeffs() + m.apply(d2).coeffs() - m.offset));
  }
}

TEST_CASE("degree rule") {
  SynthesisSpec s = vdp_spec();  // deg b + deg c = 6
  try {
    (void)assemble_stability_map(exact_vdp(5), s);
    FAIL("expected SosError");
  } catch (const SosError& e) {
    CHECK(std::string(e.what()).find("deg(Ψ) ≥ max(deg(ab), deg(bc_j))") != std::string::npos);
    CHECK(std::string(e.what()).find("q = 5") != std::string::npos);
  }
}

TEST_CASE("build_program") {
  const GeneratorSet g = exact_vdp(6);
  SynthesisSpec s = vdp_spec();
  const SosProgram p = build_program(g, s);
  CHECK(p.layout.size() == 14);
  CHECK(p.constraints.size() == 1);
  CHECK(p.weights == Vector::Ones(14));

  s.margin_eps = 0.0;
  const SosProgram literal = build_program(g, s);
  const AffinePolyMap m = assemble_stability_map(g, s);
  CHECK(literal.constraints[0].map.offset == m.offset);

  s.margin_eps = 0.5;
  const SosProgram margin = build_program(g, s);
  CHECK(margin.constraints[0].map.offset[3] == m.offset[3] - 0.5);  // x1^2

  SynthesisSpec general = vdp_spec();
  general.fix_a_to_one = false;
  general.deg_a = 0;
  general.deg_c = {4};
  const SosProgram gp = build_program(g, general);
  CHECK(gp.constraints.size() == 2);
  CHECK(gp.constraints[1].name == "a_sos");

}

TEST_CASE("gram_parameterize examples") {
  const AffinePolyMap one{build_basis(1, 0), Matrix::Zero(1, 0), Vector::Ones(1)};
  const GramStructure g1 = gram_parameterize(one);
  CHECK(g1.monomials.size() == 1);
  CHECK(gram_to_coeffs(g1, Matrix::Ones(1, 1))[0] == 1.0);

  const AffinePolyMap quad{build_basis(1, 2), Matrix::Zero(3, 0), (Vector(3) << 2, 2, 1).finished()};
  const GramStructure g2 = gram_parameterize(quad);
  CHECK(g2.half_degree == 1);
  CHECK(g2.monomials.size() == 2);
  const Matrix Q = (Matrix(2, 2) << 2, 1, 1, 1).finished();
  CHECK(gram_to_coeffs(g2, Q) == quad.offset);

  // x^4 + y^2: the monomial x*y... pruning keeps only what can appear.
  const AffinePolyMap sparse{build_basis(2, 4), Matrix::Zero(15, 0), Vector::Zero(15)};
  AffinePolyMap s = sparse;
  s.offset[build_basis(2, 4)->rank(std::vector<int>{4, 0})] = 1.0;
  s.offset[build_basis(2, 4)->rank(std::vector<int>{0, 2})] = 1.0;
  const GramStructure g3 = gram_parameterize(s);
  CHECK(g3.monomials.size() < build_basis(2, 2)->size());
}

TEST_CASE("property: Gram faithfulness for feasible (d, Q)") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 5; ++t) {
    const int n = 1 + t % 3;
    const auto half = build_basis(n, 2);
    const auto H = static_cast<Eigen::Index>(half->size());
    Matrix R(H, H);
    std::normal_distribution<double> nd;
    for (Eigen::Index k = 0; k < R.size(); ++k) R.data()[k] = nd(rng);
    const Matrix Q = R * R.transpose();
    // Build the full-support map whose Gram matrix Q is feasible, with one decision on top.
    AffinePolyMap m{build_basis(n, 4), Matrix::Zero(static_cast<Eigen::Index>(build_basis(n, 4)->size()), 1),
                    Vector::Zero(static_cast<Eigen::Index>(build_basis(n, 4)->size()))};
    const GramStructure g = gram_parameterize(AffinePolyMap{m.basis, m.lin, Vector::Ones(m.offset.size())});
    REQUIRE(static_cast<Eigen::Index>(g.monomials.size()) == H);
    const Vector coeffs = gram_to_coeffs(g, Q);
    const double d = nd(rng);
    m.lin(0, 0) = 1.0;
    m.offset = coeffs;
    m.offset[0] -= d;  // constant term equals d + (offset) at the feasible point
    // Direct reconstruction against the map at this d.
    CHECK((gram_to_coeffs(g, Q) - m.apply((Vector(1) << d).finished()).coeffs()).cwiseAbs().maxCoeff() <= 1e-9);
    // Same check through the compiled equality rows.
    SosProgram p = theta_program();
    p.layout.c_free = {{1}};
    p.layout.c_bases = {build_basis(n, 1)};
    p.layout.n = n;
    p.constraints = {{"p", m}};
    const CompiledSdp c = compile_sdp(p);
    Vector x = Vector::Zero(2);
    (d >= 0 ? x[0] : x[1]) = std::abs(d);
    const auto rep = sdp::check_solution(c.problem, {{Q}, x, Vector()});
    CHECK(rep.primal_residual <= 1e-9);
  }
}

TEST_CASE("compile, solve and extract: toy programs") {
  SUBCASE("theta toy gives theta = 1") {
    const SosProgram p = theta_program();
    const CompiledSdp c = compile_sdp(p);
    CHECK(c.num_decisions == 1);
    sdp::SdpSolution sol = sdp::solve(c.problem);
    REQUIRE(sol.status == sdp::Status::optimal);
    const double before = sol.primal_objective;
    collapse_split(c, sol);
    CHECK(sol.primal_objective <= before);
    const DecisionVector dv = extract_solution(p, c, sol);
    CHECK(std::abs(dv.c[0].coeffs()[2] - 1.0) <= 1e-6);
    // l1 faithfulness: no mass in both halves of the split.
    const double split = sol.x.sum() - raw_decisions(c, sol).cwiseAbs().sum();
    CHECK(split <= 1e-8);
  }
  SUBCASE("no constraints gives d = 0") {
    SosProgram p = theta_program();
    p.constraints.clear();
    const CompiledSdp c = compile_sdp(p);
    const sdp::SdpSolution sol = sdp::solve(c.problem);
    REQUIRE(sol.status == sdp::Status::optimal);
    const DecisionVector dv = extract_solution(p, c, sol);
    CHECK(dv.c[0].is_zero());
  }
  SUBCASE("infeasible program raises SdpFailure with residuals") {
    SosProgram p = theta_program();
    p.constraints[0].map.lin.setZero();  // -x^2 SOS
    const CompiledSdp c = compile_sdp(p);
    const sdp::SdpSolution sol = sdp::solve(c.problem);
    CHECK(sol.status == sdp::Status::infeasible);
    try {
      (void)extract_solution(p, c, sol);
      FAIL("expected SdpFailure");
    } catch (const SdpFailure& e) {
      CHECK(e.status == sdp::Status::infeasible);
      CHECK(e.primal_residual > 0.0);
    }
  }
}

TEST_CASE("Van der Pol program compiles to one Gram block") {
  const GeneratorSet g = exact_vdp(6);
  SynthesisSpec s = vdp_spec();
  s.margin_eps = 0.0;
  const SosProgram p = build_program(g, s);
  const CompiledSdp c = compile_sdp(p);
  REQUIRE(c.problem.block_sizes.size() == 1);
  const int deg = p.constraints[0].map.degree();
  // Block size is at most the number of monomials of degree <= ceil(deg / 2) (pruning can remove some).
  CHECK(c.problem.block_sizes[0] <= static_cast<int>(basis_size(2, (deg + 1) / 2)));
  CHECK(c.problem.block_sizes[0] == static_cast<int>(c.grams[0].monomials.size()));
  CHECK(c.problem.num_nonneg == 28);
  for (const auto& row : c.problem.constraints) CHECK(row.blocks.size() + row.linear.size() > 0);

  // With exact generators and no margin the degenerate controller c = x1^2 x2 - x2 is certified
  // (its closed loop is the harmonic oscillator).
  const sdp::SdpSolution sol = sdp::solve(c.problem);
  REQUIRE(sol.status == sdp::Status::optimal);
  const DecisionVector dv = extract_solution(p, c, sol);
  const PolyVec cert = p.constraints[0].map.apply(raw_decisions(c, sol));
  std::mt19937_64 rng(4);
  for (int k = 0; k < 1000; ++k) CHECK(cert(random_point(2, rng, 3.0)) >= -1e-6);
  CHECK(dv.c[0].coeff({0, 1}) < 0.0);  // linear damping on x2 is needed
}

TEST_CASE("automatic certificate degree") {
  SynthesisSpec s = vdp_spec();
  s.certificate_degree = -1;
  CHECK(automatic_certificate_degree(exact_vdp(6), s) == 6);  // 2 - 1 + max(3, 4) = 5, rounded up
  CHECK(estimated_field_degree(exact_vdp(6).L0, build_basis(2, 6), 1e-3) == 3);
  CHECK(estimated_field_degree(exact_vdp(6).L[0], build_basis(2, 6), 1e-3) == 0);
}

TEST_CASE("debug dump") {
  const SosProgram p = build_program(exact_vdp(6), vdp_spec());
  const auto j = to_json(p);
  CHECK(j.contains("constraints"));
  const std::string text = describe(p);
  CHECK(text.find("stability") != std::string::npos);
}
