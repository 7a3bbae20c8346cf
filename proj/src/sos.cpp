#include "densyn/sos.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace densyn {

namespace {

int effective_a_degree(const SynthesisSpec& s) { return s.fix_a_to_one ? 0 : s.deg_a; }

PolyVec monomial_poly(const BasisPtr& basis, std::size_t k) {
  PolyVec p(basis);
  p.coeffs()[static_cast<Eigen::Index>(k)] = 1.0;
  return p;
}

// Coefficients of p re-expressed in a basis of degree `degree`; p must fit.
Vector coeffs_in(const PolyVec& p, int degree) {
  if (p.basis().degree() <= degree) return embed(p, degree).coeffs();
  if (p.actual_degree() > degree) throw std::logic_error("coeffs_in: polynomial does not fit the requested degree");
  return truncate(p, degree).coeffs();
}

std::string monomial_name(const MultiIndex& m) {
  std::string s;
  for (std::size_t i = 0; i < m.exponents.size(); ++i) {
    const int e = m.exponents[i];
    if (e == 0) continue;
    if (!s.empty()) s += "*";
    s += "x" + std::to_string(i + 1);
    if (e > 1) s += "^" + std::to_string(e);
  }
  return s.empty() ? "1" : s;
}

}  // namespace

void SynthesisSpec::validate(int n, int m) {
  if (n < 1) throw std::invalid_argument("synthesis spec: state dimension must be positive");
  if (alpha < 0) throw std::invalid_argument("synthesis spec: alpha must be nonnegative");
  if (b.basis_ptr() == nullptr) b = squared_norm(n, 2);
  if (b.dim() != n) throw std::invalid_argument("synthesis spec: b has the wrong number of variables");
  if (b.actual_degree() < 1) throw std::invalid_argument("synthesis spec: b must be a nonconstant positive polynomial");
  if (std::abs(b(Vector::Zero(n))) > 1e-12) throw std::invalid_argument("synthesis spec: b must vanish at the origin");
  if (deg_a < 0) throw std::invalid_argument("synthesis spec: deg_a must be nonnegative");
  if (static_cast<int>(deg_c.size()) != m) {
    throw std::invalid_argument("synthesis spec: deg_c lists " + std::to_string(deg_c.size()) + " channels, system has " +
                                std::to_string(m));
  }
  if (c_min_degree < 0) throw std::invalid_argument("synthesis spec: c_min_degree must be nonnegative");
  for (int d : deg_c) {
    if (d < c_min_degree) throw std::invalid_argument("synthesis spec: every deg_c must be at least c_min_degree");
  }
  if (!(margin_eps >= 0.0)) throw std::invalid_argument("synthesis spec: margin_eps must be nonnegative");
  if (margin_power < 1) throw std::invalid_argument("synthesis spec: margin_power must be at least 1");
  if (!(clean_tol >= 0.0 && clean_tol < 1.0)) throw std::invalid_argument("synthesis spec: clean_tol must lie in [0, 1)");
  if (certificate_degree < -1) throw std::invalid_argument("synthesis spec: certificate_degree must be -1 (auto) or nonnegative");
  if (certificate_min_degree < 0) throw std::invalid_argument("synthesis spec: certificate_min_degree must be nonnegative");
}

nlohmann::json to_json(const SynthesisSpec& s) {
  nlohmann::json j{{"alpha", s.alpha},
                   {"deg_a", s.deg_a},
                   {"deg_c", s.deg_c},
                   {"c_min_degree", s.c_min_degree},
                   {"fix_a_to_one", s.fix_a_to_one},
                   {"margin_eps", s.margin_eps},
                   {"margin_power", s.margin_power},
                   {"literal_paper_form", s.literal_paper_form},
                   {"clean_tol", s.clean_tol},
                   {"certificate_degree", s.certificate_degree},
                   {"certificate_min_degree", s.certificate_min_degree}};
  if (s.b.basis_ptr()) j["b"] = to_json(s.b);
  return j;
}

SynthesisSpec synthesis_spec_from_json(const nlohmann::json& j) {
  SynthesisSpec s;
  s.alpha = j.value("alpha", s.alpha);
  s.deg_a = j.value("deg_a", s.deg_a);
  if (j.contains("deg_c")) s.deg_c = j.at("deg_c").get<std::vector<int>>();
  s.c_min_degree = j.value("c_min_degree", s.c_min_degree);
  s.fix_a_to_one = j.value("fix_a_to_one", s.fix_a_to_one);
  s.margin_eps = j.value("margin_eps", s.margin_eps);
  s.margin_power = j.value("margin_power", s.margin_power);
  s.literal_paper_form = j.value("literal_paper_form", s.literal_paper_form);
  s.clean_tol = j.value("clean_tol", s.clean_tol);
  s.certificate_degree = j.value("certificate_degree", s.certificate_degree);
  s.certificate_min_degree = j.value("certificate_min_degree", s.certificate_min_degree);
  if (j.contains("b") && !j.at("b").is_null()) s.b = poly_from_json(j.at("b"));
  return s;
}

int DecisionLayout::size() const {
  std::size_t total = a_fixed ? 0 : a_free.size();
  for (const auto& f : c_free) total += f.size();
  return static_cast<int>(total);
}

int DecisionLayout::c_offset(int j) const {
  std::size_t off = a_fixed ? 0 : a_free.size();
  for (int k = 0; k < j; ++k) off += c_free[static_cast<std::size_t>(k)].size();
  return static_cast<int>(off);
}

DecisionLayout make_layout(int n, int m, const SynthesisSpec& spec) {
  DecisionLayout L;
  L.n = n;
  L.m = m;
  L.a_fixed = spec.fix_a_to_one;
  L.a_basis = build_basis(n, effective_a_degree(spec));
  if (!L.a_fixed) {
    for (std::size_t k = 0; k < L.a_basis->size(); ++k) L.a_free.push_back(k);
  }
  for (int j = 0; j < m; ++j) {
    BasisPtr cb = build_basis(n, spec.deg_c[static_cast<std::size_t>(j)]);
    std::vector<std::size_t> free;
    for (std::size_t k = cb->degree_offset(spec.c_min_degree); k < cb->size(); ++k) free.push_back(k);
    L.c_bases.push_back(cb);
    L.c_free.push_back(std::move(free));
  }
  return L;
}

DecisionVector decisions_to_polys(const DecisionLayout& layout, const Vector& d) {
  if (d.size() != layout.size()) throw std::invalid_argument("decisions_to_polys: decision vector has the wrong length");
  DecisionVector out;
  out.a = PolyVec(layout.a_basis);
  Eigen::Index pos = 0;
  if (layout.a_fixed) {
    out.a.coeffs()[0] = 1.0;
  } else {
    for (std::size_t k : layout.a_free) out.a.coeffs()[static_cast<Eigen::Index>(k)] = d[pos++];
  }
  for (int j = 0; j < layout.m; ++j) {
    PolyVec c(layout.c_bases[static_cast<std::size_t>(j)]);
    for (std::size_t k : layout.c_free[static_cast<std::size_t>(j)]) c.coeffs()[static_cast<Eigen::Index>(k)] = d[pos++];
    out.c.push_back(std::move(c));
  }
  return out;
}

int AffinePolyMap::degree() const {
  for (Eigen::Index r = static_cast<Eigen::Index>(basis->size()) - 1; r >= 0; --r) {
    bool nz = offset[r] != 0.0;
    for (Eigen::Index c = 0; c < lin.cols() && !nz; ++c) nz = lin(r, c) != 0.0;
    if (nz) return (*basis)[static_cast<std::size_t>(r)].degree();
  }
  return -1;
}

AffinePolyMap assemble_raw_stability_map(const GeneratorSet& gen, const SynthesisSpec& spec_in) {
  SynthesisSpec spec = spec_in;
  const int n = gen.n();
  const int m = gen.m();
  spec.validate(n, m);

  const int q = gen.basis->degree();
  const int deg_b = spec.b.actual_degree();
  int required = effective_a_degree(spec) + deg_b;
  for (int d : spec.deg_c) required = std::max(required, d + deg_b);
  if (q < required) {
    throw SosError("basis degree q = " + std::to_string(q) + " is insufficient: deg(Ψ) ≥ max(deg(ab), deg(bc_j)) needs q ≥ " +
                   std::to_string(required));
  }

  const DecisionLayout layout = make_layout(n, m, spec);
  const int out_degree = gen.P0.target->degree() + deg_b;
  AffinePolyMap map;
  map.basis = build_basis(n, out_degree);
  const auto rows = static_cast<Eigen::Index>(map.basis->size());
  map.lin = Matrix::Zero(rows, layout.size());
  map.offset = Vector::Zero(rows);

  // Column of the map contributed by psi = x^k (a monomial of Psi) through operator P.
  auto column = [&](const PfOperator& P, std::size_t k) -> Vector {
    const PolyVec psi = monomial_poly(gen.basis, k);
    const PolyVec Ppsi = P.apply(psi);
    const PolyVec bPpsi = multiply(spec.b, Ppsi);
    const PolyVec bpsi = truncate(multiply(spec.b, psi), q);  // exact by the degree rule
    const PolyVec Pbpsi = P.apply(bpsi);
    Vector col = (1.0 + spec.alpha) * coeffs_in(bPpsi, out_degree);
    if (spec.literal_paper_form) {
      col -= coeffs_in(multiply(spec.b, Pbpsi), out_degree);
    } else {
      col -= static_cast<double>(spec.alpha) * coeffs_in(Pbpsi, out_degree);
    }
    return col;
  };

  // a's monomials live in the a basis; map them to positions in Psi.
  auto psi_position = [&](const MonomialBasis& src, std::size_t k) {
    return gen.basis->rank(std::span<const int>(src[k].exponents));
  };

  if (layout.a_fixed) {
    map.offset = column(gen.P0, 0);
  } else {
    Eigen::Index col = layout.a_offset();
    for (std::size_t k : layout.a_free) map.lin.col(col++) = column(gen.P0, psi_position(*layout.a_basis, k));
  }
  for (int j = 0; j < m; ++j) {
    Eigen::Index col = layout.c_offset(j);
    const auto& cb = *layout.c_bases[static_cast<std::size_t>(j)];
    for (std::size_t k : layout.c_free[static_cast<std::size_t>(j)]) {
      map.lin.col(col++) = column(gen.P[static_cast<std::size_t>(j)], psi_position(cb, k));
    }
  }
  return map;
}

int estimated_field_degree(const Matrix& L, const BasisPtr& basis, double rel_tol) {
  const std::vector<PolyVec> field = vector_field_estimate(L, basis);
  // One scale for the whole field: a component that is identically zero in truth
  // carries only noise, which must not count relative to itself.
  double scale = 0.0;
  for (const PolyVec& comp : field) scale = std::max(scale, comp.coeffs().cwiseAbs().maxCoeff());
  int deg = -1;
  if (scale == 0.0) return deg;
  for (const PolyVec& comp : field) {
    for (Eigen::Index k = 0; k < comp.coeffs().size(); ++k) {
      if (std::abs(comp.coeffs()[k]) >= rel_tol * scale) deg = std::max(deg, comp.basis()[static_cast<std::size_t>(k)].degree());
    }
  }
  return deg;
}

int automatic_certificate_degree(const GeneratorSet& gen, const SynthesisSpec& spec_in) {
  SynthesisSpec spec = spec_in;
  spec.validate(gen.n(), gen.m());
  // The exact condition equals b div(V) - alpha grad(b).V with V = F a + G c, so its
  // degree is deg b - 1 + deg V.
  const double tol = std::max(spec.clean_tol, 1e-3);
  int deg_v = effective_a_degree(spec) + std::max(estimated_field_degree(gen.L0, gen.basis, tol), 0);
  for (int j = 0; j < gen.m(); ++j) {
    const int dg = std::max(estimated_field_degree(gen.L[static_cast<std::size_t>(j)], gen.basis, tol), 0);
    deg_v = std::max(deg_v, spec.deg_c[static_cast<std::size_t>(j)] + dg);
  }
  int d = std::max(spec.b.actual_degree() - 1 + deg_v, 2);
  if (d % 2 != 0) ++d;
  return d;
}

AffinePolyMap assemble_stability_map(const GeneratorSet& gen, const SynthesisSpec& spec) {
  AffinePolyMap map = assemble_raw_stability_map(gen, spec);
  if (spec.clean_tol > 0.0) {
    // Each column is the polynomial one decision monomial contributes; entries small
    // relative to that polynomial are generator noise.
    auto clean = [&](auto&& col) {
      const double scale = col.cwiseAbs().maxCoeff();
      for (Eigen::Index r = 0; r < col.size(); ++r) {
        if (std::abs(col[r]) < spec.clean_tol * scale) col[r] = 0.0;
      }
    };
    for (Eigen::Index c = 0; c < map.lin.cols(); ++c) clean(map.lin.col(c));
    if (map.offset.size() > 0) clean(map.offset);
  }
  const int cap = spec.certificate_degree < 0 ? automatic_certificate_degree(gen, spec) : spec.certificate_degree;
  if (cap > 0 && cap < map.basis->degree()) {
    const auto keep = static_cast<Eigen::Index>(map.basis->degree_offset(cap + 1));
    map.lin.bottomRows(map.lin.rows() - keep).setZero();
    map.offset.tail(map.offset.size() - keep).setZero();
  }
  if (spec.certificate_min_degree > 0) {
    const auto drop = static_cast<Eigen::Index>(
        map.basis->degree_offset(std::min(spec.certificate_min_degree, map.basis->degree() + 1)));
    map.lin.topRows(drop).setZero();
    map.offset.head(drop).setZero();
  }
  // Shrink the basis to the highest degree still present.
  const int deg = std::max(map.degree(), 0);
  if (deg < map.basis->degree()) {
    BasisPtr smaller = build_basis(map.basis->dim(), deg);
    const auto rows = static_cast<Eigen::Index>(smaller->size());
    map.lin = map.lin.topRows(rows).eval();
    map.offset = map.offset.head(rows).eval();
    map.basis = smaller;
  }
  return map;
}

SosProgram build_program(const GeneratorSet& gen, const SynthesisSpec& spec_in) {
  SynthesisSpec spec = spec_in;
  spec.validate(gen.n(), gen.m());
  SosProgram prog;
  prog.layout = make_layout(gen.n(), gen.m(), spec);
  prog.basis_degree = gen.basis->degree();
  prog.alpha = spec.alpha;
  if (prog.layout.size() == 0) throw SosError("SOS program has no decision variables (a fixed and every c pinned)");
  prog.weights = Vector::Ones(prog.layout.size());

  AffinePolyMap stab = assemble_stability_map(gen, spec);
  if (spec.margin_eps > 0.0) {
    PolyVec r = squared_norm(gen.n(), 2);
    PolyVec margin = constant(gen.n(), 0, 1.0);
    for (int k = 0; k < spec.margin_power; ++k) margin = multiply(margin, r);
    const int deg = std::max(stab.basis->degree(), margin.basis().degree());
    if (deg > stab.basis->degree()) {
      BasisPtr bigger = build_basis(gen.n(), deg);
      Matrix lin = Matrix::Zero(static_cast<Eigen::Index>(bigger->size()), stab.lin.cols());
      lin.topRows(stab.lin.rows()) = stab.lin;
      Vector off = Vector::Zero(lin.rows());
      off.head(stab.offset.size()) = stab.offset;
      stab = AffinePolyMap{bigger, std::move(lin), std::move(off)};
    }
    stab.offset -= spec.margin_eps * coeffs_in(margin, deg);
  }
  prog.constraints.push_back({"stability", std::move(stab)});

  if (!prog.layout.a_fixed) {
    AffinePolyMap amap;
    amap.basis = prog.layout.a_basis;
    amap.lin = Matrix::Zero(static_cast<Eigen::Index>(amap.basis->size()), prog.layout.size());
    amap.offset = Vector::Zero(amap.lin.rows());
    Eigen::Index col = prog.layout.a_offset();
    for (std::size_t k : prog.layout.a_free) amap.lin(static_cast<Eigen::Index>(k), col++) = 1.0;
    prog.constraints.push_back({"a_sos", std::move(amap)});
  }
  return prog;
}

GramStructure gram_parameterize(const AffinePolyMap& map) {
  const int n = map.basis->dim();
  const int deg = std::max(map.degree(), 0);
  GramStructure g;
  g.half_degree = (deg + 1) / 2;
  g.half_basis = build_basis(n, g.half_degree);
  g.poly_basis = build_basis(n, std::max(2 * g.half_degree, map.basis->degree()));

  std::vector<char> support(g.poly_basis->size(), 0);
  for (Eigen::Index r = 0; r < map.lin.rows(); ++r) {
    bool nz = map.offset[r] != 0.0;
    for (Eigen::Index c = 0; c < map.lin.cols() && !nz; ++c) nz = map.lin(r, c) != 0.0;
    support[static_cast<std::size_t>(r)] = nz;
  }

  const MonomialBasis& hb = *g.half_basis;
  const std::size_t H = hb.size();
  std::vector<char> keep(H, 1);
  std::vector<int> e(static_cast<std::size_t>(n));
  // A diagonal entry Q_bb can be nonzero only if x^(2b) is in the support or some other
  // pair of kept monomials also produces x^(2b); otherwise PSD forces its row to zero.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t b = 0; b < H; ++b) {
      if (!keep[b]) continue;
      for (int i = 0; i < n; ++i) e[i] = 2 * hb[b].exponents[i];
      if (support[g.poly_basis->rank(e)]) continue;
      bool paired = false;
      for (std::size_t a = 0; a < H && !paired; ++a) {
        if (!keep[a] || a == b) continue;
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) {
          e[i] = 2 * hb[b].exponents[i] - hb[a].exponents[i];
          ok = e[i] >= 0;
        }
        if (!ok) continue;
        int d = 0;
        for (int i = 0; i < n; ++i) d += e[i];
        if (d > g.half_degree) continue;
        const std::size_t partner = hb.rank(e);
        paired = partner != a && keep[partner];
      }
      if (!paired) {
        keep[b] = 0;
        changed = true;
      }
    }
  }
  for (std::size_t b = 0; b < H; ++b) {
    if (keep[b]) g.monomials.push_back(b);
  }

  g.pairs.assign(g.poly_basis->size(), {});
  for (std::size_t i = 0; i < g.monomials.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      for (int v = 0; v < n; ++v) e[v] = hb[g.monomials[i]].exponents[v] + hb[g.monomials[j]].exponents[v];
      g.pairs[g.poly_basis->rank(e)].emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return g;
}

Vector gram_to_coeffs(const GramStructure& g, const Matrix& Q) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(g.poly_basis->size()));
  for (std::size_t r = 0; r < g.pairs.size(); ++r) {
    double s = 0.0;
    for (auto [i, j] : g.pairs[r]) s += (i == j) ? Q(i, j) : Q(i, j) + Q(j, i);
    out[static_cast<Eigen::Index>(r)] = s;
  }
  return out;
}

CompiledSdp compile_sdp(const SosProgram& program) {
  CompiledSdp out;
  const int N = program.layout.size();
  out.num_decisions = N;
  sdp::SdpProblem& P = out.problem;
  P.num_nonneg = 2 * N;
  P.objective_linear = Vector(2 * N);
  if (N > 0) {
    P.objective_linear.head(N) = program.weights;
    P.objective_linear.tail(N) = program.weights;
  }

  for (std::size_t k = 0; k < program.constraints.size(); ++k) {
    const SosConstraint& con = program.constraints[k];
    GramStructure g = gram_parameterize(con.map);
    const int block = static_cast<int>(P.block_sizes.size());
    P.block_sizes.push_back(static_cast<int>(g.monomials.size()));
    const auto map_rows = con.map.lin.rows();
    int rows = 0;
    for (std::size_t r = 0; r < g.pairs.size(); ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      const bool in_map = ri < map_rows;
      sdp::Constraint row;
      for (auto [i, j] : g.pairs[r]) row.blocks.push_back({block, i, j, 1.0});
      if (in_map) {
        for (int v = 0; v < N; ++v) {
          const double a = con.map.lin(ri, v);
          if (a == 0.0) continue;
          row.linear.push_back({v, -a});
          row.linear.push_back({N + v, a});
        }
        row.rhs = con.map.offset[ri];
      }
      if (row.blocks.empty() && row.linear.empty()) {
        if (row.rhs != 0.0) {
          std::ostringstream os;
          os << "constraint '" << con.name << "' has coefficient " << row.rhs << " on "
             << monomial_name((*g.poly_basis)[r]) << " that no Gram entry or decision can produce";
          throw SdpFailure(os.str(), sdp::Status::infeasible, std::abs(row.rhs), 0.0, 0.0);
        }
        continue;
      }
      P.constraints.push_back(std::move(row));
      ++rows;
    }
    out.rows_per_constraint.push_back(rows);
    out.grams.push_back(std::move(g));
  }
  return out;
}

Vector raw_decisions(const CompiledSdp& compiled, const sdp::SdpSolution& sol) {
  const int N = compiled.num_decisions;
  if (sol.x.size() != 2 * N) throw std::invalid_argument("raw_decisions: solution does not match the compiled program");
  return sol.x.head(N) - sol.x.tail(N);
}

void collapse_split(const CompiledSdp& compiled, sdp::SdpSolution& sol) {
  const Vector d = raw_decisions(compiled, sol);
  const int N = compiled.num_decisions;
  Vector x = sol.x;
  x.head(N) = d.cwiseMax(0.0);
  x.tail(N) = (-d).cwiseMax(0.0);
  // Equality rows see only d+ - d-, so the point stays feasible and the objective can only drop.
  const Vector& w = compiled.problem.objective_linear;
  if (w.size() == x.size()) sol.primal_objective -= w.dot(sol.x - x);
  sol.x = x;
}

DecisionVector extract_solution(const SosProgram& program, const CompiledSdp& compiled, const sdp::SdpSolution& sol,
                                double snap_tol) {
  if (sol.status != sdp::Status::optimal) {
    throw SdpFailure("SDP solver returned status '" + sdp::to_string(sol.status) + "': " + sol.message +
                         " (raise the degree of c or Psi, or alpha)",
                     sol.status, sol.primal_residual, sol.dual_residual, sol.duality_gap);
  }
  Vector d = raw_decisions(compiled, sol);
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (std::abs(d[k]) < snap_tol) d[k] = 0.0;
  }
  return decisions_to_polys(program.layout, d);
}

namespace {

std::vector<std::pair<std::string, std::string>> decision_names(const DecisionLayout& L) {
  std::vector<std::pair<std::string, std::string>> names;
  if (!L.a_fixed) {
    for (std::size_t k : L.a_free) names.emplace_back("a", monomial_name((*L.a_basis)[k]));
  }
  for (int j = 0; j < L.m; ++j) {
    for (std::size_t k : L.c_free[static_cast<std::size_t>(j)]) {
      names.emplace_back("c" + std::to_string(j + 1), monomial_name((*L.c_bases[static_cast<std::size_t>(j)])[k]));
    }
  }
  return names;
}

}  // namespace

nlohmann::json to_json(const SosProgram& program) {
  nlohmann::json decisions = nlohmann::json::array();
  for (auto& [owner, mono] : decision_names(program.layout)) decisions.push_back({{"owner", owner}, {"monomial", mono}});
  nlohmann::json cons = nlohmann::json::array();
  for (const auto& c : program.constraints) {
    std::vector<double> off(c.map.offset.data(), c.map.offset.data() + c.map.offset.size());
    cons.push_back({{"name", c.name},
                    {"n", c.map.basis->dim()},
                    {"q", c.map.basis->degree()},
                    {"ordering", "grlex"},
                    {"lin", matrix_to_json(c.map.lin)},
                    {"offset", off}});
  }
  std::vector<double> w(program.weights.data(), program.weights.data() + program.weights.size());
  return {{"decision_dimension", program.layout.size()},
          {"basis_degree", program.basis_degree},
          {"alpha", program.alpha},
          {"weights", w},
          {"decisions", decisions},
          {"constraints", cons}};
}

std::string describe(const SosProgram& program) {
  std::ostringstream os;
  const auto names = decision_names(program.layout);
  os << "decisions: " << names.size() << ", objective: l1, basis degree " << program.basis_degree << ", alpha "
     << program.alpha << "\n";
  for (const auto& c : program.constraints) {
    os << "constraint " << c.name << " (SOS, degree " << c.map.degree() << "):\n";
    os << "  offset: " << to_string(PolyVec(c.map.basis, c.map.offset)) << "\n";
    for (Eigen::Index v = 0; v < c.map.lin.cols(); ++v) {
      const auto& [owner, mono] = names[static_cast<std::size_t>(v)];
      os << "  d" << v << " [" << owner << ": " << mono << "]: " << to_string(PolyVec(c.map.basis, c.map.lin.col(v)))
         << "\n";
    }
  }
  return os.str();
}

}  // namespace densyn
