#pragma once

// Density-function stability condition as a polynomial affine in the decision
// coefficients d = (z_a, z_c1, ..., z_cm), SOS constraints on it, and the Gram-matrix
// compilation to a standard-form SDP with an l1 objective.
//
// With rho = a / b^alpha and rho u = c / b^alpha the condition div(rho (F + G u)) > 0
// becomes, after clearing b^(alpha+1),
//   (1 + alpha) b div(F a + G c) - alpha div(b F a + b G c) > 0,
// where each div(V psi) is replaced by the learned P-F generator applied to psi.

#include <stdexcept>
#include <string>
#include <vector>

#include "densyn/edmd.hpp"
#include "densyn/polybasis.hpp"
#include "densyn/sdp.hpp"

namespace densyn {

struct SynthesisSpec {
  int alpha = 4;
  PolyVec b;                 // positive away from the origin; defaults to x^T x when empty
  int deg_a = 0;
  std::vector<int> deg_c;    // per input channel
  int c_min_degree = 1;
  bool fix_a_to_one = true;
  double margin_eps = 1e-6;  // subtract margin_eps (x^T x)^margin_power before the SOS test
  int margin_power = 1;
  bool literal_paper_form = false;  // second group scaled by b instead of alpha
  // Coefficients of the assembled map below clean_tol * (largest coefficient of the same
  // monomial row, or the map's largest entry) are treated as zero; 0 disables.
  double clean_tol = 0.0;
  // Terms above this total degree are dropped from the certified polynomial; 0 keeps all,
  // -1 derives the degree from the learned vector fields (automatic_certificate_degree).
  int certificate_degree = 0;
  // Terms below this total degree are dropped; with F(0) = 0 and b(0) = 0 the exact
  // condition has none, so what the fit puts there is estimation error. 0 keeps all.
  int certificate_min_degree = 0;

  /// Fills defaults (b = x^T x) and checks ranges for a system with n states and m inputs.
  void validate(int n, int m);
};

nlohmann::json to_json(const SynthesisSpec& s);
SynthesisSpec synthesis_spec_from_json(const nlohmann::json& j);

/// Raised when the basis degree rule deg(Psi) >= max(deg(ab), deg(bc_j)) fails, or other
/// structural problems with the SOS program.
class SosError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which entries of z_a and z_cj are free decisions.
struct DecisionLayout {
  int n = 0;
  int m = 0;
  bool a_fixed = true;
  BasisPtr a_basis;
  std::vector<BasisPtr> c_bases;
  std::vector<std::size_t> a_free;               // positions in a_basis
  std::vector<std::vector<std::size_t>> c_free;  // positions in c_bases[j]

  int size() const;
  int a_offset() const { return 0; }
  int c_offset(int j) const;
};

DecisionLayout make_layout(int n, int m, const SynthesisSpec& spec);

struct DecisionVector {
  PolyVec a;
  std::vector<PolyVec> c;
};

/// Expands raw decisions d into the polynomials a and c_j (a = 1 when fixed).
DecisionVector decisions_to_polys(const DecisionLayout& layout, const Vector& d);

/// poly(d) = lin * d + offset, coefficients in `basis`.
struct AffinePolyMap {
  BasisPtr basis;
  Matrix lin;
  Vector offset;

  PolyVec apply(const Vector& d) const { return PolyVec(basis, lin * d + offset); }
  int degree() const;  // highest degree with any nonzero entry; -1 if identically zero
};

/// d -> (1+alpha) b (P0 a + sum_j Pj c_j) - alpha (P0 (b a) + sum_j Pj (b c_j)).
/// Applies clean_tol and certificate_degree from the spec.
AffinePolyMap assemble_stability_map(const GeneratorSet& gen, const SynthesisSpec& spec);

/// Highest degree of the learned vector field, counting coefficients at least rel_tol
/// times the largest coefficient of any component; -1 when the field vanishes.
int estimated_field_degree(const Matrix& L, const BasisPtr& basis, double rel_tol);

/// deg b - 1 + max(deg a + deg F, deg c_j + deg G_j) with F, G estimated from the
/// generators, rounded up to an even number.
int automatic_certificate_degree(const GeneratorSet& gen, const SynthesisSpec& spec);

/// Same map before cleaning and degree capping.
AffinePolyMap assemble_raw_stability_map(const GeneratorSet& gen, const SynthesisSpec& spec);

struct SosConstraint {
  std::string name;
  AffinePolyMap map;  // must be SOS
};

struct SosProgram {
  DecisionLayout layout;
  Vector weights;  // l1 weights, objective sum_k weights_k |d_k|
  std::vector<SosConstraint> constraints;
  int basis_degree = 0;
  int alpha = 0;
};

SosProgram build_program(const GeneratorSet& gen, const SynthesisSpec& spec);

/// Gram parameterisation of one SOS constraint: p = z^T Q z with z the half-degree
/// monomials kept after Newton-polytope style pruning.
struct GramStructure {
  BasisPtr poly_basis;                  // basis of the constrained polynomial
  int half_degree = 0;
  BasisPtr half_basis;
  std::vector<std::size_t> monomials;   // positions in half_basis, size = Gram block size
  // For each monomial row gamma of poly_basis: list of (i, j), i >= j, block indices with z_i z_j = x^gamma.
  std::vector<std::vector<std::pair<int, int>>> pairs;
};

GramStructure gram_parameterize(const AffinePolyMap& map);

/// Rebuilds coefficients sum_{z_i z_j = x^gamma} Q_ij for a symmetric Gram matrix.
Vector gram_to_coeffs(const GramStructure& g, const Matrix& Q);

struct CompiledSdp {
  sdp::SdpProblem problem;
  int num_decisions = 0;  // d+ occupies scalar vars [0, N), d- occupies [N, 2N)
  std::vector<GramStructure> grams;
  std::vector<int> rows_per_constraint;
};

CompiledSdp compile_sdp(const SosProgram& program);

/// Raised when the SDP solver does not report an optimal point.
class SdpFailure : public std::runtime_error {
 public:
  SdpFailure(const std::string& what, sdp::Status status, double pres, double dres, double gap)
      : std::runtime_error(what), status(status), primal_residual(pres), dual_residual(dres), duality_gap(gap) {}
  sdp::Status status;
  double primal_residual;
  double dual_residual;
  double duality_gap;
};

/// d = d+ - d-, coefficients with |d| < snap_tol zeroed, expanded into polynomials.
DecisionVector extract_solution(const SosProgram& program, const CompiledSdp& compiled, const sdp::SdpSolution& sol,
                                double snap_tol = 1e-7);

/// Raw decision vector d = d+ - d- (no snapping).
Vector raw_decisions(const CompiledSdp& compiled, const sdp::SdpSolution& sol);

/// Replaces (d+, d-) by (max(d, 0), max(-d, 0)). Interior-point iterates keep a small
/// common part in both halves; removing it leaves every equality row unchanged.
void collapse_split(const CompiledSdp& compiled, sdp::SdpSolution& sol);

/// Debug dump: human-readable listing plus the affine maps as JSON.
nlohmann::json to_json(const SosProgram& program);
std::string describe(const SosProgram& program);

}  // namespace densyn
