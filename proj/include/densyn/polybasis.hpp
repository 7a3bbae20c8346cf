#pragma once

// Dense multivariate polynomials over a graded monomial basis.
//
// Monomials of total degree <= q in n variables are ordered graded-lexicographically:
// ascending total degree, and within a degree descending lexicographic exponent order
// (x1 before x2). For n = 2, q = 2 the basis is {1, x1, x2, x1^2, x1 x2, x2^2}.

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace densyn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct MultiIndex {
  std::vector<int> exponents;

  int degree() const;
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// Strict total order used for the basis: graded, then descending lex.
bool grlex_less(const MultiIndex& a, const MultiIndex& b);

/// Number of monomials of degree <= q in n variables, binomial(n+q, q).
std::size_t basis_size(int n, int q);

class MonomialBasis {
 public:
  MonomialBasis(int n, int q);

  int dim() const { return n_; }
  int degree() const { return q_; }
  std::size_t size() const { return indices_.size(); }
  const MultiIndex& operator[](std::size_t k) const { return indices_[k]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }

  /// Position of a multi-index in this basis. Throws if its degree exceeds q.
  std::size_t rank(std::span<const int> exponents) const;

  /// Number of monomials of degree < d (offset of the degree-d block).
  std::size_t degree_offset(int d) const;

  bool same_as(const MonomialBasis& other) const { return n_ == other.n_ && q_ == other.q_; }

 private:
  int n_;
  int q_;
  std::vector<MultiIndex> indices_;
  std::vector<std::vector<std::size_t>> binom_;  // binom_[a][b] = C(a, b)
  // Psi_k = Psi_{parent_[k]} * x_{factor_[k]} for k > 0.
  std::vector<std::size_t> parent_;
  std::vector<int> factor_;

  friend Vector eval_basis(const MonomialBasis&, std::span<const double>);
};

using BasisPtr = std::shared_ptr<const MonomialBasis>;

/// Graded basis of all monomials of degree <= q. Instances are cached per (n, q).
BasisPtr build_basis(int n, int q);

/// Psi(x): vector of all basis monomials evaluated at x.
Vector eval_basis(const MonomialBasis& basis, std::span<const double> x);
inline Vector eval_basis(const MonomialBasis& basis, const Vector& x) {
  return eval_basis(basis, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

/// Polynomial p(x) = coeffs . Psi(x) in a fixed basis.
class PolyVec {
 public:
  PolyVec() = default;
  explicit PolyVec(BasisPtr basis);
  PolyVec(BasisPtr basis, Vector coeffs);

  const MonomialBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  const Vector& coeffs() const { return coeffs_; }
  Vector& coeffs() { return coeffs_; }
  int dim() const { return basis_->dim(); }

  double operator()(std::span<const double> x) const;
  double operator()(const Vector& x) const;

  /// Highest degree carrying a nonzero coefficient; -1 for the zero polynomial.
  int actual_degree() const;
  bool is_zero() const;

  /// Coefficient of the monomial with the given exponents (0 if outside the basis).
  double coeff(std::span<const int> exponents) const;
  double coeff(std::initializer_list<int> exponents) const;
  void set_coeff(std::initializer_list<int> exponents, double value);

  PolyVec operator+(const PolyVec& other) const;
  PolyVec operator-(const PolyVec& other) const;
  PolyVec operator*(double s) const;

 private:
  BasisPtr basis_;
  Vector coeffs_;
};

PolyVec constant(int n, int q, double value);
/// The coordinate x_i (0-based) in a basis of degree q >= 1.
PolyVec coordinate(int n, int q, int i);
/// x^T x in a basis of degree q >= 2.
PolyVec squared_norm(int n, int q);

/// Exact product; result lives in the basis of degree q1 + q2.
PolyVec multiply(const PolyVec& p, const PolyVec& r);

/// Matrix M with M * coeffs(p) = coeffs(b * p) for every p in `source`;
/// rows index the basis of degree source.degree() + b.basis().degree().
Matrix multiplication_matrix(const PolyVec& b, const MonomialBasis& source);

/// Exact partial derivative with respect to x_i (0-based), same basis.
PolyVec partial_derivative(const PolyVec& p, int i);

/// Matrix D_i with D_i * coeffs(p) = coeffs(d p / d x_i), square over `basis`.
Matrix derivative_matrix(const MonomialBasis& basis, int i);

/// Sum of d(components_i)/d x_i. Requires exactly n components in a shared basis.
PolyVec divergence(std::span<const PolyVec> components);

/// C_x (Q x n) such that x = C_x^T Psi(x).
Matrix state_extraction(const MonomialBasis& basis);

/// Zero-padded copy of p in the basis of degree target_degree >= p's basis degree.
PolyVec embed(const PolyVec& p, int target_degree);

/// Matrix E (Q_target x Q_source) realising embed.
Matrix embedding_matrix(const MonomialBasis& source, const MonomialBasis& target);

/// Drops every monomial above target_degree. Exact when actual_degree() <= target_degree.
PolyVec truncate(const PolyVec& p, int target_degree);

/// {"n", "q", "coeffs", "ordering": "grlex"}
nlohmann::json to_json(const PolyVec& p);
PolyVec poly_from_json(const nlohmann::json& j);

/// Human-readable listing such as "0.9 x1^2*x2 - 1.25 x2".
std::string to_string(const PolyVec& p, double zero_tol = 0.0);

}  // namespace densyn
