#include "densyn/polybasis.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace densyn {

int MultiIndex::degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

bool grlex_less(const MultiIndex& a, const MultiIndex& b) {
  const int da = a.degree();
  const int db = b.degree();
  if (da != db) return da < db;
  // Same degree: larger exponent on an earlier variable comes first.
  for (std::size_t i = 0; i < a.exponents.size(); ++i) {
    if (a.exponents[i] != b.exponents[i]) return a.exponents[i] > b.exponents[i];
  }
  return false;
}

std::size_t basis_size(int n, int q) {
  // C(n+q, q) computed incrementally; exact for the sizes used here.
  std::size_t r = 1;
  for (int k = 1; k <= q; ++k) r = r * static_cast<std::size_t>(n + k) / static_cast<std::size_t>(k);
  return r;
}

namespace {

void append_degree(int n, int d, int var, std::vector<int>& cur, std::vector<MultiIndex>& out) {
  if (var == n - 1) {
    cur[var] = d;
    out.push_back(MultiIndex{cur});
    cur[var] = 0;
    return;
  }
  for (int e = d; e >= 0; --e) {
    cur[var] = e;
    append_degree(n, d - e, var + 1, cur, out);
  }
  cur[var] = 0;
}

}  // namespace

MonomialBasis::MonomialBasis(int n, int q) : n_(n), q_(q) {
  if (n < 1) throw std::invalid_argument("MonomialBasis: dimension must be >= 1");
  if (q < 0) throw std::invalid_argument("MonomialBasis: degree must be >= 0");

  const int top = n + q + 1;
  binom_.assign(static_cast<std::size_t>(top + 1), std::vector<std::size_t>(static_cast<std::size_t>(top + 1), 0));
  for (int a = 0; a <= top; ++a) {
    binom_[a][0] = 1;
    for (int b = 1; b <= a; ++b) binom_[a][b] = binom_[a - 1][b - 1] + binom_[a - 1][b];
  }

  indices_.reserve(basis_size(n, q));
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  for (int d = 0; d <= q; ++d) append_degree(n, d, 0, cur, indices_);

  parent_.assign(indices_.size(), 0);
  factor_.assign(indices_.size(), -1);
  std::vector<int> e;
  for (std::size_t k = 1; k < indices_.size(); ++k) {
    e = indices_[k].exponents;
    int i = 0;
    while (e[i] == 0) ++i;
    --e[i];
    parent_[k] = rank(e);
    factor_[k] = i;
  }
}

std::size_t MonomialBasis::degree_offset(int d) const {
  if (d <= 0) return 0;
  if (d > q_ + 1) throw std::out_of_range("degree_offset beyond basis degree");
  return binom_[n_ + d - 1][n_];
}

std::size_t MonomialBasis::rank(std::span<const int> exponents) const {
  if (static_cast<int>(exponents.size()) != n_) throw std::invalid_argument("rank: dimension mismatch");
  int d = 0;
  for (int e : exponents) {
    if (e < 0) throw std::invalid_argument("rank: negative exponent");
    d += e;
  }
  if (d > q_) throw std::out_of_range("rank: monomial degree exceeds basis degree");
  std::size_t pos = degree_offset(d);
  int r = d;
  for (int i = 0; i + 1 < n_; ++i) {
    const int rest = n_ - i - 2;
    for (int k = exponents[i] + 1; k <= r; ++k) pos += binom_[r - k + rest][rest];
    r -= exponents[i];
  }
  return pos;
}

BasisPtr build_basis(int n, int q) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, BasisPtr> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, q}];
  if (!slot) slot = std::make_shared<const MonomialBasis>(n, q);
  return slot;
}

Vector eval_basis(const MonomialBasis& basis, std::span<const double> x) {
  if (static_cast<int>(x.size()) != basis.dim()) throw std::invalid_argument("eval_basis: dimension mismatch");
  Vector psi(static_cast<Eigen::Index>(basis.size()));
  psi[0] = 1.0;
  for (std::size_t k = 1; k < basis.size(); ++k) {
    psi[static_cast<Eigen::Index>(k)] = psi[static_cast<Eigen::Index>(basis.parent_[k])] * x[basis.factor_[k]];
  }
  return psi;
}

PolyVec::PolyVec(BasisPtr basis) : basis_(std::move(basis)) {
  coeffs_ = Vector::Zero(static_cast<Eigen::Index>(basis_->size()));
}

PolyVec::PolyVec(BasisPtr basis, Vector coeffs) : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != static_cast<Eigen::Index>(basis_->size())) {
    throw std::invalid_argument("PolyVec: coefficient count does not match basis size");
  }
}

double PolyVec::operator()(std::span<const double> x) const { return coeffs_.dot(eval_basis(*basis_, x)); }

double PolyVec::operator()(const Vector& x) const { return coeffs_.dot(eval_basis(*basis_, x)); }

int PolyVec::actual_degree() const {
  for (Eigen::Index k = coeffs_.size() - 1; k >= 0; --k) {
    if (coeffs_[k] != 0.0) return (*basis_)[static_cast<std::size_t>(k)].degree();
  }
  return -1;
}

bool PolyVec::is_zero() const { return actual_degree() < 0; }

double PolyVec::coeff(std::span<const int> exponents) const {
  int d = 0;
  for (int e : exponents) d += e;
  if (d > basis_->degree()) return 0.0;
  return coeffs_[static_cast<Eigen::Index>(basis_->rank(exponents))];
}

double PolyVec::coeff(std::initializer_list<int> exponents) const {
  return coeff(std::span<const int>(exponents.begin(), exponents.size()));
}

void PolyVec::set_coeff(std::initializer_list<int> exponents, double value) {
  coeffs_[static_cast<Eigen::Index>(basis_->rank(std::span<const int>(exponents.begin(), exponents.size())))] = value;
}

PolyVec PolyVec::operator+(const PolyVec& other) const {
  if (!basis_->same_as(other.basis())) throw std::invalid_argument("PolyVec +: basis mismatch (embed first)");
  return PolyVec(basis_, coeffs_ + other.coeffs_);
}

PolyVec PolyVec::operator-(const PolyVec& other) const {
  if (!basis_->same_as(other.basis())) throw std::invalid_argument("PolyVec -: basis mismatch (embed first)");
  return PolyVec(basis_, coeffs_ - other.coeffs_);
}

PolyVec PolyVec::operator*(double s) const { return PolyVec(basis_, coeffs_ * s); }

PolyVec constant(int n, int q, double value) {
  PolyVec p(build_basis(n, q));
  p.coeffs()[0] = value;
  return p;
}

PolyVec coordinate(int n, int q, int i) {
  if (q < 1) throw std::invalid_argument("coordinate: basis degree must be >= 1");
  PolyVec p(build_basis(n, q));
  p.coeffs()[1 + i] = 1.0;
  return p;
}

PolyVec squared_norm(int n, int q) {
  if (q < 2) throw std::invalid_argument("squared_norm: basis degree must be >= 2");
  PolyVec p(build_basis(n, q));
  std::vector<int> e(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    e[i] = 2;
    p.coeffs()[static_cast<Eigen::Index>(p.basis().rank(e))] = 1.0;
    e[i] = 0;
  }
  return p;
}

PolyVec multiply(const PolyVec& p, const PolyVec& r) {
  if (p.dim() != r.dim()) throw std::invalid_argument("multiply: dimension mismatch");
  const int n = p.dim();
  BasisPtr out_basis = build_basis(n, p.basis().degree() + r.basis().degree());
  PolyVec out(out_basis);
  std::vector<int> e(static_cast<std::size_t>(n));
  for (std::size_t a = 0; a < p.basis().size(); ++a) {
    const double ca = p.coeffs()[static_cast<Eigen::Index>(a)];
    if (ca == 0.0) continue;
    for (std::size_t b = 0; b < r.basis().size(); ++b) {
      const double cb = r.coeffs()[static_cast<Eigen::Index>(b)];
      if (cb == 0.0) continue;
      for (int i = 0; i < n; ++i) e[i] = p.basis()[a].exponents[i] + r.basis()[b].exponents[i];
      out.coeffs()[static_cast<Eigen::Index>(out_basis->rank(e))] += ca * cb;
    }
  }
  return out;
}

Matrix multiplication_matrix(const PolyVec& b, const MonomialBasis& source) {
  if (b.dim() != source.dim()) throw std::invalid_argument("multiplication_matrix: dimension mismatch");
  const int n = source.dim();
  BasisPtr target = build_basis(n, source.degree() + b.basis().degree());
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(target->size()), static_cast<Eigen::Index>(source.size()));
  std::vector<int> e(static_cast<std::size_t>(n));
  for (std::size_t a = 0; a < b.basis().size(); ++a) {
    const double ca = b.coeffs()[static_cast<Eigen::Index>(a)];
    if (ca == 0.0) continue;
    for (std::size_t s = 0; s < source.size(); ++s) {
      for (int i = 0; i < n; ++i) e[i] = b.basis()[a].exponents[i] + source[s].exponents[i];
      m(static_cast<Eigen::Index>(target->rank(e)), static_cast<Eigen::Index>(s)) += ca;
    }
  }
  return m;
}

Matrix derivative_matrix(const MonomialBasis& basis, int i) {
  if (i < 0 || i >= basis.dim()) throw std::out_of_range("derivative_matrix: coordinate out of range");
  const auto size = static_cast<Eigen::Index>(basis.size());
  Matrix d = Matrix::Zero(size, size);
  std::vector<int> e;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const int power = basis[k].exponents[i];
    if (power == 0) continue;
    e = basis[k].exponents;
    --e[i];
    d(static_cast<Eigen::Index>(basis.rank(e)), static_cast<Eigen::Index>(k)) = power;
  }
  return d;
}

PolyVec partial_derivative(const PolyVec& p, int i) {
  if (i < 0 || i >= p.dim()) throw std::out_of_range("partial_derivative: coordinate out of range");
  PolyVec out(p.basis_ptr());
  std::vector<int> e;
  for (std::size_t k = 0; k < p.basis().size(); ++k) {
    const double c = p.coeffs()[static_cast<Eigen::Index>(k)];
    const int power = p.basis()[k].exponents[i];
    if (c == 0.0 || power == 0) continue;
    e = p.basis()[k].exponents;
    --e[i];
    out.coeffs()[static_cast<Eigen::Index>(p.basis().rank(e))] += power * c;
  }
  return out;
}

PolyVec divergence(std::span<const PolyVec> components) {
  if (components.empty()) throw std::invalid_argument("divergence: no components");
  const int n = components.front().dim();
  if (static_cast<int>(components.size()) != n) {
    throw std::invalid_argument("divergence: expected " + std::to_string(n) + " components, got " +
                                std::to_string(components.size()));
  }
  PolyVec out(components.front().basis_ptr());
  for (int i = 0; i < n; ++i) {
    if (!components[i].basis().same_as(out.basis())) throw std::invalid_argument("divergence: components must share a basis");
    out.coeffs() += partial_derivative(components[i], i).coeffs();
  }
  return out;
}

Matrix state_extraction(const MonomialBasis& basis) {
  if (basis.degree() < 1) throw std::invalid_argument("state_extraction: basis has no degree-1 monomials (q = 0)");
  Matrix cx = Matrix::Zero(static_cast<Eigen::Index>(basis.size()), basis.dim());
  for (int i = 0; i < basis.dim(); ++i) cx(1 + i, i) = 1.0;
  return cx;
}

PolyVec embed(const PolyVec& p, int target_degree) {
  if (target_degree < p.basis().degree()) {
    throw std::invalid_argument("embed: target degree " + std::to_string(target_degree) + " below source degree " +
                                std::to_string(p.basis().degree()));
  }
  // Graded order puts lower degrees first, so embedding is zero padding.
  PolyVec out(build_basis(p.dim(), target_degree));
  out.coeffs().head(p.coeffs().size()) = p.coeffs();
  return out;
}

Matrix embedding_matrix(const MonomialBasis& source, const MonomialBasis& target) {
  if (source.dim() != target.dim() || target.degree() < source.degree()) {
    throw std::invalid_argument("embedding_matrix: target must be a superset basis");
  }
  Matrix e = Matrix::Zero(static_cast<Eigen::Index>(target.size()), static_cast<Eigen::Index>(source.size()));
  e.topRows(static_cast<Eigen::Index>(source.size())).setIdentity();
  return e;
}

PolyVec truncate(const PolyVec& p, int target_degree) {
  if (target_degree < 0) throw std::invalid_argument("truncate: negative degree");
  if (target_degree >= p.basis().degree()) return embed(p, target_degree);
  BasisPtr b = build_basis(p.dim(), target_degree);
  return PolyVec(b, p.coeffs().head(static_cast<Eigen::Index>(b->size())));
}

nlohmann::json to_json(const PolyVec& p) {
  std::vector<double> c(p.coeffs().data(), p.coeffs().data() + p.coeffs().size());
  return nlohmann::json{{"n", p.dim()}, {"q", p.basis().degree()}, {"coeffs", c}, {"ordering", "grlex"}};
}

PolyVec poly_from_json(const nlohmann::json& j) {
  if (j.contains("ordering") && j.at("ordering").get<std::string>() != "grlex") {
    throw std::invalid_argument("poly_from_json: unsupported monomial ordering");
  }
  const int n = j.at("n").get<int>();
  const int q = j.at("q").get<int>();
  auto c = j.at("coeffs").get<std::vector<double>>();
  BasisPtr b = build_basis(n, q);
  if (c.size() != b->size()) throw std::invalid_argument("poly_from_json: coefficient count mismatch");
  return PolyVec(b, Eigen::Map<Vector>(c.data(), static_cast<Eigen::Index>(c.size())));
}

std::string to_string(const PolyVec& p, double zero_tol) {
  std::ostringstream os;
  bool first = true;
  for (std::size_t k = 0; k < p.basis().size(); ++k) {
    const double c = p.coeffs()[static_cast<Eigen::Index>(k)];
    if (std::abs(c) <= zero_tol || c == 0.0) continue;
    os << (first ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + "));
    os << std::abs(c);
    bool first_var = true;
    for (int i = 0; i < p.dim(); ++i) {
      const int e = p.basis()[k].exponents[i];
      if (e == 0) continue;
      os << (first_var ? " " : "*") << "x" << (i + 1);
      if (e > 1) os << "^" << e;
      first_var = false;
    }
    first = false;
  }
  return first ? std::string("0") : os.str();
}

}  // namespace densyn
