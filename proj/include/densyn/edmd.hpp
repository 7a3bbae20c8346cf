#pragma once

// EDMD fits of finite Koopman matrices and the derived Koopman / Perron-Frobenius
// generator approximations for the drift and each input channel.
//
// Convention: matrices act on coefficient vectors. If psi = z^T Psi, the fitted
// Koopman matrix K satisfies psi(phi_dt(x)) ~ (K z)^T Psi(x); generators follow.

#include <stdexcept>
#include <vector>

#include "densyn/dynamics.hpp"
#include "densyn/polybasis.hpp"

namespace densyn {

struct FitOptions {
  double ridge = 0.0;        // Tikhonov weight added to the Gram matrix A
  double sv_cutoff = 1e-10;  // relative singular-value cutoff of the pseudo-inverse
  bool scale_monomials = false;  // normalise Psi columns by their max |value| over the data
};

struct KoopmanFit {
  BasisPtr basis;
  InputLabel label;
  double dt = 0.0;
  int samples = 0;
  Matrix K;
  Matrix K_minus_identity;  // K - I, formed without cancellation
  double residual = 0.0;      // |B - A K|_F / |B|_F
  double data_residual = 0.0; // |Psi(Y) - K^T Psi(X)|_F / |Psi(Y)|_F
  double cond_A = 0.0;
  int truncated_directions = 0;
};

/// Raised when A is numerically singular and no ridge was requested.
class SingularGram : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A = (1/T) sum Psi(x)Psi(x)^T, B = (1/T) sum Psi(x)Psi(y)^T, K = (A + ridge I)^+ B.
KoopmanFit fit_koopman(const SnapshotSet& data, const BasisPtr& basis, const FitOptions& opts = {});

/// L0 = (K0 - I) / dt.
Matrix drift_generator(const Matrix& K0, double dt);
Matrix drift_generator(const KoopmanFit& fit0);

/// Lj = (Kj - K0) / dt.
Matrix control_generator(const Matrix& Kj, const Matrix& K0, double dt);
Matrix control_generator(const KoopmanFit& fit_j, const KoopmanFit& fit0);

/// Vector field recovered from a generator: component i has coefficients L * C_x e_i.
std::vector<PolyVec> vector_field_estimate(const Matrix& L, const BasisPtr& basis);

/// Divergence of the recovered vector field, returned in the basis of degree q - 1.
PolyVec divergence_estimate(const Matrix& L, const BasisPtr& basis);

/// Linear map z -> coeffs(div (v psi)) ~ L z + div * psi, from `source` into `target`.
struct PfOperator {
  BasisPtr source;
  BasisPtr target;
  Matrix matrix;  // |target| x |source|

  Vector apply(const Vector& z) const { return matrix * z; }
  PolyVec apply(const PolyVec& psi) const;
};

/// target_degree must be at least q + deg(basis of div); smaller targets are refused.
PfOperator pf_generator(const Matrix& L, const PolyVec& div, const BasisPtr& basis, int target_degree);

struct GeneratorSet {
  BasisPtr basis;
  double dt = 0.0;
  Matrix L0;
  std::vector<Matrix> L;  // one per input channel
  PolyVec divF;
  std::vector<PolyVec> divG;
  PfOperator P0;
  std::vector<PfOperator> P;
  std::vector<double> fit_residuals;       // zero input first, then e_1..e_m
  std::vector<double> fit_data_residuals;  // same order

  int n() const { return basis->dim(); }
  int m() const { return static_cast<int>(L.size()); }
};

/// Assembles L0, L_j, divergences and P-F operators from per-label fits sharing basis and dt.
GeneratorSet build_generators(const KoopmanFit& zero_fit, const std::vector<KoopmanFit>& step_fits);

/// Builds a generator set directly from generator matrices (used for tests and reloads).
GeneratorSet generators_from_matrices(const BasisPtr& basis, double dt, const Matrix& L0, const std::vector<Matrix>& L);

nlohmann::json to_json(const GeneratorSet& g);
GeneratorSet generators_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace densyn
