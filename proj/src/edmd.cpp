#include "densyn/edmd.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace densyn {

KoopmanFit fit_koopman(const SnapshotSet& data, const BasisPtr& basis, const FitOptions& opts) {
  if (data.n() != basis->dim()) throw std::invalid_argument("fit_koopman: snapshot dimension does not match basis");
  if (data.T() == 0) throw std::invalid_argument("fit_koopman: empty snapshot set");
  if (!data.X.allFinite() || !data.Y.allFinite()) throw std::invalid_argument("fit_koopman: non-finite snapshot data");
  if (opts.ridge < 0.0) throw std::invalid_argument("fit_koopman: ridge must be non-negative");

  const auto Q = static_cast<Eigen::Index>(basis->size());
  const Eigen::Index T = data.T();
  Matrix psi_x(Q, T);
  Matrix dpsi(Q, T);
  for (Eigen::Index c = 0; c < T; ++c) {
    const Vector px = eval_basis(*basis, Vector(data.X.col(c)));
    psi_x.col(c) = px;
    dpsi.col(c) = eval_basis(*basis, Vector(data.Y.col(c))) - px;
  }

  Vector scale = Vector::Ones(Q);
  if (opts.scale_monomials) {
    scale = psi_x.cwiseAbs().rowwise().maxCoeff();
    for (Eigen::Index k = 0; k < Q; ++k) scale[k] = scale[k] > 0.0 ? 1.0 / scale[k] : 1.0;
  }
  // Work in scaled coordinates D Psi; K = D K~ D^-1 afterwards.
  psi_x = scale.asDiagonal() * psi_x;
  dpsi = scale.asDiagonal() * dpsi;

  const double inv_t = 1.0 / static_cast<double>(T);
  Matrix A = Matrix(psi_x * psi_x.transpose()) * inv_t;
  Matrix B_delta = Matrix(psi_x * dpsi.transpose()) * inv_t;
  Matrix B = A + B_delta;

  Matrix A_reg = A;
  A_reg.diagonal().array() += opts.ridge;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A_reg);
  if (eig.info() != Eigen::Success) throw SingularGram("fit_koopman: eigen-decomposition of A failed");
  const Vector& lambda = eig.eigenvalues();
  const Matrix& V = eig.eigenvectors();
  const double lmax = lambda.cwiseAbs().maxCoeff();
  const double lmin = lambda.cwiseAbs().minCoeff();

  KoopmanFit fit;
  fit.basis = basis;
  fit.label = data.label;
  fit.dt = data.dt;
  fit.samples = static_cast<int>(T);
  fit.cond_A = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();

  Vector inv_lambda = Vector::Zero(Q);
  Matrix truncated_proj = Matrix::Zero(Q, Q);
  for (Eigen::Index k = 0; k < Q; ++k) {
    if (lambda[k] > opts.sv_cutoff * lmax) {
      inv_lambda[k] = 1.0 / lambda[k];
    } else {
      ++fit.truncated_directions;
      truncated_proj.noalias() += V.col(k) * V.col(k).transpose();
    }
  }
  if (fit.truncated_directions > 0 && opts.ridge == 0.0) {
    std::ostringstream os;
    os << "fit_koopman(" << data.label.name() << "): A is numerically singular (condition " << fit.cond_A
       << ", " << fit.truncated_directions << " directions below cutoff " << opts.sv_cutoff
       << "); add ridge regularisation, enable monomial scaling, or collect more data";
    throw SingularGram(os.str());
  }
  const Matrix pinv = V * inv_lambda.asDiagonal() * V.transpose();

  // K~ - I = pinv (A + B_delta) - I = pinv B_delta - ridge pinv - P_truncated.
  Matrix kd = pinv * B_delta - opts.ridge * pinv - truncated_proj;
  Matrix k_scaled = kd + Matrix::Identity(Q, Q);

  fit.residual = (B - A * k_scaled).norm() / std::max(B.norm(), std::numeric_limits<double>::min());

  const Vector inv_scale = scale.cwiseInverse();
  fit.K_minus_identity = scale.asDiagonal() * kd * inv_scale.asDiagonal();
  fit.K = fit.K_minus_identity + Matrix::Identity(Q, Q);

  // Prediction error on the lifted successors, in original coordinates.
  const Matrix psi_x_orig = inv_scale.asDiagonal() * psi_x;
  const Matrix psi_y_orig = psi_x_orig + inv_scale.asDiagonal() * dpsi;
  const Matrix pred = fit.K.transpose() * psi_x_orig;
  fit.data_residual = (psi_y_orig - pred).norm() / std::max(psi_y_orig.norm(), std::numeric_limits<double>::min());
  return fit;
}

Matrix drift_generator(const Matrix& K0, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("drift_generator: dt must be positive");
  return (K0 - Matrix::Identity(K0.rows(), K0.cols())) / dt;
}

Matrix drift_generator(const KoopmanFit& fit0) {
  if (!(fit0.dt > 0.0)) throw std::invalid_argument("drift_generator: dt must be positive");
  return fit0.K_minus_identity / fit0.dt;
}

Matrix control_generator(const Matrix& Kj, const Matrix& K0, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("control_generator: dt must be positive");
  if (Kj.rows() != K0.rows() || Kj.cols() != K0.cols()) throw std::invalid_argument("control_generator: shape mismatch");
  return (Kj - K0) / dt;
}

Matrix control_generator(const KoopmanFit& fit_j, const KoopmanFit& fit0) {
  if (!fit_j.basis->same_as(*fit0.basis)) throw std::invalid_argument("control_generator: fits use different bases");
  if (fit_j.dt != fit0.dt) throw std::invalid_argument("control_generator: fits use different dt");
  if (!(fit0.dt > 0.0)) throw std::invalid_argument("control_generator: dt must be positive");
  return (fit_j.K_minus_identity - fit0.K_minus_identity) / fit0.dt;
}

std::vector<PolyVec> vector_field_estimate(const Matrix& L, const BasisPtr& basis) {
  const auto Q = static_cast<Eigen::Index>(basis->size());
  if (L.rows() != Q || L.cols() != Q) throw std::invalid_argument("vector_field_estimate: generator shape mismatch");
  const Matrix cx = state_extraction(*basis);
  const Matrix comps = L * cx;
  std::vector<PolyVec> out;
  out.reserve(static_cast<std::size_t>(basis->dim()));
  for (int i = 0; i < basis->dim(); ++i) out.emplace_back(basis, Vector(comps.col(i)));
  return out;
}

PolyVec divergence_estimate(const Matrix& L, const BasisPtr& basis) {
  const auto field = vector_field_estimate(L, basis);
  // Each component has degree <= q, so the divergence fits exactly in degree q - 1.
  return truncate(divergence(field), basis->degree() - 1);
}

PolyVec PfOperator::apply(const PolyVec& psi) const {
  if (!psi.basis().same_as(*source)) throw std::invalid_argument("PfOperator::apply: operand basis mismatch");
  return PolyVec(target, matrix * psi.coeffs());
}

PfOperator pf_generator(const Matrix& L, const PolyVec& div, const BasisPtr& basis, int target_degree) {
  const auto Q = static_cast<Eigen::Index>(basis->size());
  if (L.rows() != Q || L.cols() != Q) throw std::invalid_argument("pf_generator: generator shape mismatch");
  const int needed = basis->degree() + div.basis().degree();
  if (target_degree < needed) {
    throw std::invalid_argument("pf_generator: target degree " + std::to_string(target_degree) +
                                " would truncate the multiplication term (need >= " + std::to_string(needed) + ")");
  }
  PfOperator op;
  op.source = basis;
  op.target = build_basis(basis->dim(), target_degree);
  op.matrix = Matrix::Zero(static_cast<Eigen::Index>(op.target->size()), Q);
  op.matrix.topRows(Q) = L;
  const Matrix mult = multiplication_matrix(div, *basis);
  op.matrix.topRows(mult.rows()) += mult;
  return op;
}

namespace {

GeneratorSet assemble(const BasisPtr& basis, double dt, Matrix L0, std::vector<Matrix> L) {
  GeneratorSet g;
  g.basis = basis;
  g.dt = dt;
  g.L0 = std::move(L0);
  g.L = std::move(L);
  const int target = 2 * basis->degree() - 1;
  g.divF = divergence_estimate(g.L0, basis);
  g.P0 = pf_generator(g.L0, g.divF, basis, target);
  for (const auto& Lj : g.L) {
    g.divG.push_back(divergence_estimate(Lj, basis));
    g.P.push_back(pf_generator(Lj, g.divG.back(), basis, target));
  }
  return g;
}

}  // namespace

GeneratorSet build_generators(const KoopmanFit& zero_fit, const std::vector<KoopmanFit>& step_fits) {
  if (!zero_fit.label.is_zero()) throw std::invalid_argument("build_generators: first fit must use the zero input");
  if (zero_fit.basis->degree() < 1) throw std::invalid_argument("build_generators: basis degree must be >= 1");
  std::vector<Matrix> L;
  for (std::size_t j = 0; j < step_fits.size(); ++j) {
    if (step_fits[j].label.channel != static_cast<int>(j)) {
      throw std::invalid_argument("build_generators: step fits must be ordered e1..em, got " +
                                  step_fits[j].label.name() + " at position " + std::to_string(j + 1));
    }
    L.push_back(control_generator(step_fits[j], zero_fit));
  }
  GeneratorSet g = assemble(zero_fit.basis, zero_fit.dt, drift_generator(zero_fit), std::move(L));
  g.fit_residuals.push_back(zero_fit.residual);
  g.fit_data_residuals.push_back(zero_fit.data_residual);
  for (const auto& f : step_fits) {
    g.fit_residuals.push_back(f.residual);
    g.fit_data_residuals.push_back(f.data_residual);
  }
  return g;
}

GeneratorSet generators_from_matrices(const BasisPtr& basis, double dt, const Matrix& L0, const std::vector<Matrix>& L) {
  if (basis->degree() < 1) throw std::invalid_argument("generators_from_matrices: basis degree must be >= 1");
  return assemble(basis, dt, L0, L);
}

nlohmann::json matrix_to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw std::invalid_argument("matrix_from_json: size mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

nlohmann::json to_json(const GeneratorSet& g) {
  nlohmann::json j;
  j["basis"] = {{"n", g.basis->dim()}, {"q", g.basis->degree()}, {"ordering", "grlex"}};
  j["dt"] = g.dt;
  j["L0"] = matrix_to_json(g.L0);
  j["L"] = nlohmann::json::array();
  for (const auto& Lj : g.L) j["L"].push_back(matrix_to_json(Lj));
  j["divF"] = to_json(g.divF);
  j["divG"] = nlohmann::json::array();
  for (const auto& d : g.divG) j["divG"].push_back(to_json(d));
  j["fit_residuals"] = g.fit_residuals;
  j["fit_data_residuals"] = g.fit_data_residuals;
  return j;
}

GeneratorSet generators_from_json(const nlohmann::json& j) {
  const auto& b = j.at("basis");
  if (b.value("ordering", std::string("grlex")) != "grlex") throw std::invalid_argument("generator bundle: unsupported ordering");
  BasisPtr basis = build_basis(b.at("n").get<int>(), b.at("q").get<int>());
  std::vector<Matrix> L;
  for (const auto& m : j.at("L")) L.push_back(matrix_from_json(m));
  GeneratorSet g = assemble(basis, j.at("dt").get<double>(), matrix_from_json(j.at("L0")), std::move(L));
  g.fit_residuals = j.value("fit_residuals", std::vector<double>{});
  g.fit_data_residuals = j.value("fit_data_residuals", std::vector<double>{});
  return g;
}

}  // namespace densyn
