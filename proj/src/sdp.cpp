#include "densyn/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace densyn::sdp {

std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::max_iter: return "max_iter";
  }
  return "unknown";
}

void SdpProblem::validate() const {
  const auto check_block = [&](const BlockEntry& e, const char* where) {
    if (e.block < 0 || e.block >= static_cast<int>(block_sizes.size())) {
      throw std::invalid_argument(std::string(where) + ": block index out of range");
    }
    const int n = block_sizes[e.block];
    if (e.row < 0 || e.col < 0 || e.row >= n || e.col >= n) throw std::invalid_argument(std::string(where) + ": entry out of range");
    if (e.row < e.col) throw std::invalid_argument(std::string(where) + ": entries must be lower triangle (row >= col)");
  };
  for (int n : block_sizes) {
    if (n < 1) throw std::invalid_argument("sdp: block sizes must be positive");
  }
  if (num_nonneg < 0) throw std::invalid_argument("sdp: negative number of scalar variables");
  if (objective_linear.size() != 0 && objective_linear.size() != num_nonneg) {
    throw std::invalid_argument("sdp: linear objective length mismatch");
  }
  for (const auto& e : objective_blocks) check_block(e, "objective");
  for (const auto& c : constraints) {
    for (const auto& e : c.blocks) check_block(e, "constraint");
    for (const auto& l : c.linear) {
      if (l.var < 0 || l.var >= num_nonneg) throw std::invalid_argument("constraint: scalar variable out of range");
    }
  }
}

namespace {

struct Entry {
  int row;
  int col;
  double value;
};

// Problem data regrouped for the iteration.
struct Data {
  int m = 0;
  int p = 0;
  std::vector<int> n;
  // touching[k] = (constraint, entries) for every constraint with entries in block k
  std::vector<std::vector<std::pair<int, std::vector<Entry>>>> touching;
  Matrix B;  // m x p
  std::vector<Matrix> C;
  Vector c;
  Vector b;
  double norm_b = 0.0;
  double norm_c = 0.0;
};

Data prepare(const SdpProblem& prob) {
  prob.validate();
  Data d;
  d.m = prob.num_constraints();
  d.p = prob.num_nonneg;
  d.n = prob.block_sizes;
  const auto nb = d.n.size();
  d.touching.resize(nb);
  d.B = Matrix::Zero(d.m, d.p);
  d.b.resize(d.m);
  for (int i = 0; i < d.m; ++i) {
    const auto& con = prob.constraints[i];
    d.b[i] = con.rhs;
    for (const auto& l : con.linear) d.B(i, l.var) += l.value;
    std::vector<std::vector<Entry>> per_block(nb);
    for (const auto& e : con.blocks) per_block[e.block].push_back({e.row, e.col, e.value});
    for (std::size_t k = 0; k < nb; ++k) {
      if (!per_block[k].empty()) d.touching[k].emplace_back(i, std::move(per_block[k]));
    }
  }
  d.C.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) d.C[k] = Matrix::Zero(d.n[k], d.n[k]);
  for (const auto& e : prob.objective_blocks) {
    d.C[e.block](e.row, e.col) += e.value;
    if (e.row != e.col) d.C[e.block](e.col, e.row) += e.value;
  }
  d.c = prob.objective_linear.size() ? prob.objective_linear : Vector::Zero(d.p);
  d.norm_b = d.b.norm();
  double cc = d.c.squaredNorm();
  for (const auto& Ck : d.C) cc += Ck.squaredNorm();
  d.norm_c = std::sqrt(cc);
  return d;
}

double inner(const std::vector<Entry>& entries, const Matrix& G) {
  double acc = 0.0;
  for (const auto& e : entries) {
    acc += e.row == e.col ? e.value * G(e.row, e.row) : e.value * (G(e.row, e.col) + G(e.col, e.row));
  }
  return acc;
}

// A(X) + B x
Vector apply_A(const Data& d, const std::vector<Matrix>& X, const Vector& x) {
  Vector r = d.p > 0 ? Vector(d.B * x) : Vector::Zero(d.m);
  for (std::size_t k = 0; k < d.n.size(); ++k) {
    for (const auto& [i, entries] : d.touching[k]) r[i] += inner(entries, X[k]);
  }
  return r;
}

// A*(y) per block
std::vector<Matrix> apply_At(const Data& d, const Vector& y) {
  std::vector<Matrix> out(d.n.size());
  for (std::size_t k = 0; k < d.n.size(); ++k) {
    out[k] = Matrix::Zero(d.n[k], d.n[k]);
    for (const auto& [i, entries] : d.touching[k]) {
      for (const auto& e : entries) {
        out[k](e.row, e.col) += y[i] * e.value;
        if (e.row != e.col) out[k](e.col, e.row) += y[i] * e.value;
      }
    }
  }
  return out;
}

double frob_inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

double min_eig(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

// Largest step alpha with X + alpha dX PSD (infinity if unbounded).
double max_step_psd(const Matrix& X, const Matrix& dX) {
  Eigen::LLT<Matrix> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const Matrix Linv_dX = llt.matrixL().solve(dX);
  Matrix W = llt.matrixL().solve(Linv_dX.transpose());
  W = 0.5 * (W + W.transpose());
  const double lmin = min_eig(W);
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

double max_step_pos(const Vector& x, const Vector& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx[i] < 0.0) a = std::min(a, -x[i] / dx[i]);
  }
  return a;
}

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

struct Residuals {
  Vector rp;               // b - A(X) - Bx
  std::vector<Matrix> Rd;  // C - A*(y) - S
  Vector rd;               // c - B^T y - s
  double pres = 0.0;
  double dres = 0.0;
  double pobj = 0.0;
  double dobj = 0.0;
  double gap = 0.0;
};

Residuals residuals(const Data& d, const std::vector<Matrix>& X, const Vector& x, const Vector& y,
                    const std::vector<Matrix>& S, const Vector& s) {
  Residuals r;
  r.rp = d.b - apply_A(d, X, x);
  const auto Aty = apply_At(d, y);
  r.Rd.resize(d.n.size());
  double dd = 0.0;
  for (std::size_t k = 0; k < d.n.size(); ++k) {
    r.Rd[k] = d.C[k] - Aty[k] - S[k];
    dd += r.Rd[k].squaredNorm();
  }
  r.rd = d.p > 0 ? Vector(d.c - d.B.transpose() * y - s) : Vector();
  dd += r.rd.squaredNorm();
  r.pres = r.rp.norm() / (1.0 + d.norm_b);
  r.dres = std::sqrt(dd) / (1.0 + d.norm_c);
  r.pobj = d.p > 0 ? d.c.dot(x) : 0.0;
  for (std::size_t k = 0; k < d.n.size(); ++k) r.pobj += frob_inner(d.C[k], X[k]);
  r.dobj = d.b.dot(y);
  r.gap = std::abs(r.pobj - r.dobj) / (1.0 + std::abs(r.pobj) + std::abs(r.dobj));
  return r;
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SolverParams& params) {
  if (!(params.tol > 0.0)) throw std::invalid_argument("sdp::solve: tol must be positive");
  const Data orig = prepare(problem);

  // Iterate on a copy with every equality row normalised to unit norm; residuals and
  // stopping decisions use the original data (y_orig = row_scale .* y).
  Vector row_scale = Vector::Ones(orig.m);
  {
    Vector sq = Vector::Zero(orig.m);
    for (const auto& blk : orig.touching) {
      for (const auto& [i, entries] : blk) {
        for (const auto& e : entries) sq[i] += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
      }
    }
    for (int i = 0; i < orig.m; ++i) {
      const double nrm = std::sqrt(sq[i] + orig.B.row(i).squaredNorm());
      if (nrm > 0.0) row_scale[i] = 1.0 / nrm;
    }
  }
  Data d = orig;
  for (auto& blk : d.touching) {
    for (auto& [i, entries] : blk) {
      for (auto& e : entries) e.value *= row_scale[i];
    }
  }
  d.B = row_scale.asDiagonal() * d.B;
  d.b = d.b.cwiseProduct(row_scale);
  d.norm_b = d.b.norm();

  const auto nb = d.n.size();
  const int m = d.m;
  const int p = d.p;

  SdpSolution sol;

  // Starting point scaled to the data, in the spirit of common IPM codes.
  double max_row = 1.0;
  std::vector<double> row_norm(static_cast<std::size_t>(m), 0.0);
  for (std::size_t k = 0; k < nb; ++k) {
    for (const auto& [i, entries] : d.touching[k]) {
      for (const auto& e : entries) row_norm[i] += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
    }
  }
  for (int i = 0; i < m; ++i) {
    row_norm[i] = std::sqrt(row_norm[i] + d.B.row(i).squaredNorm());
    max_row = std::max(max_row, row_norm[i]);
  }
  int total_dim = p;
  for (int nk : d.n) total_dim += nk;
  double xi = std::max(10.0, std::sqrt(static_cast<double>(std::max(total_dim, 1))));
  for (int i = 0; i < m; ++i) xi = std::max(xi, (1.0 + std::abs(d.b[i])) / (1.0 + row_norm[i]) * total_dim);
  double eta = std::max({10.0, std::sqrt(static_cast<double>(std::max(total_dim, 1))), max_row, d.norm_c});

  std::vector<Matrix> X(nb), S(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    X[k] = xi * Matrix::Identity(d.n[k], d.n[k]);
    S[k] = eta * Matrix::Identity(d.n[k], d.n[k]);
  }
  Vector x = Vector::Constant(p, xi);
  Vector s = Vector::Constant(p, eta);
  Vector y = Vector::Zero(m);

  double best_res = std::numeric_limits<double>::infinity();
  int best_iter = 0;

  // Best iterate seen so far (by the worst of the three stopping measures on the original data).
  struct Snapshot {
    std::vector<Matrix> X, S;
    Vector x, s, y;
    Residuals r;
    int it = -1;
    double score = std::numeric_limits<double>::infinity();
  } best;

  const auto finish_with = [&](Status st, const std::vector<Matrix>& X_, const Vector& x_, const Vector& y_,
                               const std::vector<Matrix>& S_, const Vector& s_, const Residuals& r, int it, std::string msg) {
    sol.status = st;
    sol.X = X_;
    sol.x = x_;
    sol.y = y_;
    sol.S = S_;
    sol.s = s_;
    sol.primal_objective = r.pobj;
    sol.dual_objective = r.dobj;
    sol.primal_residual = r.pres;
    sol.dual_residual = r.dres;
    sol.duality_gap = r.gap;
    sol.iterations = it;
    sol.message = std::move(msg);
    return sol;
  };
  const auto finish = [&](Status st, const Residuals& r, int it, std::string msg) {
    return finish_with(st, X, x, y.cwiseProduct(row_scale), S, s, r, it, std::move(msg));
  };
  // Numerical breakdown: fall back to the best iterate, which may already meet the tolerance.
  const auto breakdown = [&](const Residuals& r, int it, const std::string& why) {
    if (best.it < 0) return finish(Status::max_iter, r, it, why);
    const bool ok = best.r.pres <= params.tol && best.r.dres <= params.tol && best.r.gap <= params.tol;
    return finish_with(ok ? Status::optimal : Status::max_iter, best.X, best.x, best.y, best.S, best.s, best.r, it,
                       ok ? "converged" : why + " (best iterate returned)");
  };

  for (int it = 0;; ++it) {
    const Residuals r_scaled = residuals(d, X, x, y, S, s);
    const Residuals r = residuals(orig, X, x, y.cwiseProduct(row_scale), S, s);
    if (!std::isfinite(r.pres) || !std::isfinite(r.dres) || !std::isfinite(r.pobj) || !std::isfinite(r.dobj)) {
      return breakdown(r, it, "numerical breakdown (non-finite iterate)");
    }
    {
      const double score = std::max({r.pres, r.dres, r.gap});
      if (score < best.score) {
        best = Snapshot{X, S, x, s, y.cwiseProduct(row_scale), r, it, score};
      }
    }
    double mu_num = x.dot(s);
    for (std::size_t k = 0; k < nb; ++k) mu_num += frob_inner(X[k], S[k]);
    const double mu = mu_num / std::max(total_dim, 1);

    if (params.verbose) {
      std::fprintf(stderr, "%3d pobj %+.8e dobj %+.8e pres %.2e dres %.2e gap %.2e mu %.2e\n", it, r.pobj, r.dobj,
                   r.pres, r.dres, r.gap, mu);
    }
    if (r.pres <= params.tol && r.dres <= params.tol && r.gap <= params.tol) {
      return finish(Status::optimal, r, it, "converged");
    }

    // Farkas-type certificates along diverging iterates.
    if (r.dobj > 0.0 && m > 0) {
      const Vector yt = y / r.dobj;
      const auto Aty = apply_At(d, yt);
      double viol = 0.0;
      double scale = 1.0;
      for (std::size_t k = 0; k < nb; ++k) {
        viol = std::max(viol, std::max(0.0, min_eig(Aty[k])));  // need A*(y) NSD
        scale = std::max(scale, Aty[k].norm());
      }
      if (p > 0) viol = std::max(viol, std::max(0.0, (d.B.transpose() * yt).maxCoeff()));
      if (r.dobj > 1e8 * (1.0 + d.norm_c) && viol <= 1e-8 * scale) {
        return finish(Status::infeasible, r, it, "primal infeasible: dual ray found");
      }
    }
    if (r.pobj < 0.0) {
      std::vector<Matrix> Xt(nb);
      for (std::size_t k = 0; k < nb; ++k) Xt[k] = X[k] / -r.pobj;
      const Vector xt = x / -r.pobj;
      const double res = apply_A(d, Xt, xt).norm();
      if (-r.pobj > 1e8 * (1.0 + d.norm_b) && res <= 1e-8) {
        return finish(Status::unbounded, r, it, "primal unbounded: improving ray found");
      }
    }

    const double worst = std::max(r.pres, r.dres);
    if (worst < 0.9 * best_res) {
      best_res = worst;
      best_iter = it;
    }
    if (worst > params.stall_factor * params.tol && it - best_iter >= params.stall_iterations) {
      return finish(Status::infeasible, r, it,
                    "residuals stalled above " + std::to_string(params.stall_factor * params.tol) + " for " +
                        std::to_string(params.stall_iterations) + " iterations");
    }
    if (it >= params.max_iter) return breakdown(r, it, "iteration limit reached");

    // Z = S^-1 per block.
    std::vector<Matrix> Z(nb);
    bool ok = true;
    for (std::size_t k = 0; k < nb; ++k) {
      Eigen::LLT<Matrix> llt(S[k]);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      Z[k] = llt.solve(Matrix::Identity(d.n[k], d.n[k]));
      Z[k] = sym(Z[k]);
    }
    if (!ok) return breakdown(r, it, "dual slack lost definiteness");

    // Schur complement M_ij = tr(A_i X A_j Z) + B D B^T.
    Matrix M = Matrix::Zero(m, m);
    for (std::size_t k = 0; k < nb; ++k) {
      const Matrix& Xk = X[k];
      const Matrix& Zk = Z[k];
      Matrix G(d.n[k], d.n[k]);
      for (const auto& [i, entries] : d.touching[k]) {
        G.setZero();
        for (const auto& e : entries) {
          G.noalias() += e.value * Xk.col(e.row) * Zk.row(e.col);
          if (e.row != e.col) G.noalias() += e.value * Xk.col(e.col) * Zk.row(e.row);
        }
        for (const auto& [j, ej] : d.touching[k]) {
          if (j < i) continue;
          const double v = inner(ej, G);
          M(i, j) += v;
          if (j != i) M(j, i) += v;
        }
      }
    }
    Vector Dlin;
    if (p > 0) {
      Dlin = x.cwiseQuotient(s);
      M.noalias() += d.B * Dlin.asDiagonal() * d.B.transpose();
    }
    M = sym(M);

    Eigen::LLT<Matrix> chol(M);
    if (chol.info() != Eigen::Success) {
      const double shift = 1e-13 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
      M.diagonal().array() += shift;
      chol.compute(M);
    }
    Eigen::LDLT<Matrix> ldlt;
    const bool use_ldlt = chol.info() != Eigen::Success;
    if (use_ldlt) ldlt.compute(M);

    // Direction for a given centering target (Rc, rc): dX = Rc - sym(X dS Z).
    struct Direction {
      std::vector<Matrix> dX, dS;
      Vector dx, ds, dy;
    };
    const auto direction = [&](const std::vector<Matrix>& Rc, const Vector& rc) {
      Vector rhs = r_scaled.rp;
      // rhs = rp - A(Rc) + A(X Rd Z) - B rc + B D rd
      std::vector<Matrix> T(nb);
      for (std::size_t k = 0; k < nb; ++k) T[k] = sym(X[k] * r_scaled.Rd[k] * Z[k]) - Rc[k];
      rhs += apply_A(d, T, Vector::Zero(p));
      if (p > 0) rhs += d.B * (Dlin.cwiseProduct(r_scaled.rd) - rc);
      Direction dir;
      dir.dy = use_ldlt ? Vector(ldlt.solve(rhs)) : Vector(chol.solve(rhs));
      const auto Atdy = apply_At(d, dir.dy);
      dir.dS.resize(nb);
      dir.dX.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        dir.dS[k] = r_scaled.Rd[k] - Atdy[k];
        dir.dX[k] = Rc[k] - sym(X[k] * dir.dS[k] * Z[k]);
      }
      if (p > 0) {
        dir.ds = r_scaled.rd - d.B.transpose() * dir.dy;
        dir.dx = rc - Dlin.cwiseProduct(dir.ds);
      } else {
        dir.ds = Vector();
        dir.dx = Vector();
      }
      return dir;
    };
    const auto step_lengths = [&](const Direction& dir) {
      double ap = std::numeric_limits<double>::infinity();
      double ad = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step_psd(X[k], dir.dX[k]));
        ad = std::min(ad, max_step_psd(S[k], dir.dS[k]));
      }
      if (p > 0) {
        ap = std::min(ap, max_step_pos(x, dir.dx));
        ad = std::min(ad, max_step_pos(s, dir.ds));
      }
      return std::pair<double, double>{ap, ad};
    };

    // Predictor.
    std::vector<Matrix> Rc(nb);
    for (std::size_t k = 0; k < nb; ++k) Rc[k] = -X[k];
    Vector rc = -x;
    const Direction aff = direction(Rc, rc);
    auto [ap_aff, ad_aff] = step_lengths(aff);
    ap_aff = std::min(1.0, ap_aff);
    ad_aff = std::min(1.0, ad_aff);
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      mu_aff += frob_inner(X[k] + ap_aff * aff.dX[k], S[k] + ad_aff * aff.dS[k]);
    }
    if (p > 0) mu_aff += (x + ap_aff * aff.dx).dot(s + ad_aff * aff.ds);
    mu_aff /= std::max(total_dim, 1);
    double sigma = mu > 0.0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector with second-order term.
    for (std::size_t k = 0; k < nb; ++k) Rc[k] = sigma * mu * Z[k] - X[k] - sym(aff.dX[k] * aff.dS[k] * Z[k]);
    if (p > 0) rc = (sigma * mu) * s.cwiseInverse() - x - aff.dx.cwiseProduct(aff.ds).cwiseQuotient(s);
    const Direction dir = direction(Rc, rc);
    auto [ap, ad] = step_lengths(dir);
    const double gamma = 0.95;
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);

    // Rounding can leave a nominally interior step numerically indefinite; shorten it.
    const auto all_pd = [&](const std::vector<Matrix>& base, const std::vector<Matrix>& delta, double a) {
      for (std::size_t k = 0; k < nb; ++k) {
        Eigen::LLT<Matrix> llt(sym(base[k] + a * delta[k]));
        if (llt.info() != Eigen::Success) return false;
      }
      return true;
    };
    for (int tries = 0; tries < 30 && ap > 0.0 && !all_pd(X, dir.dX, ap); ++tries) ap *= 0.8;
    for (int tries = 0; tries < 30 && ad > 0.0 && !all_pd(S, dir.dS, ad); ++tries) ad *= 0.8;

    for (std::size_t k = 0; k < nb; ++k) {
      X[k] = sym(X[k] + ap * dir.dX[k]);
      S[k] = sym(S[k] + ad * dir.dS[k]);
    }
    if (p > 0) {
      x += ap * dir.dx;
      s += ad * dir.ds;
    }
    y += ad * dir.dy;
  }
}

ResidualReport check_solution(const SdpProblem& problem, const CandidatePoint& cand) {
  const Data d = prepare(problem);
  if (cand.X.size() != d.n.size()) throw std::invalid_argument("check_solution: block count mismatch");
  for (std::size_t k = 0; k < d.n.size(); ++k) {
    if (cand.X[k].rows() != d.n[k] || cand.X[k].cols() != d.n[k]) throw std::invalid_argument("check_solution: block size mismatch");
  }
  const Vector x = d.p > 0 ? cand.x : Vector();
  if (x.size() != d.p) throw std::invalid_argument("check_solution: scalar variable count mismatch");

  ResidualReport rep;
  rep.primal_residual = (d.b - apply_A(d, cand.X, x)).norm() / (1.0 + d.norm_b);
  rep.primal_objective = d.p > 0 ? d.c.dot(x) : 0.0;
  for (std::size_t k = 0; k < d.n.size(); ++k) {
    rep.primal_objective += frob_inner(d.C[k], cand.X[k]);
    rep.min_eigenvalue.push_back(min_eig(cand.X[k]));
  }
  rep.min_nonneg = d.p > 0 ? x.minCoeff() : 0.0;
  if (cand.y.size() == d.m && d.m > 0) {
    const auto Aty = apply_At(d, cand.y);
    for (std::size_t k = 0; k < d.n.size(); ++k) rep.dual_min_eigenvalue.push_back(min_eig(d.C[k] - Aty[k]));
    if (d.p > 0) rep.dual_min_nonneg = (d.c - d.B.transpose() * cand.y).minCoeff();
    rep.dual_objective = d.b.dot(cand.y);
    // Dual slack formed from y: infeasibility is the PSD / sign violation of that slack.
    double viol = 0.0;
    for (double e : rep.dual_min_eigenvalue) viol = std::max(viol, -e);
    viol = std::max(viol, -rep.dual_min_nonneg);
    rep.dual_residual = viol / (1.0 + d.norm_c);
    rep.duality_gap = std::abs(rep.primal_objective - rep.dual_objective) /
                      (1.0 + std::abs(rep.primal_objective) + std::abs(rep.dual_objective));
  }
  return rep;
}

nlohmann::json to_json(const SdpProblem& p) {
  nlohmann::json j;
  j["block_sizes"] = p.block_sizes;
  j["num_nonneg"] = p.num_nonneg;
  auto entries = [](const std::vector<BlockEntry>& es) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : es) arr.push_back({e.block, e.row, e.col, e.value});
    return arr;
  };
  j["objective"] = {{"blocks", entries(p.objective_blocks)},
                    {"linear", std::vector<double>(p.objective_linear.data(),
                                                   p.objective_linear.data() + p.objective_linear.size())}};
  j["constraints"] = nlohmann::json::array();
  for (const auto& c : p.constraints) {
    nlohmann::json lin = nlohmann::json::array();
    for (const auto& l : c.linear) lin.push_back({l.var, l.value});
    j["constraints"].push_back({{"blocks", entries(c.blocks)}, {"linear", lin}, {"rhs", c.rhs}});
  }
  j["format"] = "lower-triangle entries [block,row,col,value], row >= col";
  return j;
}

SdpProblem problem_from_json(const nlohmann::json& j) {
  SdpProblem p;
  p.block_sizes = j.at("block_sizes").get<std::vector<int>>();
  p.num_nonneg = j.at("num_nonneg").get<int>();
  auto read_entries = [](const nlohmann::json& arr) {
    std::vector<BlockEntry> es;
    for (const auto& e : arr) es.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>(), e.at(3).get<double>()});
    return es;
  };
  p.objective_blocks = read_entries(j.at("objective").at("blocks"));
  const auto lin = j.at("objective").at("linear").get<std::vector<double>>();
  p.objective_linear = Eigen::Map<const Vector>(lin.data(), static_cast<Eigen::Index>(lin.size()));
  for (const auto& c : j.at("constraints")) {
    Constraint con;
    con.blocks = read_entries(c.at("blocks"));
    for (const auto& l : c.at("linear")) con.linear.push_back({l.at(0).get<int>(), l.at(1).get<double>()});
    con.rhs = c.at("rhs").get<double>();
    p.constraints.push_back(std::move(con));
  }
  p.validate();
  return p;
}

nlohmann::json to_json(const SdpSolution& s) {
  nlohmann::json j;
  j["status"] = to_string(s.status);
  j["primal_objective"] = s.primal_objective;
  j["dual_objective"] = s.dual_objective;
  j["primal_residual"] = s.primal_residual;
  j["dual_residual"] = s.dual_residual;
  j["duality_gap"] = s.duality_gap;
  j["iterations"] = s.iterations;
  j["message"] = s.message;
  j["X"] = nlohmann::json::array();
  for (const auto& Xk : s.X) {
    std::vector<double> lower;
    for (Eigen::Index r = 0; r < Xk.rows(); ++r) {
      for (Eigen::Index c = 0; c <= r; ++c) lower.push_back(Xk(r, c));
    }
    j["X"].push_back(lower);
  }
  j["x"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
  j["y"] = std::vector<double>(s.y.data(), s.y.data() + s.y.size());
  return j;
}

}  // namespace densyn::sdp
