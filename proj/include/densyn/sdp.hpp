#pragma once

// Small dense semidefinite programs in standard primal form
//
//   minimize    sum_k <C_k, X_k> + c^T x
//   subject to  sum_k <A_ik, X_k> + a_i^T x = b_i,   i = 1..m
//               X_k PSD,  x >= 0
//
// with dual  maximize b^T y  s.t.  S_k = C_k - sum_i y_i A_ik PSD,  s = c - sum_i y_i a_i >= 0.
// Symmetric matrices are given by lower-triangle entries (row >= col); an off-diagonal
// entry v stands for v at both (row, col) and (col, row).

#include <string>
#include <vector>

#include "densyn/polybasis.hpp"

namespace densyn::sdp {

struct BlockEntry {
  int block = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct LinearEntry {
  int var = 0;
  double value = 0.0;
};

struct Constraint {
  std::vector<BlockEntry> blocks;
  std::vector<LinearEntry> linear;
  double rhs = 0.0;
};

struct SdpProblem {
  std::vector<int> block_sizes;
  int num_nonneg = 0;
  std::vector<BlockEntry> objective_blocks;
  Vector objective_linear;  // length num_nonneg (empty means zero)
  std::vector<Constraint> constraints;

  int num_constraints() const { return static_cast<int>(constraints.size()); }
  /// Throws std::invalid_argument on out-of-range or upper-triangle entries.
  void validate() const;
};

enum class Status { optimal, infeasible, unbounded, max_iter };
std::string to_string(Status s);

struct SdpSolution {
  Status status = Status::max_iter;
  std::vector<Matrix> X;  // primal blocks
  Vector x;               // primal nonnegative variables
  Vector y;               // equality multipliers
  std::vector<Matrix> S;  // dual slack blocks
  Vector s;               // dual slack for x
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
  std::string message;
};

struct SolverParams {
  double tol = 1e-7;
  int max_iter = 500;
  bool verbose = false;
  // Residual stagnation above stall_factor * tol for stall_iterations marks infeasibility.
  double stall_factor = 1e3;
  int stall_iterations = 50;
};

/// Infeasible-start primal-dual path-following (HKM direction, Mehrotra predictor-corrector).
/// Deterministic for identical inputs.
SdpSolution solve(const SdpProblem& problem, const SolverParams& params = {});

struct CandidatePoint {
  std::vector<Matrix> X;
  Vector x;
  Vector y;  // optional; dual quantities are checked only when y is present
};

struct ResidualReport {
  double primal_residual = 0.0;  // |b - A(X) - a x| / (1 + |b|)
  double dual_residual = 0.0;    // |C - A*(y) - S| / (1 + |C|), with S formed from y
  double duality_gap = 0.0;      // |pobj - dobj| / (1 + |pobj| + |dobj|)
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  std::vector<double> min_eigenvalue;        // per X block
  std::vector<double> dual_min_eigenvalue;   // per S block (when y given)
  double min_nonneg = 0.0;                   // min entry of x (0 if none)
  double dual_min_nonneg = 0.0;              // min entry of s (when y given)
};

/// Independent recomputation of residuals, eigenvalues and objective for a candidate.
ResidualReport check_solution(const SdpProblem& problem, const CandidatePoint& candidate);

/// Lower-triangle row-major JSON schema for problems and solutions.
nlohmann::json to_json(const SdpProblem& p);
SdpProblem problem_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SdpSolution& s);

}  // namespace densyn::sdp
