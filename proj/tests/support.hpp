#pragma once

// Small models and random helpers shared by the test binaries.

#include <filesystem>
#include <unistd.h>
#include <random>
#include <string>

#include "densyn/dynamics.hpp"
#include "densyn/polybasis.hpp"

namespace densyn::testing {

inline PolyVec random_poly(int n, int q, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  PolyVec p(build_basis(n, q));
  for (Eigen::Index k = 0; k < p.coeffs().size(); ++k) p.coeffs()[k] = u(rng);
  return p;
}

/// Small integer coefficients, so sums and products are exact in floating point.
inline PolyVec random_int_poly(int n, int q, std::mt19937_64& rng, int range = 5) {
  std::uniform_int_distribution<int> u(-range, range);
  PolyVec p(build_basis(n, q));
  for (Eigen::Index k = 0; k < p.coeffs().size(); ++k) p.coeffs()[k] = u(rng);
  return p;
}

inline Vector random_point(int n, std::mt19937_64& rng, double r = 1.0) {
  std::uniform_real_distribution<double> u(-r, r);
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = u(rng);
  return x;
}

/// xdot = A x + B u with constant B.
inline SystemModel linear_model(const Matrix& A, const Matrix& B, const std::string& name = "linear") {
  SystemModel m;
  m.name = name;
  m.n = static_cast<int>(A.rows());
  m.m = static_cast<int>(B.cols());
  m.drift = [A](const Vector& x) { return Vector(A * x); };
  m.input_matrix = [B](const Vector&) { return B; };
  return m;
}

/// Scalar xdot = -x + u.
inline SystemModel scalar_decay() { return linear_model(Matrix::Constant(1, 1, -1.0), Matrix::Ones(1, 1), "decay"); }

/// xdot = 0 with a zero input map.
inline SystemModel zero_model(int n, int m) { return linear_model(Matrix::Zero(n, n), Matrix::Zero(n, m), "zero"); }

inline std::filesystem::path temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("densyn_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace densyn::testing
