#pragma once

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

#include "etpf/types.hpp"

namespace etpf::linalg {

inline constexpr double kEigTolerance = 1e-12;

/// Smallest eigenvalue of the symmetric part of `m`.
inline double lambda_min(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

inline double lambda_max(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

/// Induced 2-norm, from the largest eigenvalue of the Gram matrix.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.rows() <= m.cols() ? Matrix(m * m.transpose())
                                           : Matrix(m.transpose() * m);
  return std::sqrt(std::max(0.0, lambda_max(gram)));
}

inline double max_real_eigenvalue(const Matrix& m) {
  Eigen::EigenSolver<Matrix> solver(m, false);
  return solver.eigenvalues().real().maxCoeff();
}

inline bool is_hurwitz(const Matrix& m) { return max_real_eigenvalue(m) < 0.0; }

inline bool is_symmetric(const Matrix& m, double tol = kEigTolerance) {
  return m.rows() == m.cols() &&
         (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + m.cwiseAbs().maxCoeff());
}

inline bool is_positive_definite(const Matrix& m) {
  return is_symmetric(m) && lambda_min(m) > kEigTolerance;
}

/// e^{A t}; scaling and squaring with a Pade approximant.
inline Matrix expm(const Matrix& a, double t) {
  const Matrix scaled = a * t;
  return scaled.exp();
}

/// Returns (e^{A t}, \int_0^t e^{A s} ds B) from one exponential of the
/// block matrix [[A, B], [0, 0]].
inline std::pair<Matrix, Matrix> expm_with_input_integral(const Matrix& a, const Matrix& b,
                                                          double t) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  Matrix block = Matrix::Zero(n + m, n + m);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, m) = b;
  const Matrix e = expm(block, t);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

}  // namespace etpf::linalg
