#pragma once

#include "pwlrom/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace pwlrom::fe {

struct ModalResult {
  Vector omega2;      // ascending eigenvalues of K x = w^2 M x
  Matrix shapes;      // M-orthonormal eigenvectors, one per column
  Vector frequency_hz() const { return omega2.cwiseMax(0.0).cwiseSqrt() / kTwoPi; }
};

/// Undamped modal analysis of the symmetric-definite pencil (K, M).
inline ModalResult modal_analysis(const Matrix& K, const Matrix& M) {
  require(K.rows() == K.cols() && M.rows() == M.cols() && K.rows() == M.rows(), "modal analysis: dimension mismatch");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(symmetrized(K), symmetrized(M));
  if (es.info() != Eigen::Success) throw NumericalError("modal analysis failed: mass matrix not positive definite");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline Vector natural_frequencies(const Matrix& K, const Matrix& M) { return modal_analysis(K, M).frequency_hz(); }

/// Alpha, beta such that alpha/(2w) + beta w/2 equals the requested ratios.
inline std::pair<double, double> rayleigh_coefficients(double omega_a, double zeta_a, double omega_b, double zeta_b) {
  require(omega_a > 0.0 && omega_b > 0.0 && omega_a != omega_b, "rayleigh_coefficients: need two distinct positive frequencies");
  Eigen::Matrix2d A;
  A << 0.5 / omega_a, 0.5 * omega_a, 0.5 / omega_b, 0.5 * omega_b;
  const Eigen::Vector2d ab = A.partialPivLu().solve(Eigen::Vector2d(zeta_a, zeta_b));
  return {ab[0], ab[1]};
}

/// Modal damping ratio of a Rayleigh-damped mode.
inline double rayleigh_zeta(double alpha, double beta, double omega) { return alpha / (2.0 * omega) + 0.5 * beta * omega; }

}  // namespace pwlrom::fe
