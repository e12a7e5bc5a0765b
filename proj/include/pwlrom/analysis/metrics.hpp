#pragma once

#include "pwlrom/rom/rom.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

namespace pwlrom::analysis {

namespace detail {

inline Matrix orthonormal_columns(const Matrix& A, const char* which) {
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  qr.setThreshold(1e-12);
  if (qr.rank() < A.cols()) throw NumericalError(std::string("principal_angles: basis ") + which + " is rank deficient");
  return qr.householderQ() * Matrix::Identity(A.rows(), A.cols());
}

}  // namespace detail

/// Principal angles between span(A) and span(B), ascending, in [0, pi/2].
/// Small angles come from sines and large ones from cosines so that both
/// ends are resolved to machine precision.
inline Vector principal_angles(const Matrix& A, const Matrix& B) {
  require(A.rows() == B.rows(), "principal_angles: row dimensions differ");
  require(A.cols() >= 1 && B.cols() >= 1, "principal_angles: empty basis");
  const bool a_small = A.cols() <= B.cols();
  const Matrix Qs = detail::orthonormal_columns(a_small ? A : B, a_small ? "A" : "B");
  const Matrix Ql = detail::orthonormal_columns(a_small ? B : A, a_small ? "B" : "A");
  const Index k = Qs.cols();
  Vector cosines = Eigen::JacobiSVD<Matrix>(Ql.transpose() * Qs).singularValues();  // descending
  Vector sines = Eigen::JacobiSVD<Matrix>(Qs - Ql * (Ql.transpose() * Qs)).singularValues();
  std::sort(sines.data(), sines.data() + sines.size());
  Vector angles(k);
  for (Index i = 0; i < k; ++i) {
    const double c = std::min(1.0, cosines[i]), s = std::min(1.0, sines[i]);
    angles[i] = c * c < 0.5 ? std::acos(c) : std::asin(s);
  }
  std::sort(angles.data(), angles.data() + angles.size());
  return angles;
}

inline double largest_principal_angle(const Matrix& A, const Matrix& B) { return principal_angles(A, B).maxCoeff(); }

/// Relative errors (f_rom - f_full) / f_full of the lowest `count` frequencies.
inline Vector natural_frequency_error(const rom::Rom& r, const fe::SecondOrderSystem& sys, Index count) {
  require(count >= 1, "natural_frequency_error: count must be >= 1");
  if (count > r.size()) throw ConfigError("natural_frequency_error: count exceeds the ROM size");
  const Vector f_rom = r.natural_frequencies();
  const Vector f_full = fe::natural_frequencies(sys.K, sys.M);
  return ((f_rom.head(count) - f_full.head(count)).array() / f_full.head(count).array()).matrix();
}

}  // namespace pwlrom::analysis
