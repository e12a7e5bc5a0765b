#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwlrom {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration detected before any computation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (singular matrix, step-size underflow, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage could not find (or could not trust) an upstream artifact.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

/// Symmetric part of a square matrix.
inline Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// max|A - A^T| / max|A|, zero for the empty matrix.
inline double asymmetry(const Matrix& a) {
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

}  // namespace pwlrom
