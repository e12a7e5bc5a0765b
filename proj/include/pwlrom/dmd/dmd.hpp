#pragma once

#include "pwlrom/integrate/trajectory.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pwlrom::dmd {

/// What goes into a snapshot column. Displacement-only data cannot carry a
/// classically damped oscillation (each mode spans a single real direction),
/// so the default stacks displacements and weighted velocities.
enum class SnapshotContent { state, displacement };

struct SnapshotPair {
  Matrix X;
  Matrix Y;
  double dt = 0.0;
  Index dofs = 0;  // leading rows that hold displacements
  double velocity_weight = 0.0;
};

/// Weight that gives the velocity block the same Frobenius norm as the
/// displacement block.
inline double balanced_velocity_weight(const integrate::Trajectory& traj) {
  if (!traj.has_velocities()) throw ConfigError("snapshots: state content requires stored velocities");
  const double nv = traj.velocities.norm();
  return nv > 0.0 ? traj.displacements.norm() / nv : 1.0;
}

/// X = [x_1, x_{1+s}, ...], Y shifted by one stride, from a uniform trajectory.
/// A non-positive velocity_weight selects the balanced weight.
inline SnapshotPair build_snapshot_pair(const integrate::Trajectory& traj, Index stride = 1,
                                        SnapshotContent content = SnapshotContent::displacement,
                                        double velocity_weight = 0.0) {
  require(stride >= 1, "snapshot pair: stride must be >= 1");
  if (traj.samples() >= 2 && !traj.is_uniform()) throw ConfigError("snapshot pair: trajectory is not uniformly sampled");
  const Index cols = traj.samples() > 0 ? (traj.samples() - 1) / stride : 0;
  if (cols < 2) throw ConfigError("snapshot pair: fewer than two snapshot columns at stride " + std::to_string(stride));
  const Index m = traj.dimension();
  const bool state = content == SnapshotContent::state;
  SnapshotPair pair;
  pair.dt = traj.dt * static_cast<double>(stride);
  pair.dofs = m;
  if (state) pair.velocity_weight = velocity_weight > 0.0 ? velocity_weight : balanced_velocity_weight(traj);
  const Index rows = state ? 2 * m : m;
  pair.X.resize(rows, cols);
  pair.Y.resize(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    pair.X.col(j).head(m) = traj.displacements.col(j * stride);
    pair.Y.col(j).head(m) = traj.displacements.col((j + 1) * stride);
    if (state) {
      pair.X.col(j).tail(m) = pair.velocity_weight * traj.velocities.col(j * stride);
      pair.Y.col(j).tail(m) = pair.velocity_weight * traj.velocities.col((j + 1) * stride);
    }
  }
  return pair;
}

struct SvdTriplet {
  Matrix U;
  Vector sigma;
  Matrix V;
  Index rank() const { return sigma.size(); }
};

/// Thin SVD keeping singular values with sigma_i / sigma_1 >= rejection_ratio.
inline SvdTriplet truncated_svd(const Matrix& X, double rejection_ratio) {
  require(rejection_ratio >= 0.0 && rejection_ratio < 1.0, "truncated_svd: rejection ratio must lie in [0, 1)");
  if (X.size() == 0 || X.cwiseAbs().maxCoeff() == 0.0) throw NumericalError("truncated_svd: snapshot matrix is zero");
  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Index r = 0;
  while (r < s.size() && s[r] > 0.0 && s[r] / s[0] >= rejection_ratio) ++r;
  return {svd.matrixU().leftCols(r), s.head(r), svd.matrixV().leftCols(r)};
}

/// Continuous-time view of one discrete eigenvalue.
struct ContinuousEigen {
  Complex s{0.0, 0.0};
  double freq_hz = 0.0;
  double zeta = 0.0;
  bool s_defined = true;     // false when mu = 0
  bool zeta_defined = true;  // false when |s| = 0 (or s undefined)
  bool aliased = false;      // mu on the negative real axis: frequency at the Nyquist limit
};

/// s = log(mu)/dt on the principal branch, f = |s|/(2 pi), zeta = -Re(s)/|s|.
/// Frequencies are only meaningful below the Nyquist limit 1/(2 dt).
inline ContinuousEigen continuous_eigen(Complex mu, double dt) {
  require(dt > 0.0, "continuous spectrum: dt must be > 0");
  ContinuousEigen c;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (std::abs(mu) == 0.0) {
    c.s = {nan, nan};
    c.freq_hz = c.zeta = nan;
    c.s_defined = c.zeta_defined = false;
    return c;
  }
  Complex lg = std::log(mu);
  if (std::abs(lg) < 64.0 * std::numeric_limits<double>::epsilon()) lg = 0.0;  // mu = 1 up to round-off
  c.s = lg / dt;
  c.freq_hz = std::abs(c.s) / kTwoPi;
  c.aliased = mu.real() < 0.0 && std::abs(mu.imag()) <= 1e-12 * std::abs(mu);
  if (std::abs(c.s) == 0.0) {
    c.zeta = nan;
    c.zeta_defined = false;
  } else {
    c.zeta = -c.s.real() / std::abs(c.s);
  }
  return c;
}

struct ContinuousSpectrum {
  ComplexVector s;
  Vector freq_hz;
  Vector zeta;
};

inline ContinuousSpectrum continuous_spectrum(const ComplexVector& mu, double dt) {
  ContinuousSpectrum out{ComplexVector(mu.size()), Vector(mu.size()), Vector(mu.size())};
  for (Index i = 0; i < mu.size(); ++i) {
    const auto c = continuous_eigen(mu[i], dt);
    out.s[i] = c.s;
    out.freq_hz[i] = c.freq_hz;
    out.zeta[i] = c.zeta;
  }
  return out;
}

struct DmdSpectrum {
  ComplexVector mu;
  ComplexMatrix w;    // reduced eigenvectors, one per column
  ComplexMatrix phi;  // exact modes over the full snapshot rows, unit infinity norm
  Index dofs = 0;     // leading rows of phi that are displacements
  ComplexVector s;
  Vector freq_hz;
  Vector zeta;
  std::vector<ContinuousEigen> details;
  std::vector<Index> rank_order;  // indices by descending |mu|
  double dt = 0.0;
  SvdTriplet svd;

  Index size() const { return mu.size(); }
};

/// Scales a mode so that its largest-modulus entry equals 1.
inline void normalize_inf(Eigen::Ref<ComplexVector> v) {
  Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (std::abs(v[k]) > 0.0) v /= v[k];
}

/// Exact DMD of a snapshot pair.
inline DmdSpectrum dmd(const SnapshotPair& pair, double rejection_ratio) {
  require(pair.X.rows() == pair.Y.rows() && pair.X.cols() == pair.Y.cols(), "dmd: X and Y must share their shape");
  require(pair.dt > 0.0, "dmd: dt must be > 0");
  DmdSpectrum out;
  out.dt = pair.dt;
  out.dofs = pair.dofs > 0 ? pair.dofs : pair.X.rows();
  out.svd = truncated_svd(pair.X, rejection_ratio);
  const auto& svd = out.svd;
  const Matrix YVS = pair.Y * svd.V * svd.sigma.cwiseInverse().asDiagonal();
  const Matrix At = svd.U.transpose() * YVS;
  Eigen::EigenSolver<Matrix> es(At, true);
  if (es.info() != Eigen::Success) throw NumericalError("dmd: eigen-decomposition of the reduced operator failed");
  out.mu = es.eigenvalues();
  out.w = es.eigenvectors();
  out.phi = YVS.cast<Complex>() * out.w;
  for (Index i = 0; i < out.phi.cols(); ++i) normalize_inf(out.phi.col(i));
  const Index r = out.mu.size();
  out.s.resize(r);
  out.freq_hz.resize(r);
  out.zeta.resize(r);
  for (Index i = 0; i < r; ++i) {
    const auto c = continuous_eigen(out.mu[i], pair.dt);
    out.details.push_back(c);
    out.s[i] = c.s;
    out.freq_hz[i] = c.freq_hz;
    out.zeta[i] = c.zeta;
  }
  out.rank_order.resize(static_cast<std::size_t>(r));
  std::iota(out.rank_order.begin(), out.rank_order.end(), Index{0});
  std::stable_sort(out.rank_order.begin(), out.rank_order.end(),
                   [&](Index a, Index b) { return std::abs(out.mu[a]) > std::abs(out.mu[b]); });
  return out;
}

/// Displacement part of mode i, rescaled to unit infinity norm.
inline ComplexVector displacement_shape(const DmdSpectrum& spec, Index i) {
  ComplexVector v = spec.phi.col(i).head(spec.dofs);
  normalize_inf(v);
  return v;
}

/// ||Y (X^+ phi) - mu phi|| / ||phi|| with X^+ from the retained SVD triplet.
inline double eigen_residual(const SnapshotPair& pair, const DmdSpectrum& spec, Index i) {
  const auto& svd = spec.svd;
  const ComplexVector phi = spec.phi.col(i);
  const ComplexVector xp =
      svd.V.cast<Complex>() * (svd.sigma.cwiseInverse().cast<Complex>().asDiagonal() * (svd.U.transpose().cast<Complex>() * phi));
  const ComplexVector a_phi = pair.Y.cast<Complex>() * xp;
  return (a_phi - spec.mu[i] * phi).norm() / phi.norm();
}

}  // namespace pwlrom::dmd
