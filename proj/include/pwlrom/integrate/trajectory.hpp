#pragma once

#include "pwlrom/core.hpp"

#include <cmath>
#include <vector>

namespace pwlrom::integrate {

struct IntegrationStats {
  std::int64_t steps = 0;
  std::int64_t rejected_steps = 0;
  std::int64_t inner_iterations = 0;
  int max_inner_iterations = 0;
  std::int64_t inner_fallbacks = 0;  // steps that hit the inner-iteration cap
  bool inner_fallback() const { return inner_fallbacks > 0; }
};

/// Sampled state history. Column j of `displacements` is the state at
/// `times[j]`; `dt` is non-zero only when the samples are uniform.
struct Trajectory {
  std::vector<double> times;
  Matrix displacements;
  Matrix velocities;  // empty unless requested
  double dt = 0.0;
  IntegrationStats stats;

  Index dimension() const { return displacements.rows(); }
  Index samples() const { return displacements.cols(); }
  bool has_velocities() const { return velocities.cols() == displacements.cols() && velocities.size() > 0; }

  /// True when times are uniform to 1e-12 relative of the spacing.
  bool is_uniform() const {
    if (times.size() < 2 || dt <= 0.0) return false;
    for (std::size_t j = 0; j < times.size(); ++j) {
      const double expected = times.front() + static_cast<double>(j) * dt;
      if (std::abs(times[j] - expected) > 1e-9 * dt + 1e-12 * std::abs(expected)) return false;
    }
    return true;
  }

  /// Copy restricted to samples with time >= t_start.
  Trajectory from_time(double t_start) const {
    Index first = 0;
    while (first < samples() && times[static_cast<std::size_t>(first)] < t_start - 1e-12 * std::abs(t_start)) ++first;
    Trajectory out;
    out.times.assign(times.begin() + first, times.end());
    out.displacements = displacements.rightCols(samples() - first);
    if (has_velocities()) out.velocities = velocities.rightCols(samples() - first);
    out.dt = dt;
    out.stats = stats;
    return out;
  }
};

/// Detects uniform spacing and records it in `dt`.
inline void detect_uniform(Trajectory& traj) {
  traj.dt = 0.0;
  if (traj.times.size() < 2) return;
  const double dt = (traj.times.back() - traj.times.front()) / static_cast<double>(traj.times.size() - 1);
  traj.dt = dt;
  if (!traj.is_uniform()) traj.dt = 0.0;
}

/// Resamples a uniform trajectory onto a new uniform grid of spacing
/// `new_dt`. Uses cubic Hermite interpolation when velocities are stored and
/// Catmull-Rom otherwise. The result never extrapolates.
inline Trajectory resample(const Trajectory& traj, double new_dt) {
  if (!traj.is_uniform()) throw ConfigError("resample: trajectory is not uniformly sampled");
  require(new_dt > 0.0, "resample: new_dt must be positive");
  const double t0 = traj.times.front();
  const double span = traj.times.back() - t0;
  const auto count = static_cast<Index>(std::floor(span / new_dt + 1e-9)) + 1;
  const Index n = traj.dimension();
  const Index last = traj.samples() - 1;
  Trajectory out;
  out.dt = new_dt;
  out.displacements.resize(n, count);
  const bool hermite = traj.has_velocities();
  if (hermite) out.velocities.resize(n, count);
  const auto& X = traj.displacements;
  for (Index j = 0; j < count; ++j) {
    const double t = t0 + static_cast<double>(j) * new_dt;
    out.times.push_back(t);
    const double pos = (t - t0) / traj.dt;
    auto i = static_cast<Index>(std::floor(pos + 1e-9));
    if (i >= last) i = last - 1;
    if (i < 0) i = 0;
    double s = pos - static_cast<double>(i);
    if (std::abs(s) < 1e-9) s = 0.0;
    if (std::abs(s - 1.0) < 1e-9) s = 1.0;
    if (s == 0.0) {
      out.displacements.col(j) = X.col(i);
      if (hermite) out.velocities.col(j) = traj.velocities.col(i);
      continue;
    }
    if (s == 1.0) {
      out.displacements.col(j) = X.col(i + 1);
      if (hermite) out.velocities.col(j) = traj.velocities.col(i + 1);
      continue;
    }
    if (hermite) {
      const double h = traj.dt;
      const double s2 = s * s, s3 = s2 * s;
      const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
      const auto& V = traj.velocities;
      out.displacements.col(j) = h00 * X.col(i) + h10 * h * V.col(i) + h01 * X.col(i + 1) + h11 * h * V.col(i + 1);
      const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1, d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
      out.velocities.col(j) = (d00 * X.col(i) + d01 * X.col(i + 1)) / h + d10 * V.col(i) + d11 * V.col(i + 1);
    } else {
      const Index im = std::max<Index>(i - 1, 0);
      const Index ip = std::min<Index>(i + 2, last);
      const Vector m0 = (X.col(i + 1) - X.col(im)) / static_cast<double>(i + 1 - im);
      const Vector m1 = (X.col(ip) - X.col(i)) / static_cast<double>(ip - i);
      const double s2 = s * s, s3 = s2 * s;
      out.displacements.col(j) = (2 * s3 - 3 * s2 + 1) * X.col(i) + (s3 - 2 * s2 + s) * m0 +
                                 (-2 * s3 + 3 * s2) * X.col(i + 1) + (s3 - s2) * m1;
    }
  }
  return out;
}

}  // namespace pwlrom::integrate
