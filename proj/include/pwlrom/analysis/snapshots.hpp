#pragma once

#include "pwlrom/integrate/adaptive.hpp"
#include "pwlrom/integrate/newmark.hpp"

#include <Eigen/Cholesky>

namespace pwlrom::analysis {

/// How a snapshot trajectory is produced. Samples are taken every
/// `sample_dt` over (record_from, duration]; velocities are kept so that the
/// DMD stage can use state snapshots.
struct SnapshotOptions {
  double duration = 0.11;
  double sample_dt = 1.0 / 12000.0;
  double record_from = 0.01;
  integrate::Scheme scheme = integrate::Scheme::adaptive_rk;
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  int newmark_substeps = 8;  // Newmark steps per sample when scheme = newmark

  void validate() const {
    require(duration > 0.0 && std::isfinite(duration), "snapshots: duration must be > 0");
    require(sample_dt > 0.0 && sample_dt < duration, "snapshots: sample_dt must lie in (0, duration)");
    require(record_from >= 0.0 && record_from < duration, "snapshots: record_from must lie in [0, duration)");
    require(rel_tol > 0.0 && abs_tol > 0.0, "snapshots: tolerances must be > 0");
    require(newmark_substeps >= 1, "snapshots: newmark_substeps must be >= 1");
  }
};

inline integrate::Trajectory integrate_snapshots(const integrate::Dynamics& dyn, const integrate::State& x0,
                                                 const SnapshotOptions& opt) {
  opt.validate();
  integrate::IntegratorConfig cfg;
  cfg.scheme = opt.scheme;
  cfg.rel_tol = opt.rel_tol;
  cfg.abs_tol = opt.abs_tol;
  cfg.store_velocity = true;
  cfg.record_from = opt.record_from - 1e-9 * opt.sample_dt;
  if (opt.scheme == integrate::Scheme::adaptive_rk) {
    cfg.dt = opt.sample_dt;
    return integrate::integrate_adaptive(dyn, x0, 0.0, opt.duration, cfg);
  }
  cfg.dt = opt.sample_dt / opt.newmark_substeps;
  cfg.record_stride = opt.newmark_substeps;
  auto traj = integrate::integrate_newmark(dyn, x0, 0.0, opt.duration, cfg);
  traj.dt = opt.sample_dt;
  if (!traj.is_uniform()) integrate::detect_uniform(traj);
  return traj;
}

/// Response to a half-sine impulse from rest.
inline integrate::Trajectory generate_snapshots_impulse(const fe::SecondOrderSystem& sys, const fe::HalfSineImpulse& impulse,
                                                        const SnapshotOptions& opt) {
  const auto dyn = integrate::dynamics_of(fe::with_forcing(sys, impulse));
  return integrate_snapshots(dyn, integrate::State::zero(sys.size()), opt);
}

/// Static deflection u0 = K^-1 load.
inline Vector static_deflection(const Matrix& K, const Vector& load) {
  require(load.size() == K.rows(), "static deflection: load length must equal m");
  Eigen::LDLT<Matrix> ldlt(K);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-14)
    throw NumericalError("static deflection: stiffness matrix is singular");
  return ldlt.solve(load);
}

/// Free decay from the static deflection under `load`.
inline integrate::Trajectory generate_snapshots_initial_deformation(const fe::SecondOrderSystem& sys, const Vector& load,
                                                                     const SnapshotOptions& opt) {
  const auto dyn = integrate::dynamics_of(fe::with_forcing(sys, fe::NoForcing{}));
  integrate::State x0 = integrate::State::zero(sys.size());
  x0.u = static_deflection(sys.K, load);
  return integrate_snapshots(dyn, x0, opt);
}

/// Equal and opposite forces that pull each gap pair apart.
inline Vector opening_load(Index m, const std::vector<fe::GapPair>& pairs, double force) {
  Vector f = Vector::Zero(m);
  for (const auto& p : pairs) {
    f[p.dof_upper] += force;
    f[p.dof_lower] -= force;
  }
  return f;
}

}  // namespace pwlrom::analysis
