#pragma once

#include "pwlrom/integrate/config.hpp"
#include "pwlrom/integrate/trajectory.hpp"

#include <functional>
#include <vector>

namespace pwlrom::integrate {

/// Called for every computed step with (step index, t, u, v).
using StepObserver = std::function<void(std::int64_t, double, const Vector&, const Vector&)>;

/// Collects samples column by column and hands back a Trajectory.
class Recorder {
 public:
  Recorder(Index n, const IntegratorConfig& cfg) : n_(n), cfg_(cfg) {}

  void offer(std::int64_t index, double t, const Vector& u, const Vector& v) {
    if (index % cfg_.record_stride != 0 || t < cfg_.record_from) return;
    times_.push_back(t);
    u_.insert(u_.end(), u.data(), u.data() + n_);
    if (cfg_.store_velocity) v_.insert(v_.end(), v.data(), v.data() + n_);
  }

  Trajectory finish(double nominal_dt, const IntegrationStats& stats) {
    Trajectory traj;
    const auto count = static_cast<Index>(times_.size());
    traj.times = std::move(times_);
    traj.displacements = Eigen::Map<const Matrix>(u_.data(), n_, count);
    if (cfg_.store_velocity) traj.velocities = Eigen::Map<const Matrix>(v_.data(), n_, count);
    traj.dt = nominal_dt * cfg_.record_stride;
    if (!traj.is_uniform()) detect_uniform(traj);
    traj.stats = stats;
    return traj;
  }

 private:
  Index n_;
  IntegratorConfig cfg_;
  std::vector<double> times_;
  std::vector<double> u_, v_;
};

/// Number of fixed steps of size dt that cover [t0, t1].
inline std::int64_t step_count(double t0, double t1, double dt) {
  require(std::isfinite(t0) && std::isfinite(t1) && t1 >= t0, "integrator: t_span must be finite and ordered");
  return static_cast<std::int64_t>(std::ceil((t1 - t0) / dt - 1e-9));
}

}  // namespace pwlrom::integrate
