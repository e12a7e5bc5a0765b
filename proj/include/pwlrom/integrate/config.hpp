#pragma once

#include "pwlrom/core.hpp"

#include <cmath>

namespace pwlrom::integrate {

enum class Scheme { adaptive_rk, newmark };

struct IntegratorConfig {
  Scheme scheme = Scheme::newmark;
  double dt = 1e-4;  // Newmark step; output spacing for the adaptive scheme
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double gamma = 0.5;
  double beta = 0.25;
  int max_inner_iters = 50;
  double inner_tol = 1e-10;

  int record_stride = 1;      // keep every n-th step (Newmark) or grid point (adaptive)
  double record_from = -1e300;  // drop samples before this time
  bool store_velocity = false;
  double max_step = 0.0;        // adaptive step cap, 0 means none
  std::int64_t max_steps = 200'000'000;

  void validate() const {
    require(std::isfinite(dt) && dt > 0.0, "integrator: dt must be > 0");
    require(gamma >= 0.0 && gamma <= 1.0, "integrator: gamma must lie in [0, 1]");
    require(beta >= 0.0 && beta <= 0.5, "integrator: beta must lie in [0, 1/2]");
    require(rel_tol > 0.0 && abs_tol > 0.0 && inner_tol > 0.0, "integrator: tolerances must be > 0");
    require(max_inner_iters >= 1, "integrator: max_inner_iters must be >= 1");
    require(record_stride >= 1, "integrator: record_stride must be >= 1");
    require(max_step >= 0.0, "integrator: max_step must be >= 0");
  }
};

}  // namespace pwlrom::integrate
