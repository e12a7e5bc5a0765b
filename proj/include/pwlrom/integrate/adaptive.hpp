#pragma once

#include "pwlrom/integrate/dynamics.hpp"
#include "pwlrom/integrate/recorder.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>

namespace pwlrom::integrate {

namespace detail {

/// Dormand-Prince 5(4) tableau with the Hairer dense-output weights.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

/// First-order form x = [u; v], x' = [v; M^{-1}(b(t) + f(u) - C v - K u)].
class FirstOrderRhs {
 public:
  explicit FirstOrderRhs(const Dynamics& dyn) : dyn_(dyn), n_(dyn.size()) {
    Eigen::PartialPivLU<Matrix> lu(dyn.M);
    if (!(lu.rcond() > 1e-14))
      throw NumericalError("adaptive integrator: mass matrix is singular");
    Matrix KC(n_, 2 * n_);
    KC << dyn.K, dyn.C;
    minv_kc_ = lu.solve(KC);
    if (dyn.has_load()) minv_load_ = lu.solve(dyn.load_shape);
    if (!dyn.contact.empty()) minv_g_ = lu.solve(dyn.contact.directions());
  }

  void operator()(double t, const Vector& x, Vector& dx, ContactWork* work) const {
    dx.resize(2 * n_);
    dx.head(n_) = x.tail(n_);
    dx.tail(n_).noalias() = -minv_kc_ * x;
    if (minv_load_.size() > 0) dx.tail(n_) += minv_load_ * dyn_.load_value(t);
    if (minv_g_.size() > 0) {
      dyn_.contact.measures(x.head(n_), s_, work);
      const Vector& k = dyn_.contact.stiffness();
      for (Index i = 0; i < s_.size(); ++i)
        if (s_[i] < 0.0) dx.tail(n_) -= minv_g_.col(i) * (k[i] * s_[i]);
    }
  }

 private:
  const Dynamics& dyn_;
  Index n_;
  Matrix minv_kc_;
  Vector minv_load_;
  Matrix minv_g_;
  mutable Vector s_;
};

/// Times at which the load law has a kink or jump; steps land on them.
inline std::vector<double> load_breakpoints(const Dynamics& dyn) {
  std::vector<double> out;
  if (!dyn.has_load()) return out;
  if (const auto* h = std::get_if<fe::HalfSineImpulse>(&dyn.load)) out = {0.0, 0.5 * h->period};
  return out;
}

}  // namespace detail

/// Explicit Dormand-Prince 5(4) with step-size control and dense output
/// sampled on the grid t0 + j dt. Throws NumericalError when the step size
/// underflows.
inline Trajectory integrate_adaptive(const Dynamics& dyn, const State& x0, double t0, double t1,
                                     const IntegratorConfig& cfg, ContactWork* work = nullptr) {
  cfg.validate();
  const Index n = dyn.size();
  require(x0.u.size() == n && x0.v.size() == n, "adaptive integrator: initial state has the wrong dimension");
  require(std::isfinite(t0) && std::isfinite(t1) && t1 >= t0, "adaptive integrator: t_span must be finite and ordered");
  using T = detail::Dopri5;
  const detail::FirstOrderRhs f(dyn);
  const Index N = 2 * n;

  Vector x(N);
  x << x0.u, x0.v;
  const auto grid_count = static_cast<std::int64_t>(std::floor((t1 - t0) / cfg.dt + 1e-9));
  Recorder rec(n, cfg);
  std::int64_t next_grid = 0;
  auto emit = [&](std::int64_t j, const Vector& state) {
    rec.offer(j, t0 + static_cast<double>(j) * cfg.dt, state.head(n), state.tail(n));
  };

  IntegrationStats stats;
  if (t1 == t0 || (x.isZero(0.0) && !dyn.has_load())) {
    for (; next_grid <= grid_count; ++next_grid) emit(next_grid, x);
    return rec.finish(cfg.dt, stats);
  }

  auto error_scale = [&](const Vector& a, const Vector& b) {
    return (cfg.abs_tol + cfg.rel_tol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix();
  };
  auto rms = [N](const Vector& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(N)); };

  std::vector<double> stops;
  for (double b : detail::load_breakpoints(dyn))
    if (b > t0 && b < t1) stops.push_back(b);
  stops.push_back(t1);

  Vector k1(N), k2(N), k3(N), k4(N), k5(N), k6(N), k7(N), xs(N), x_new(N), err(N);
  Vector r1(N), r2(N), r3(N), r4(N), r5(N);
  double t = t0;
  f(t, x, k1, work);

  // Initial step following Hairer's heuristic.
  double h;
  {
    const Vector sc = error_scale(x, x);
    const double d0 = rms(x.cwiseQuotient(sc)), d1 = rms(k1.cwiseQuotient(sc));
    double h0 = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 * (t1 - t0) : 0.01 * d0 / d1;
    h0 = std::min(h0, t1 - t0);
    xs = x + h0 * k1;
    f(t + h0, xs, k2, work);
    const double d2 = rms((k2 - k1).cwiseQuotient(sc)) / h0;
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / std::max(d1, d2), 0.2);
    h = std::min(100.0 * h0, h1);
  }
  if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);

  emit(next_grid++, x);
  bool last_rejected = false;
  std::size_t stop_idx = 0;
  while (t < t1) {
    if (stats.steps + stats.rejected_steps > cfg.max_steps)
      throw NumericalError("adaptive integrator: step budget exhausted at t = " + std::to_string(t));
    const double target = stops[stop_idx];
    bool hits_stop = false;
    if (t + h >= target - 1e-12 * std::abs(target)) {
      h = target - t;
      hits_stop = true;
    }
    if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1e-300))
      throw NumericalError("adaptive integrator: step size underflow at t = " + std::to_string(t));

    xs = x + h * T::a21 * k1;
    f(t + T::c2 * h, xs, k2, work);
    xs = x + h * (T::a31 * k1 + T::a32 * k2);
    f(t + T::c3 * h, xs, k3, work);
    xs = x + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3);
    f(t + T::c4 * h, xs, k4, work);
    xs = x + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4);
    f(t + T::c5 * h, xs, k5, work);
    xs = x + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5);
    f(t + h, xs, k6, work);
    x_new = x + h * (T::a71 * k1 + T::a73 * k3 + T::a74 * k4 + T::a75 * k5 + T::a76 * k6);
    f(t + h, x_new, k7, work);
    err = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
    const double en = rms(err.cwiseQuotient(error_scale(x, x_new)));
    if (!std::isfinite(en)) {
      h *= 0.1;
      last_rejected = true;
      ++stats.rejected_steps;
      continue;
    }

    double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 10.0;
    if (en <= 1.0) {
      r1 = x;
      r2 = x_new - x;
      r3 = h * k1 - r2;
      r4 = r2 - h * k7 - r3;
      r5 = h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 + T::d6 * k6 + T::d7 * k7);
      const double t_new = hits_stop ? target : t + h;
      while (next_grid <= grid_count) {
        const double tg = t0 + static_cast<double>(next_grid) * cfg.dt;
        if (tg > t_new + 1e-12 * std::abs(t_new)) break;
        const double th = std::clamp((tg - t) / h, 0.0, 1.0);
        const double th1 = 1.0 - th;
        emit(next_grid++, r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5))));
      }
      t = t_new;
      x = x_new;
      k1 = k7;
      ++stats.steps;
      if (hits_stop) {
        ++stop_idx;
        if (stop_idx < stops.size()) f(t, x, k1, work);  // the load law may jump here
      }
      fac = std::min(fac, last_rejected ? 1.0 : 10.0);
      last_rejected = false;
    } else {
      fac = std::max(fac, 0.2);
      last_rejected = true;
      ++stats.rejected_steps;
    }
    h *= std::clamp(fac, 0.2, 10.0);
    if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);
  }
  return rec.finish(cfg.dt, stats);
}

}  // namespace pwlrom::integrate
