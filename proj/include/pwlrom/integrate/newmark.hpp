#pragma once

#include "pwlrom/integrate/dynamics.hpp"
#include "pwlrom/integrate/recorder.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace pwlrom::integrate {

/// Implicit Newmark stepping in displacement form.
///
/// The contact force is resolved per step by iterating on the active set:
/// the step equation is solved with the currently active springs folded into
/// the operator (a low-rank update of the prefactored Keff), the active set
/// is re-evaluated at the new displacement, and the loop stops once the set
/// is stable or the force mismatch falls below inner_tol. When the cap is hit
/// the previous-step force is used instead and the step is counted as a
/// fallback in the trajectory stats.
class NewmarkStepper {
 public:
  NewmarkStepper(const Dynamics& dyn, const IntegratorConfig& cfg) : dyn_(dyn), cfg_(cfg) {
    cfg.validate();
    require(cfg.beta > 0.0, "newmark: beta must be > 0 for the implicit scheme");
    const Index n = dyn.size();
    require(n > 0 && dyn.K.rows() == n && dyn.C.rows() == n, "newmark: inconsistent system matrices");
    const double dt = cfg.dt, b = cfg.beta, g = cfg.gamma;
    a0_ = 1.0 / (b * dt * dt);
    a1_ = g / (b * dt);
    a2_ = 1.0 / (b * dt);
    a3_ = 1.0 / (2.0 * b) - 1.0;
    a4_ = g / b - 1.0;
    a5_ = dt * (g / (2.0 * b) - 1.0);
    const Matrix keff = symmetrized(dyn.K + a0_ * dyn.M + a1_ * dyn.C);
    llt_.compute(keff);
    if (llt_.info() != Eigen::Success) {
      lu_.compute(keff);
      use_lu_ = true;
    }
    mass_lu_.compute(dyn.M);
    if (!dyn.contact.empty()) {
      Z_ = solve(dyn.contact.directions());
      S_ = dyn.contact.directions().transpose() * Z_;
    }
  }

  /// Acceleration consistent with the equation of motion at (t, u, v).
  Vector initial_acceleration(double t, const Vector& u, const Vector& v) const {
    Vector rhs = -dyn_.K * u - dyn_.C * v + dyn_.contact.force(u);
    if (dyn_.has_load()) rhs += dyn_.load_shape * dyn_.load_value(t);
    return mass_lu_.solve(rhs);
  }

  /// Advances (u, v, a) from t to t + dt in place.
  void step(double t, Vector& u, Vector& v, Vector& a, IntegrationStats& stats, ContactWork* work = nullptr) {
    const double t1 = t + cfg_.dt;
    Vector r = dyn_.M * (a0_ * u + a2_ * v + a3_ * a) + dyn_.C * (a1_ * u + a4_ * v + a5_ * a);
    if (dyn_.has_load()) r += dyn_.load_shape * dyn_.load_value(t1);
    Vector u1 = solve(r);
    if (!dyn_.contact.empty()) resolve_contact(r, u, u1, stats, work);
    const Vector a1 = a0_ * (u1 - u) - a2_ * v - a3_ * a;
    v += cfg_.dt * ((1.0 - cfg_.gamma) * a + cfg_.gamma * a1);
    a = a1;
    u = std::move(u1);
    ++stats.steps;
  }

 private:
  template <class Rhs>
  Matrix solve(const Rhs& r) const {
    return use_lu_ ? Matrix(lu_.solve(r)) : Matrix(llt_.solve(r));
  }

  // y is Keff^{-1} r on entry and the contact-consistent displacement on exit.
  void resolve_contact(const Vector& r, const Vector& u_prev, Vector& y, IntegrationStats& stats, ContactWork* work) {
    const auto& model = dyn_.contact;
    const Index nt = model.term_count();
    const Vector& k = model.stiffness();
    const Vector& c = model.offsets();
    const Matrix& G = model.directions();
    const double scale = std::max(r.lpNorm<Eigen::Infinity>(), 1e-300);
    const Vector y0 = y;
    if (active_.size() != static_cast<std::size_t>(nt)) active_.assign(static_cast<std::size_t>(nt), false);

    Vector s;
    bool converged = false;
    int it = 0;
    for (; it < cfg_.max_inner_iters; ++it) {
      y = solve_with_active(y0, k, c, G);
      model.measures(y, s, work);
      bool changed = false;
      double mismatch = 0.0;
      for (Index i = 0; i < nt; ++i) {
        const bool now = s[i] < 0.0;
        if (now != active_[static_cast<std::size_t>(i)]) {
          changed = true;
          mismatch = std::max(mismatch, std::abs(k[i] * s[i]) * G.col(i).lpNorm<Eigen::Infinity>());
        }
      }
      if (!changed || mismatch / scale < cfg_.inner_tol) {
        converged = true;
        ++it;
        break;
      }
      for (Index i = 0; i < nt; ++i) active_[static_cast<std::size_t>(i)] = s[i] < 0.0;
    }
    stats.inner_iterations += it;
    stats.max_inner_iterations = std::max(stats.max_inner_iterations, it);
    if (!converged) {
      ++stats.inner_fallbacks;
      y = y0 + Matrix(solve(model.force(u_prev, work)));
      model.measures(y, s, work);
      for (Index i = 0; i < nt; ++i) active_[static_cast<std::size_t>(i)] = s[i] < 0.0;
    }
  }

  Vector solve_with_active(const Vector& y0, const Vector& k, const Vector& c, const Matrix& G) const {
    std::vector<Index> idx;
    for (std::size_t i = 0; i < active_.size(); ++i)
      if (active_[i]) idx.push_back(static_cast<Index>(i));
    if (idx.empty()) return y0;
    const auto na = static_cast<Index>(idx.size());
    Vector y = y0;
    for (Index j = 0; j < na; ++j) y -= Z_.col(idx[j]) * (k[idx[j]] * c[idx[j]]);
    Matrix small(na, na);
    Vector rhs(na);
    for (Index a = 0; a < na; ++a) {
      rhs[a] = G.col(idx[a]).dot(y);
      for (Index b = 0; b < na; ++b) small(a, b) = S_(idx[a], idx[b]);
      small(a, a) += 1.0 / k[idx[a]];
    }
    const Vector lambda = small.partialPivLu().solve(rhs);
    for (Index j = 0; j < na; ++j) y -= Z_.col(idx[j]) * lambda[j];
    return y;
  }

  const Dynamics& dyn_;
  IntegratorConfig cfg_;
  double a0_, a1_, a2_, a3_, a4_, a5_;
  Eigen::LLT<Matrix> llt_;
  Eigen::PartialPivLU<Matrix> lu_;
  bool use_lu_ = false;
  Eigen::PartialPivLU<Matrix> mass_lu_;
  Matrix Z_, S_;
  std::vector<bool> active_;
};

/// Fixed-step Newmark integration over [t0, t1]. The last step lands on
/// t0 + N dt with N = ceil((t1 - t0) / dt).
inline Trajectory integrate_newmark(const Dynamics& dyn, const State& x0, double t0, double t1, const IntegratorConfig& cfg,
                                    const StepObserver& observer = nullptr, ContactWork* work = nullptr) {
  const Index n = dyn.size();
  require(x0.u.size() == n && x0.v.size() == n, "newmark: initial state has the wrong dimension");
  NewmarkStepper stepper(dyn, cfg);
  const auto steps = step_count(t0, t1, cfg.dt);
  Vector u = x0.u, v = x0.v;
  Vector a = stepper.initial_acceleration(t0, u, v);
  IntegrationStats stats;
  Recorder rec(n, cfg);
  rec.offer(0, t0, u, v);
  if (observer) observer(0, t0, u, v);
  for (std::int64_t j = 1; j <= steps; ++j) {
    const double t = t0 + static_cast<double>(j - 1) * cfg.dt;
    stepper.step(t, u, v, a, stats, work);
    const double tj = t0 + static_cast<double>(j) * cfg.dt;
    if (!u.allFinite()) throw NumericalError("newmark: non-finite state at t = " + std::to_string(tj));
    rec.offer(j, tj, u, v);
    if (observer) observer(j, tj, u, v);
  }
  return rec.finish(cfg.dt, stats);
}

}  // namespace pwlrom::integrate
