#pragma once

#include "pwlrom/fe/system.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace pwlrom::integrate {

/// Multiply-add tally of contact evaluations, used to check that the
/// reduced-space path never touches full-length vectors.
struct ContactWork {
  std::uint64_t multiply_adds = 0;
  std::uint64_t full_space_products = 0;
};

/// Piecewise-linear force expressed in the coordinates being integrated.
///
/// Two flavours exist. A direct model holds its terms in the integrated
/// coordinates (full-order systems, or reduced models whose contact DOFs are
/// themselves reduced coordinates). An expanded model keeps the terms in
/// physical coordinates and maps q -> u = Phi q before every evaluation, then
/// projects the force back with Phi^T.
class ContactModel {
 public:
  ContactModel() = default;

  static ContactModel direct(std::vector<fe::PwlTerm> terms, Index n) {
    ContactModel c;
    c.n_ = n;
    c.terms_ = std::move(terms);
    c.finish();
    return c;
  }

  static ContactModel expanded(std::vector<fe::PwlTerm> physical_terms, std::shared_ptr<const Matrix> basis) {
    ContactModel c;
    c.n_ = basis->cols();
    c.terms_ = std::move(physical_terms);
    c.basis_ = std::move(basis);
    c.finish();
    return c;
  }

  Index dimension() const { return n_; }
  Index term_count() const { return static_cast<Index>(terms_.size()); }
  bool empty() const { return terms_.empty(); }
  bool is_expanded() const { return basis_ != nullptr; }

  /// Columns are the gradients of the contact measures w.r.t. q.
  const Matrix& directions() const { return directions_; }
  const Vector& stiffness() const { return stiffness_; }
  const Vector& offsets() const { return offsets_; }

  /// Contact measures s_i(q); negative means penetration.
  void measures(const Vector& q, Vector& s, ContactWork* work = nullptr) const {
    s.resize(term_count());
    if (terms_.empty()) return;
    if (basis_) {
      const Vector u = (*basis_) * q;
      if (work) {
        work->multiply_adds += static_cast<std::uint64_t>(basis_->size());
        ++work->full_space_products;
      }
      eval_terms(u, s, work);
    } else {
      eval_terms(q, s, work);
    }
  }

  /// Force on the right-hand side, in integrated coordinates.
  Vector force(const Vector& q, ContactWork* work = nullptr) const {
    Vector f = Vector::Zero(n_);
    if (terms_.empty()) return f;
    Vector s;
    measures(q, s, work);
    if (basis_) {
      Vector f_phys = Vector::Zero(basis_->rows());
      scatter(s, f_phys, work);
      f.noalias() = basis_->transpose() * f_phys;
      if (work) {
        work->multiply_adds += static_cast<std::uint64_t>(basis_->size());
        ++work->full_space_products;
      }
    } else {
      scatter(s, f, work);
    }
    return f;
  }

 private:
  void finish() {
    const auto nt = term_count();
    stiffness_.resize(nt);
    offsets_.resize(nt);
    directions_ = Matrix::Zero(n_, nt);
    for (Index i = 0; i < nt; ++i) {
      const auto& t = terms_[static_cast<std::size_t>(i)];
      stiffness_[i] = t.stiffness;
      offsets_[i] = t.offset;
      if (basis_) {
        for (const auto& [idx, w] : t.coeffs) directions_.col(i) += w * basis_->row(idx).transpose();
      } else {
        for (const auto& [idx, w] : t.coeffs) directions_(idx, i) += w;
      }
    }
  }

  void eval_terms(const Vector& x, Vector& s, ContactWork* work) const {
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      s[static_cast<Index>(i)] = terms_[i].measure(x);
      if (work) work->multiply_adds += terms_[i].coeffs.size();
    }
  }

  void scatter(const Vector& s, Vector& f, ContactWork* work) const {
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      const double si = s[static_cast<Index>(i)];
      if (si >= 0.0) continue;
      for (const auto& [idx, w] : terms_[i].coeffs) f[idx] -= terms_[i].stiffness * si * w;
      if (work) work->multiply_adds += terms_[i].coeffs.size();
    }
  }

  Index n_ = 0;
  std::vector<fe::PwlTerm> terms_;
  std::shared_ptr<const Matrix> basis_;
  Matrix directions_;
  Vector stiffness_;
  Vector offsets_;
};

/// Everything an integrator needs: M q'' + C q' + K q = shape * law(t) + f(q).
struct Dynamics {
  Matrix M, C, K;
  Vector load_shape;
  fe::ForcingSpec load = fe::NoForcing{};
  ContactModel contact;

  Index size() const { return M.rows(); }
  double load_value(double t) const { return fe::forcing_value(load, t); }
  bool has_load() const { return load_shape.size() > 0 && !std::holds_alternative<fe::NoForcing>(load); }
};

inline Vector unit_load(Index n, std::optional<Index> dof) {
  Vector b = Vector::Zero(n);
  if (dof) b[*dof] = 1.0;
  return b;
}

inline Dynamics dynamics_of(const fe::SecondOrderSystem& sys) {
  fe::validate(sys.pwl, sys.size());
  fe::validate(sys.forcing, sys.size());
  Dynamics d;
  d.M = sys.M;
  d.C = sys.C;
  d.K = sys.K;
  d.load = sys.forcing;
  d.load_shape = unit_load(sys.size(), fe::forcing_dof(sys.forcing));
  d.contact = ContactModel::direct(fe::pwl_terms(sys.pwl), sys.size());
  return d;
}

struct State {
  Vector u;
  Vector v;

  static State zero(Index n) { return {Vector::Zero(n), Vector::Zero(n)}; }
};

}  // namespace pwlrom::integrate
