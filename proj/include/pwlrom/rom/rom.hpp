#pragma once

#include "pwlrom/integrate/dynamics.hpp"
#include "pwlrom/integrate/trajectory.hpp"
#include "pwlrom/rom/basis.hpp"

#include <memory>

namespace pwlrom::rom {

/// Where the contact force of a reduced model is evaluated.
///   full_space:    u = Phi q, f(u) in physical coordinates, projected with Phi^T.
///   reduced_space: the contact DOFs are reduced coordinates, so f is
///                  evaluated on q directly.
enum class PwlPath { full_space, reduced_space };

inline std::string_view to_string(PwlPath p) { return p == PwlPath::full_space ? "full_space" : "reduced_space"; }

/// Galerkin-projected model M~ q'' + C~ q' + K~ q = Phi^T b(t) + Phi^T f(Phi q).
struct Rom {
  Matrix Mt, Ct, Kt;
  Vector bt;  // Phi^T of the unit load at the system's forcing DOF (empty if unforced)
  std::shared_ptr<const Matrix> Phi;
  ReductionBasis basis;
  PwlPath path = PwlPath::full_space;
  std::vector<std::pair<Index, Index>> active_map;  // (physical DOF, reduced coordinate)
  std::vector<fe::PwlTerm> physical_terms;
  fe::ForcingSpec forcing = fe::NoForcing{};
  std::string model_id;

  Index size() const { return Mt.rows(); }
  Index full_size() const { return Phi->rows(); }

  Vector reduce_b(const Vector& b) const { return Phi->transpose() * b; }
  Vector expand(const Vector& q) const { return (*Phi) * q; }
  Matrix expand(const Matrix& Q) const { return (*Phi) * Q; }

  /// Physical trajectory recovered from a reduced one.
  integrate::Trajectory expand(const integrate::Trajectory& reduced) const {
    integrate::Trajectory out;
    out.times = reduced.times;
    out.dt = reduced.dt;
    out.stats = reduced.stats;
    out.displacements = expand(reduced.displacements);
    if (reduced.has_velocities()) out.velocities = expand(reduced.velocities);
    return out;
  }

  /// Reduced coordinates of a physical vector, by least squares in the basis.
  Vector reduce(const Vector& u) const { return Phi->colPivHouseholderQr().solve(u); }

  /// Undamped natural frequencies of the reduced pencil (ascending, Hz).
  Vector natural_frequencies() const { return fe::natural_frequencies(Kt, Mt); }

  /// Contact model in reduced coordinates for the chosen path.
  integrate::ContactModel contact() const {
    if (path == PwlPath::full_space) return integrate::ContactModel::expanded(physical_terms, Phi);
    std::vector<fe::PwlTerm> terms = physical_terms;
    for (auto& t : terms)
      for (auto& [idx, w] : t.coeffs) {
        const auto it = std::find_if(active_map.begin(), active_map.end(), [i = idx](const auto& e) { return e.first == i; });
        idx = it->second;
      }
    return integrate::ContactModel::direct(std::move(terms), size());
  }

  /// Reduced load shape for a unit force at `dof`.
  Vector load_shape(Index dof) const {
    require(dof >= 0 && dof < full_size(), "rom: forcing DOF out of range");
    return Phi->row(dof).transpose();
  }

  integrate::Dynamics dynamics() const { return dynamics(forcing); }

  /// Dynamics with an alternative forcing (used by sweeps).
  integrate::Dynamics dynamics(const fe::ForcingSpec& f) const {
    fe::validate(f, full_size());
    integrate::Dynamics d;
    d.M = Mt;
    d.C = Ct;
    d.K = Kt;
    d.load = f;
    if (auto dof = fe::forcing_dof(f))
      d.load_shape = load_shape(*dof);
    else
      d.load_shape = Vector::Zero(size());
    d.contact = contact();
    return d;
  }
};

/// Projects `sys` onto `basis`. Rayleigh damping is kept in Rayleigh form
/// (C~ = alpha M~ + beta K~) whenever C equals alpha M + beta K.
inline Rom galerkin_project(const fe::SecondOrderSystem& sys, const ReductionBasis& basis, PwlPath path = PwlPath::full_space) {
  require(basis.rows() == sys.size(), "galerkin_project: basis rows must equal the system dimension");
  require(basis.size() >= 1, "galerkin_project: empty basis");
  basis.validate();
  fe::validate(sys.pwl, sys.size());
  fe::validate(sys.forcing, sys.size());
  Rom r;
  r.basis = basis;
  r.Phi = std::make_shared<const Matrix>(basis.Phi);
  r.path = path;
  r.forcing = sys.forcing;
  r.model_id = sys.model_id;
  r.physical_terms = fe::pwl_terms(sys.pwl);
  for (std::size_t i = 0; i < basis.active_dofs.size(); ++i)
    r.active_map.emplace_back(basis.active_dofs[i], basis.n_m + static_cast<Index>(i));
  if (path == PwlPath::reduced_space) {
    for (Index dof : fe::pwl_dofs(sys.pwl))
      if (!basis.coordinate_of(dof))
        throw ConfigError("galerkin_project: reduced_space path needs a constraint column for contact DOF " + std::to_string(dof));
  }
  const Matrix& Phi = basis.Phi;
  r.Mt = symmetrized(Phi.transpose() * sys.M * Phi);
  r.Kt = symmetrized(Phi.transpose() * sys.K * Phi);
  const Matrix rayleigh = sys.rayleigh_alpha * sys.M + sys.rayleigh_beta * sys.K;
  const double scale = std::max(sys.C.cwiseAbs().maxCoeff(), 1e-300);
  if ((sys.C - rayleigh).cwiseAbs().maxCoeff() <= 1e-12 * scale)
    r.Ct = sys.rayleigh_alpha * r.Mt + sys.rayleigh_beta * r.Kt;
  else
    r.Ct = symmetrized(Phi.transpose() * sys.C * Phi);
  if (auto dof = fe::forcing_dof(sys.forcing))
    r.bt = r.load_shape(*dof);
  Eigen::LLT<Matrix> llt(r.Mt);
  if (llt.info() != Eigen::Success) throw NumericalError("galerkin_project: reduced mass matrix is not positive definite");
  return r;
}

inline ReductionBasis identity_basis(Index m) {
  ReductionBasis b;
  b.Phi = Matrix::Identity(m, m);
  b.provenance.assign(static_cast<std::size_t>(m), BasisTag::lnm);
  b.source_freq_hz.assign(static_cast<std::size_t>(m), detail::kNoFreq);
  b.n_m = m;
  return b;
}

/// Contact DOFs plus (optionally) the forcing DOF, in first-seen order.
inline std::vector<Index> default_active_dofs(const fe::SecondOrderSystem& sys, bool include_forcing = true) {
  std::vector<Index> dofs;
  auto add = [&dofs](Index d) {
    if (std::find(dofs.begin(), dofs.end(), d) == dofs.end()) dofs.push_back(d);
  };
  for (Index d : fe::pwl_dofs(sys.pwl)) add(d);
  if (include_forcing)
    if (auto dof = fe::forcing_dof(sys.forcing)) add(*dof);
  return dofs;
}

}  // namespace pwlrom::rom
