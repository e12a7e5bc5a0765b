#pragma once

#include "pwlrom/core.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pwlrom::fe {

enum class DofKind { translation, rotation };

struct DofLabel {
  int beam = 0;  // 0 for single-beam models, 0/1 = upper/lower in assemblies
  int node = 0;
  DofKind kind = DofKind::translation;
  bool shared = false;  // true when a tie merged this DOF across beams
};

struct NoPwl {};

/// Unilateral spring below the DOF: contact once w < -clearance.
struct ElasticStop {
  Index dof = 0;
  double k_c = 0.0;
  double clearance = 0.0;
};

/// Pair of transverse DOFs on opposite faces of a debonded interface.
struct GapPair {
  Index dof_upper = 0;
  Index dof_lower = 0;
  double k_p = 0.0;
};

struct GapContacts {
  std::vector<GapPair> pairs;
};

using PwlForceSpec = std::variant<NoPwl, ElasticStop, GapContacts>;

struct NoForcing {};

/// b0 sin(2 pi t / T) on [0, T/2], zero afterwards.
struct HalfSineImpulse {
  Index dof = 0;
  double b0 = 0.0;
  double period = 1e-4;
};

/// amplitude * sin(2 pi frequency_hz t).
struct Harmonic {
  Index dof = 0;
  double amplitude = 0.0;
  double frequency_hz = 0.0;
};

using ForcingSpec = std::variant<NoForcing, HalfSineImpulse, Harmonic>;

/// One scalar contact measure s = sum_j w_j q_j + offset. The term is active
/// while s < 0 and then contributes -stiffness * s * (sum_j w_j e_j) to the
/// right-hand side, i.e. it pushes s back towards zero.
struct PwlTerm {
  std::vector<std::pair<Index, double>> coeffs;
  double offset = 0.0;
  double stiffness = 0.0;

  double measure(const Vector& q) const {
    double s = offset;
    for (const auto& [idx, w] : coeffs) s += w * q[idx];
    return s;
  }
};

inline std::vector<PwlTerm> pwl_terms(const PwlForceSpec& spec) {
  std::vector<PwlTerm> terms;
  if (const auto* stop = std::get_if<ElasticStop>(&spec)) {
    if (stop->k_c > 0.0) terms.push_back({{{stop->dof, 1.0}}, stop->clearance, stop->k_c});
  } else if (const auto* gaps = std::get_if<GapContacts>(&spec)) {
    for (const auto& p : gaps->pairs) terms.push_back({{{p.dof_upper, 1.0}, {p.dof_lower, -1.0}}, 0.0, p.k_p});
  }
  return terms;
}

/// Physical DOFs touched by the piecewise-linear force.
inline std::vector<Index> pwl_dofs(const PwlForceSpec& spec) {
  std::vector<Index> dofs;
  for (const auto& t : pwl_terms(spec))
    for (const auto& [idx, w] : t.coeffs) dofs.push_back(idx);
  return dofs;
}

inline bool has_pwl(const PwlForceSpec& spec) { return !pwl_terms(spec).empty(); }

inline void validate(const PwlForceSpec& spec, Index m) {
  if (const auto* stop = std::get_if<ElasticStop>(&spec)) {
    require(stop->dof >= 0 && stop->dof < m, "elastic stop DOF out of range");
    require(stop->k_c >= 0.0, "elastic stop stiffness must be >= 0");
  } else if (const auto* gaps = std::get_if<GapContacts>(&spec)) {
    for (const auto& p : gaps->pairs) {
      require(p.dof_upper >= 0 && p.dof_upper < m && p.dof_lower >= 0 && p.dof_lower < m,
              "gap pair DOF out of range");
      require(p.dof_upper != p.dof_lower, "gap pair must reference two distinct DOFs");
      require(p.k_p > 0.0, "penalty stiffness must be > 0");
    }
  }
}

/// Contact force, placed on the right-hand side of M u'' + C u' + K u = b + f(u).
inline Vector eval_pwl_force(const PwlForceSpec& spec, const Vector& u) {
  Vector f = Vector::Zero(u.size());
  for (const auto& t : pwl_terms(spec)) {
    const double s = t.measure(u);
    if (s < 0.0)
      for (const auto& [idx, w] : t.coeffs) f[idx] -= t.stiffness * s * w;
  }
  return f;
}

inline std::optional<Index> forcing_dof(const ForcingSpec& f) {
  if (const auto* h = std::get_if<HalfSineImpulse>(&f)) return h->dof;
  if (const auto* h = std::get_if<Harmonic>(&f)) return h->dof;
  return std::nullopt;
}

/// Scalar time law of the forcing (the spatial part is a unit load at the DOF).
inline double forcing_value(const ForcingSpec& f, double t) {
  if (const auto* h = std::get_if<HalfSineImpulse>(&f)) {
    if (t < 0.0 || t > 0.5 * h->period) return 0.0;
    return h->b0 * std::sin(kTwoPi * t / h->period);
  }
  if (const auto* h = std::get_if<Harmonic>(&f)) return h->amplitude * std::sin(kTwoPi * h->frequency_hz * t);
  return 0.0;
}

inline void validate(const ForcingSpec& f, Index m) {
  if (const auto* h = std::get_if<HalfSineImpulse>(&f)) {
    require(h->period > 0.0, "impulse period must be > 0");
    require(std::isfinite(h->b0), "impulse amplitude must be finite");
  } else if (const auto* h = std::get_if<Harmonic>(&f)) {
    require(std::isfinite(h->amplitude), "harmonic amplitude must be finite");
    require(h->frequency_hz >= 0.0, "harmonic frequency must be >= 0");
  }
  if (auto dof = forcing_dof(f)) require(*dof >= 0 && *dof < m, "forcing DOF out of range");
}

/// M u'' + C u' + K u = b(t) + f(u). Immutable once assembled.
struct SecondOrderSystem {
  Matrix M, C, K;
  PwlForceSpec pwl;
  ForcingSpec forcing;
  std::vector<DofLabel> dof_labels;
  std::string model_id;
  double rayleigh_alpha = 0.0;
  double rayleigh_beta = 0.0;

  Index size() const { return M.rows(); }
};

/// Same system with the contact nonlinearity removed.
inline SecondOrderSystem linearized(SecondOrderSystem sys) {
  sys.pwl = NoPwl{};
  sys.model_id += "/linear";
  return sys;
}

inline SecondOrderSystem with_forcing(SecondOrderSystem sys, ForcingSpec forcing) {
  validate(forcing, sys.size());
  sys.forcing = std::move(forcing);
  return sys;
}

}  // namespace pwlrom::fe
