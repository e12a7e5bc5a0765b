#pragma once

#include "pwlrom/rom/rom.hpp"

namespace pwlrom::analysis {

/// A full or reduced model prepared for forced-response runs: the dynamics
/// with a unit load shape at the excitation DOF, and linear readouts that map
/// the integrated coordinates to physical quantities (a DOF displacement or
/// a gap).
struct ForcedModel {
  std::string id;
  std::string basis_id = "full";
  Index p = 0;
  integrate::Dynamics dyn;
  std::vector<RowVector> readouts;  // readouts[0] is the amplitude response

  double read(std::size_t i, const Vector& q) const { return readouts[i].dot(q); }
};

/// Physical readout selecting one DOF.
inline RowVector dof_readout(Index m, Index dof) {
  require(dof >= 0 && dof < m, "readout DOF out of range");
  RowVector r = RowVector::Zero(m);
  r[dof] = 1.0;
  return r;
}

/// Physical readout of the gap g = u[upper] - u[lower].
inline RowVector gap_readout(Index m, const fe::GapPair& pair) {
  RowVector r = dof_readout(m, pair.dof_upper);
  r[pair.dof_lower] -= 1.0;
  return r;
}

inline ForcedModel forced_model(const fe::SecondOrderSystem& sys, Index forcing_dof, std::vector<RowVector> readouts) {
  require(!readouts.empty(), "forced model: need at least one readout");
  ForcedModel fm;
  fm.id = sys.model_id;
  fm.p = sys.size();
  fm.dyn = integrate::dynamics_of(fe::with_forcing(sys, fe::Harmonic{forcing_dof, 0.0, 0.0}));
  for (const auto& r : readouts) require(r.size() == sys.size(), "forced model: readout length must equal m");
  fm.readouts = std::move(readouts);
  return fm;
}

inline ForcedModel forced_model(const rom::Rom& r, Index forcing_dof, const std::vector<RowVector>& physical_readouts,
                                std::string basis_id) {
  require(!physical_readouts.empty(), "forced model: need at least one readout");
  ForcedModel fm;
  fm.id = r.model_id;
  fm.basis_id = std::move(basis_id);
  fm.p = r.size();
  fm.dyn = r.dynamics(fe::Harmonic{forcing_dof, 0.0, 0.0});
  for (const auto& row : physical_readouts) {
    require(row.size() == r.full_size(), "forced model: readout length must equal m");
    fm.readouts.push_back(row * (*r.Phi));
  }
  return fm;
}

}  // namespace pwlrom::analysis
