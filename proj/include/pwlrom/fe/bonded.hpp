#pragma once

#include "pwlrom/fe/beam.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pwlrom::fe {

/// Two clamped-clamped beams stacked on top of each other. Over the overlap
/// region the interface nodes nearest `overlap_start` are bonded (DOFs
/// merged); the remaining interface nodes are debonded and interact through
/// penalty contacts on their transverse DOFs.
struct BondedParams {
  BeamParams upper;
  BeamParams lower;
  double bonded_fraction = 0.25;
  double overlap_start = 0.0;  // fractions of the span
  double overlap_end = 1.0;
  int n_contact_pairs = 9;
  double k_p = 1e5;
  bool contacts_enabled = true;
  double alpha = 0.0;
  double beta = 0.0;
  double forcing_amplitude = 1.0;

  void validate() const {
    upper.validate();
    lower.validate();
    require(upper.length == lower.length && upper.n_elements == lower.n_elements,
            "bonded assembly: beams must share length and mesh");
    require(upper.n_elements >= 2, "bonded assembly: need at least 2 elements");
    require(bonded_fraction >= 0.0 && bonded_fraction <= 1.0, "bonded fraction must lie in [0, 1]");
    require(overlap_start >= 0.0 && overlap_end <= 1.0 && overlap_start <= overlap_end,
            "overlap region must satisfy 0 <= start <= end <= 1");
    require(n_contact_pairs >= 0, "n_contact_pairs must be >= 0");
    require(k_p > 0.0, "penalty stiffness must be > 0");
    require(alpha >= 0.0 && beta >= 0.0, "Rayleigh coefficients must be >= 0");
  }
};

/// Steel strips, 0.5 m span, 30 mm wide, 2 mm (upper) over 3 mm (lower),
/// 64 elements each, 1 % damping at 40 Hz and 800 Hz.
inline BondedParams default_bonded_params() {
  BondedParams p;
  auto strip = [](double h) {
    BeamParams b;
    const double width = 0.03;
    b.E = 210e9;
    b.rho = 7850.0;
    b.A = width * h;
    b.I = width * h * h * h / 12.0;
    b.length = 0.5;
    b.n_elements = 64;
    return b;
  };
  p.upper = strip(0.002);
  p.lower = strip(0.003);
  std::tie(p.alpha, p.beta) = rayleigh_coefficients(kTwoPi * 40.0, 0.01, kTwoPi * 800.0, 0.01);
  return p;
}

struct BondedLayout {
  std::vector<int> interface_nodes;
  std::vector<int> bonded_nodes;
  std::vector<int> debonded_nodes;
  std::vector<int> contact_nodes;
  int forcing_node = 0;
};

inline BondedLayout bonded_layout(const BondedParams& p) {
  p.validate();
  const int n = p.upper.n_elements;
  BondedLayout lay;
  for (int node = 1; node < n; ++node) {
    const double x = static_cast<double>(node) / n;
    if (x >= p.overlap_start - 1e-12 && x <= p.overlap_end + 1e-12) lay.interface_nodes.push_back(node);
  }
  if (lay.interface_nodes.empty()) throw ConfigError("bonded assembly: overlap region contains no interior nodes");
  const auto n_if = static_cast<int>(lay.interface_nodes.size());
  const int n_bonded = std::min(n_if, static_cast<int>(std::ceil(p.bonded_fraction * n_if - 1e-9)));
  lay.bonded_nodes.assign(lay.interface_nodes.begin(), lay.interface_nodes.begin() + n_bonded);
  lay.debonded_nodes.assign(lay.interface_nodes.begin() + n_bonded, lay.interface_nodes.end());
  const auto n_deb = static_cast<int>(lay.debonded_nodes.size());
  const int n_pairs = std::min(p.n_contact_pairs, n_deb);
  if (n_pairs == 1) {
    lay.contact_nodes.push_back(lay.debonded_nodes[n_deb / 2]);
  } else {
    for (int j = 0; j < n_pairs; ++j) {
      const auto pos = std::lround(static_cast<double>(j) * (n_deb - 1) / (n_pairs - 1));
      lay.contact_nodes.push_back(lay.debonded_nodes[pos]);
    }
  }
  lay.forcing_node = n / 2;
  return lay;
}

/// Assembled double beam. DOF order is by node, upper (w, theta) followed by
/// the lower (w, theta) unless the node is bonded, in which case the lower
/// beam reuses the upper indices.
struct BondedAssembly {
  SecondOrderSystem system;
  BondedLayout layout;
  std::vector<GapPair> candidate_pairs;  // populated even when contacts are disabled
  Index forcing_dof = 0;
};

inline BondedAssembly build_bonded_assembly_detailed(const BondedParams& p) {
  BondedAssembly out;
  out.layout = bonded_layout(p);
  const auto& lay = out.layout;
  const int n = p.upper.n_elements;
  std::map<std::pair<int, int>, Index> upper_dof, lower_dof;  // (node, kind)
  auto& labels = out.system.dof_labels;
  Index next = 0;
  for (int node = 1; node < n; ++node) {
    const bool tied = std::find(lay.bonded_nodes.begin(), lay.bonded_nodes.end(), node) != lay.bonded_nodes.end();
    for (int kind = 0; kind < 2; ++kind) {
      upper_dof[{node, kind}] = next++;
      labels.push_back({0, node, kind == 0 ? DofKind::translation : DofKind::rotation, tied});
    }
    for (int kind = 0; kind < 2; ++kind) {
      if (tied) {
        lower_dof[{node, kind}] = upper_dof[{node, kind}];
      } else {
        lower_dof[{node, kind}] = next++;
        labels.push_back({1, node, kind == 0 ? DofKind::translation : DofKind::rotation, false});
      }
    }
  }
  const Index m = next;
  auto& sys = out.system;
  sys.M = Matrix::Zero(m, m);
  sys.K = Matrix::Zero(m, m);
  auto lookup = [n](const std::map<std::pair<int, int>, Index>& map) {
    return [&map, n](int node, DofKind kind) -> Index {
      if (node == 0 || node == n) return -1;
      return map.at({node, kind == DofKind::rotation ? 1 : 0});
    };
  };
  assemble_beam(p.upper, lookup(upper_dof), sys.M, sys.K);
  assemble_beam(p.lower, lookup(lower_dof), sys.M, sys.K);
  sys.C = p.alpha * sys.M + p.beta * sys.K;
  sys.rayleigh_alpha = p.alpha;
  sys.rayleigh_beta = p.beta;

  for (int node : lay.contact_nodes) out.candidate_pairs.push_back({upper_dof[{node, 0}], lower_dof[{node, 0}], p.k_p});
  if (p.contacts_enabled && !out.candidate_pairs.empty())
    sys.pwl = GapContacts{out.candidate_pairs};
  else
    sys.pwl = NoPwl{};
  out.forcing_dof = upper_dof[{lay.forcing_node, 0}];
  sys.forcing = Harmonic{out.forcing_dof, p.forcing_amplitude, 0.0};
  sys.model_id = "bonded";
  return out;
}

inline SecondOrderSystem build_bonded_assembly(const BondedParams& p) { return build_bonded_assembly_detailed(p).system; }

}  // namespace pwlrom::fe
