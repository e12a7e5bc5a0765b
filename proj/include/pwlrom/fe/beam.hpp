#pragma once

#include "pwlrom/fe/modal.hpp"
#include "pwlrom/fe/system.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <tuple>

namespace pwlrom::fe {

/// Euler-Bernoulli beam data. Units are SI throughout.
struct BeamParams {
  double E = 70e9;
  double I = 0.02 * 0.002 * 0.002 * 0.002 / 12.0;
  double rho = 2700.0;
  double A = 0.02 * 0.002;
  double length = 0.18;
  int n_elements = 32;
  double alpha = 0.0;  // mass-proportional damping (1/s)
  double beta = 0.0;   // stiffness-proportional damping (s)
  double k_c = 0.0;    // tip stop stiffness, 0 disables the stop
  double stop_gap = 0.0;

  void validate() const {
    require(E > 0.0 && I > 0.0 && rho > 0.0 && A > 0.0 && length > 0.0,
            "beam: E, I, rho, A and length must be positive");
    require(n_elements >= 1, "beam: n_elements must be >= 1");
    require(k_c >= 0.0, "beam: stop stiffness must be >= 0");
    require(alpha >= 0.0 && beta >= 0.0, "beam: Rayleigh coefficients must be >= 0");
    require(stop_gap >= 0.0, "beam: stop gap must be >= 0");
  }
};

/// Roots of cos(x) cosh(x) = -1 (clamped-free beam), first five.
inline constexpr double kCantileverRoots[5] = {1.8751040687119611, 4.6940911329739301, 7.8547574382376126,
                                              10.995540734875467, 14.137168391046471};

/// Analytic natural frequency of mode `i` (0-based) of a uniform cantilever.
inline double cantilever_frequency(const BeamParams& p, int i) {
  const double lam = kCantileverRoots[i];
  return lam * lam / (kTwoPi * p.length * p.length) * std::sqrt(p.E * p.I / (p.rho * p.A));
}

/// Aluminium strip (20 mm x 2 mm) whose length is chosen so that the first
/// cantilever frequency equals `f1_hz`, damped at 0.5 % (mode 1) and 1 %
/// (mode 5), with a stop of stiffness `k_c` at the tip rest position.
inline BeamParams calibrated_cantilever(double f1_hz = 50.9, int n_elements = 32, double k_c = 1000.0) {
  BeamParams p;
  const double b = 0.02, h = 0.002;
  p.E = 70e9;
  p.rho = 2700.0;
  p.A = b * h;
  p.I = b * h * h * h / 12.0;
  p.n_elements = n_elements;
  const double lam = kCantileverRoots[0];
  p.length = std::sqrt(lam * lam / (kTwoPi * f1_hz) * std::sqrt(p.E * p.I / (p.rho * p.A)));
  const double w1 = kTwoPi * cantilever_frequency(p, 0);
  const double w5 = kTwoPi * cantilever_frequency(p, 4);
  std::tie(p.alpha, p.beta) = rayleigh_coefficients(w1, 0.005, w5, 0.01);
  p.k_c = k_c;
  p.stop_gap = 0.0;
  return p;
}

/// Hermite cubic element stiffness, DOF order (w1, theta1, w2, theta2).
inline Eigen::Matrix4d beam_element_stiffness(double EI, double le) {
  const double l2 = le * le;
  Eigen::Matrix4d k;
  k << 12, 6 * le, -12, 6 * le,
       6 * le, 4 * l2, -6 * le, 2 * l2,
       -12, -6 * le, 12, -6 * le,
       6 * le, 2 * l2, -6 * le, 4 * l2;
  return EI / (l2 * le) * k;
}

/// Consistent element mass, same DOF order.
inline Eigen::Matrix4d beam_element_mass(double rhoA, double le) {
  const double l2 = le * le;
  Eigen::Matrix4d m;
  m << 156, 22 * le, 54, -13 * le,
       22 * le, 4 * l2, 13 * le, -3 * l2,
       54, 13 * le, 156, -22 * le,
       -13 * le, -3 * l2, -22 * le, 4 * l2;
  return rhoA * le / 420.0 * m;
}

/// Scatters the elements of one beam into (M, K). `dof_of(node, kind)`
/// returns the global index or -1 for a constrained DOF.
inline void assemble_beam(const BeamParams& p, const std::function<Index(int, DofKind)>& dof_of, Matrix& M, Matrix& K) {
  const double le = p.length / p.n_elements;
  const Eigen::Matrix4d ke = beam_element_stiffness(p.E * p.I, le);
  const Eigen::Matrix4d me = beam_element_mass(p.rho * p.A, le);
  for (int e = 0; e < p.n_elements; ++e) {
    const Index map[4] = {dof_of(e, DofKind::translation), dof_of(e, DofKind::rotation),
                          dof_of(e + 1, DofKind::translation), dof_of(e + 1, DofKind::rotation)};
    for (int a = 0; a < 4; ++a) {
      if (map[a] < 0) continue;
      for (int b = 0; b < 4; ++b) {
        if (map[b] < 0) continue;
        K(map[a], map[b]) += ke(a, b);
        M(map[a], map[b]) += me(a, b);
      }
    }
  }
}

/// Cantilever clamped at x = 0. DOFs: (w, theta) of nodes 1..n, so the tip
/// translation is DOF 2n-2. A positive k_c adds a stop under the tip.
inline SecondOrderSystem build_cantilever_beam(const BeamParams& p) {
  p.validate();
  const Index m = 2 * p.n_elements;
  SecondOrderSystem sys;
  sys.M = Matrix::Zero(m, m);
  sys.K = Matrix::Zero(m, m);
  assemble_beam(
      p, [](int node, DofKind kind) -> Index {
        if (node == 0) return -1;
        return 2 * (node - 1) + (kind == DofKind::rotation ? 1 : 0);
      },
      sys.M, sys.K);
  sys.C = p.alpha * sys.M + p.beta * sys.K;
  sys.rayleigh_alpha = p.alpha;
  sys.rayleigh_beta = p.beta;
  for (int node = 1; node <= p.n_elements; ++node) {
    sys.dof_labels.push_back({0, node, DofKind::translation, false});
    sys.dof_labels.push_back({0, node, DofKind::rotation, false});
  }
  if (p.k_c > 0.0)
    sys.pwl = ElasticStop{m - 2, p.k_c, p.stop_gap};
  else
    sys.pwl = NoPwl{};
  sys.forcing = NoForcing{};
  sys.model_id = "cantilever";
  return sys;
}

inline Index cantilever_tip_dof(const BeamParams& p) { return 2 * p.n_elements - 2; }

}  // namespace pwlrom::fe
