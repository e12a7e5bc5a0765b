#pragma once

#include "pwlrom/dmd/stability.hpp"
#include "pwlrom/fe/modal.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <iomanip>
#include <optional>
#include <ostream>
#include <limits>
#include <set>
#include <string_view>

namespace pwlrom::rom {

enum class BasisTag { dmd_re, dmd_im, pod, lnm, constraint, fixed_interface };

inline std::string_view to_string(BasisTag t) {
  switch (t) {
    case BasisTag::dmd_re: return "dmd_re";
    case BasisTag::dmd_im: return "dmd_im";
    case BasisTag::pod: return "pod";
    case BasisTag::lnm: return "lnm";
    case BasisTag::constraint: return "constraint";
    case BasisTag::fixed_interface: return "fixed_interface";
  }
  return "unknown";
}

inline BasisTag basis_tag_from_string(std::string_view s) {
  for (auto t : {BasisTag::dmd_re, BasisTag::dmd_im, BasisTag::pod, BasisTag::lnm, BasisTag::constraint, BasisTag::fixed_interface})
    if (to_string(t) == s) return t;
  throw FormatError("unknown basis column tag '" + std::string(s) + "'");
}

/// Projection matrix with per-column provenance. Constraint columns, when
/// present, come last and follow the order of `active_dofs`.
struct ReductionBasis {
  Matrix Phi;
  std::vector<BasisTag> provenance;
  std::vector<double> source_freq_hz;  // NaN for non-modal columns
  std::vector<Index> active_dofs;
  Index n_m = 0;
  Index dropped_columns = 0;  // columns removed for rank collapse

  Index rows() const { return Phi.rows(); }
  Index size() const { return Phi.cols(); }

  /// Smallest singular value after scaling every column to unit length.
  double min_singular_value() const {
    if (Phi.cols() == 0) return 0.0;
    Matrix normed = Phi;
    for (Index j = 0; j < normed.cols(); ++j) normed.col(j).normalize();
    return Eigen::BDCSVD<Matrix>(normed).singularValues().minCoeff();
  }

  /// Reduced coordinate holding the physical displacement of `dof`, if any.
  std::optional<Index> coordinate_of(Index dof) const {
    for (std::size_t i = 0; i < active_dofs.size(); ++i)
      if (active_dofs[i] == dof) return n_m + static_cast<Index>(i);
    return std::nullopt;
  }

  void validate() const {
    require(static_cast<Index>(provenance.size()) == size() && static_cast<Index>(source_freq_hz.size()) == size(),
            "basis: provenance does not match the column count");
    require(n_m + static_cast<Index>(active_dofs.size()) == size(), "basis: p must equal n_m + n_a");
    if (size() > 0 && min_singular_value() <= 1e-10) throw NumericalError("basis: columns are linearly dependent");
  }
};

namespace detail {

inline constexpr double kNoFreq = std::numeric_limits<double>::quiet_NaN();

/// Modified Gram-Schmidt with one re-orthogonalisation pass. Columns whose
/// remaining norm falls below `drop_tol` times their original norm are
/// removed; `kept` receives the surviving input indices.
inline Matrix orthonormalize(const Matrix& A, std::vector<Index>& kept, double drop_tol = 1e-10) {
  Matrix Q(A.rows(), A.cols());
  Index q = 0;
  kept.clear();
  for (Index j = 0; j < A.cols(); ++j) {
    Vector v = A.col(j);
    const double original = v.norm();
    if (original == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i < q; ++i) v -= Q.col(i).dot(v) * Q.col(i);
    const double rest = v.norm();
    if (rest <= drop_tol * original) continue;
    Q.col(q++) = v / rest;
    kept.push_back(j);
  }
  return Q.leftCols(q);
}

inline std::vector<Index> sorted_unique(std::vector<Index> v, Index m, const char* what) {
  std::sort(v.begin(), v.end());
  if (std::adjacent_find(v.begin(), v.end()) != v.end()) throw ConfigError(std::string(what) + ": duplicate DOF");
  for (Index d : v) require(d >= 0 && d < m, std::string(what) + ": DOF out of range");
  return v;
}

inline std::vector<Index> complement(const std::vector<Index>& active, Index m) {
  std::vector<Index> inactive;
  std::set<Index> a(active.begin(), active.end());
  for (Index i = 0; i < m; ++i)
    if (!a.count(i)) inactive.push_back(i);
  return inactive;
}

inline Matrix submatrix(const Matrix& A, const std::vector<Index>& r, const std::vector<Index>& c) {
  Matrix S(static_cast<Index>(r.size()), static_cast<Index>(c.size()));
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) S(static_cast<Index>(i), static_cast<Index>(j)) = A(r[i], c[j]);
  return S;
}

}  // namespace detail

/// The p lowest mass-orthonormal eigenvectors of (K, M).
inline ReductionBasis lnm_basis(const Matrix& M, const Matrix& K, Index p) {
  require(p >= 1 && p <= M.rows(), "lnm_basis: p must lie in [1, m]");
  const auto modal = fe::modal_analysis(K, M);
  ReductionBasis b;
  b.Phi = modal.shapes.leftCols(p);
  const Vector f = modal.frequency_hz();
  b.provenance.assign(static_cast<std::size_t>(p), BasisTag::lnm);
  for (Index i = 0; i < p; ++i) b.source_freq_hz.push_back(f[i]);
  b.n_m = p;
  return b;
}

/// The p leading left singular vectors of a snapshot matrix.
inline ReductionBasis pod_basis(const Matrix& X, Index p) {
  require(p >= 1, "pod_basis: p must be >= 1");
  if (X.size() == 0 || X.cwiseAbs().maxCoeff() == 0.0) throw NumericalError("pod_basis: snapshot matrix is zero");
  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  Index rank = 0;
  const double tol = std::max(X.rows(), X.cols()) * std::numeric_limits<double>::epsilon() * s[0];
  while (rank < s.size() && s[rank] > tol) ++rank;
  if (p > rank) throw NumericalError("pod_basis: p = " + std::to_string(p) + " exceeds the snapshot rank " + std::to_string(rank));
  ReductionBasis b;
  b.Phi = svd.matrixU().leftCols(p);
  b.provenance.assign(static_cast<std::size_t>(p), BasisTag::pod);
  b.source_freq_hz.assign(static_cast<std::size_t>(p), detail::kNoFreq);
  b.n_m = p;
  return b;
}

/// Real basis from selected DMD modes. Real parts of every mode come first
/// (in selection order), then the imaginary parts that are not negligible
/// (||Im|| / ||Re|| >= 1e-8); the set is orthonormalised and the first p
/// surviving columns kept.
inline ReductionBasis dmd_basis(const std::vector<dmd::SelectedMode>& modes, Index p, double imag_tol = 1e-8) {
  require(p >= 1, "dmd_basis: p must be >= 1");
  require(!modes.empty(), "dmd_basis: no modes selected");
  const Index m = modes.front().phi.size();
  std::vector<Vector> cols;
  std::vector<BasisTag> tags;
  std::vector<double> freqs;
  for (const auto& mode : modes) {
    require(mode.phi.size() == m, "dmd_basis: modes differ in length");
    cols.push_back(mode.phi.real());
    tags.push_back(BasisTag::dmd_re);
    freqs.push_back(mode.freq_hz);
  }
  for (const auto& mode : modes) {
    const double re = mode.phi.real().norm(), im = mode.phi.imag().norm();
    if (im >= imag_tol * re) {
      cols.push_back(mode.phi.imag());
      tags.push_back(BasisTag::dmd_im);
      freqs.push_back(mode.freq_hz);
    }
  }
  Matrix A(m, static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) A.col(static_cast<Index>(j)) = cols[j];
  std::vector<Index> kept;
  const Matrix Q = detail::orthonormalize(A, kept);
  if (Q.cols() < p)
    throw NumericalError("dmd_basis: only " + std::to_string(Q.cols()) + " independent columns for p = " + std::to_string(p));
  ReductionBasis b;
  b.Phi = Q.leftCols(p);
  for (Index j = 0; j < p; ++j) {
    b.provenance.push_back(tags[static_cast<std::size_t>(kept[static_cast<std::size_t>(j)])]);
    b.source_freq_hz.push_back(freqs[static_cast<std::size_t>(kept[static_cast<std::size_t>(j)])]);
  }
  b.n_m = p;
  b.dropped_columns = A.cols() - Q.cols();
  return b;
}

inline ReductionBasis dmd_basis(const dmd::ModeSelection& sel, Index p) { return dmd_basis(sel.modes, p); }

/// Static shapes for unit displacements of each active DOF with the other
/// active DOFs held at zero.
inline ReductionBasis constraint_modes(const Matrix& K, std::vector<Index> active_dofs) {
  const Index m = K.rows();
  require(!active_dofs.empty(), "constraint_modes: no active DOFs");
  const auto sorted = detail::sorted_unique(active_dofs, m, "constraint_modes");
  const auto inactive = detail::complement(sorted, m);
  const auto na = static_cast<Index>(active_dofs.size());
  ReductionBasis b;
  b.Phi = Matrix::Zero(m, na);
  for (Index j = 0; j < na; ++j) b.Phi(active_dofs[static_cast<std::size_t>(j)], j) = 1.0;
  if (!inactive.empty()) {
    Eigen::LLT<Matrix> llt(detail::submatrix(K, inactive, inactive));
    if (llt.info() != Eigen::Success) throw NumericalError("constraint_modes: inactive stiffness block is singular");
    const Matrix rhs = -detail::submatrix(K, inactive, active_dofs);
    const Matrix sol = llt.solve(rhs);
    if (!sol.allFinite()) throw NumericalError("constraint_modes: inactive stiffness block is singular");
    for (std::size_t i = 0; i < inactive.size(); ++i) b.Phi.row(inactive[i]) = sol.row(static_cast<Index>(i));
  }
  b.provenance.assign(static_cast<std::size_t>(na), BasisTag::constraint);
  b.source_freq_hz.assign(static_cast<std::size_t>(na), detail::kNoFreq);
  b.active_dofs = std::move(active_dofs);
  b.n_m = 0;
  return b;
}

/// Lowest n_m normal modes with the active DOFs clamped, zero at the active DOFs.
inline ReductionBasis fixed_interface_modes(const Matrix& M, const Matrix& K, const std::vector<Index>& active_dofs, Index n_m) {
  const Index m = K.rows();
  const auto sorted = detail::sorted_unique(active_dofs, m, "fixed_interface_modes");
  const auto inactive = detail::complement(sorted, m);
  require(n_m >= 1 && n_m <= static_cast<Index>(inactive.size()), "fixed_interface_modes: n_m exceeds the inactive dimension");
  const auto modal = fe::modal_analysis(detail::submatrix(K, inactive, inactive), detail::submatrix(M, inactive, inactive));
  ReductionBasis b;
  b.Phi = Matrix::Zero(m, n_m);
  for (std::size_t i = 0; i < inactive.size(); ++i) b.Phi.row(inactive[i]) = modal.shapes.row(static_cast<Index>(i)).head(n_m);
  const Vector f = modal.frequency_hz();
  b.provenance.assign(static_cast<std::size_t>(n_m), BasisTag::fixed_interface);
  for (Index i = 0; i < n_m; ++i) b.source_freq_hz.push_back(f[i]);
  b.n_m = n_m;
  return b;
}

/// Dynamic columns condensed to vanish at the active DOFs, orthonormalised
/// among themselves, followed by the unmodified constraint columns. Dynamic
/// columns that collapse into the constraint span are dropped and counted.
inline ReductionBasis assemble_hybrid(const ReductionBasis& dynamic, const ReductionBasis& constraints) {
  require(dynamic.rows() == constraints.rows(), "assemble_hybrid: row counts differ");
  require(dynamic.active_dofs.empty(), "assemble_hybrid: dynamic part must not carry constraint columns");
  const auto& active = constraints.active_dofs;
  const auto na = static_cast<Index>(active.size());
  require(constraints.size() == na, "assemble_hybrid: constraint basis has extra columns");
  Matrix D = dynamic.Phi;
  for (Index j = 0; j < D.cols(); ++j) {
    Vector at_active(na);
    for (Index a = 0; a < na; ++a) at_active[a] = D(active[static_cast<std::size_t>(a)], j);
    D.col(j) -= constraints.Phi * at_active;
    for (Index a = 0; a < na; ++a) D(active[static_cast<std::size_t>(a)], j) = 0.0;
  }
  std::vector<Index> kept;
  const Matrix Q = detail::orthonormalize(D, kept);
  ReductionBasis b;
  b.Phi.resize(D.rows(), Q.cols() + na);
  b.Phi << Q, constraints.Phi;
  for (Index k : kept) {
    b.provenance.push_back(dynamic.provenance[static_cast<std::size_t>(k)]);
    b.source_freq_hz.push_back(dynamic.source_freq_hz[static_cast<std::size_t>(k)]);
  }
  b.provenance.insert(b.provenance.end(), constraints.provenance.begin(), constraints.provenance.end());
  b.source_freq_hz.insert(b.source_freq_hz.end(), constraints.source_freq_hz.begin(), constraints.source_freq_hz.end());
  b.active_dofs = active;
  b.n_m = Q.cols();
  b.dropped_columns = dynamic.dropped_columns + (D.cols() - Q.cols());
  return b;
}

/// Craig-Bampton basis: fixed-interface modes plus constraint modes.
inline ReductionBasis craig_bampton(const Matrix& M, const Matrix& K, const std::vector<Index>& active_dofs, Index n_m) {
  return assemble_hybrid(fixed_interface_modes(M, K, active_dofs, n_m), constraint_modes(K, active_dofs));
}

/// Writes "column,tag,source_freq_hz" lines for a basis.
inline void write_provenance_csv(std::ostream& os, const ReductionBasis& b) {
  os << "column,tag,source_freq_hz\n" << std::setprecision(17);
  for (Index j = 0; j < b.size(); ++j) {
    os << j << ',' << to_string(b.provenance[static_cast<std::size_t>(j)]) << ',';
    const double f = b.source_freq_hz[static_cast<std::size_t>(j)];
    if (std::isfinite(f)) os << f;
    os << '\n';
  }
}

}  // namespace pwlrom::rom
