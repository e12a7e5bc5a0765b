#pragma once

#include "pwlrom/dmd/dmd.hpp"
#include "pwlrom/parallel.hpp"

#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace pwlrom::dmd {

struct StabilityOptions {
  int k_max = 8;
  double rejection_ratio = 1e-8;
  double freq_tol_rel = 0.005;
  unsigned threads = 1;
  SnapshotContent content = SnapshotContent::state;
  double velocity_weight = 0.0;  // <= 0 selects the balanced weight of the input trajectory

  void validate() const {
    require(k_max >= 1, "pseudo-stability: k_max must be >= 1");
    require(rejection_ratio >= 0.0 && rejection_ratio < 1.0, "pseudo-stability: rejection ratio must lie in [0, 1)");
    require(freq_tol_rel > 0.0, "pseudo-stability: frequency tolerance must be > 0");
  }
};

/// One DMD run at sampling interval dt_k = (k_max / k) dt.
struct StabilityRow {
  int k = 0;
  double dt_k = 0.0;
  bool failed = false;
  std::string error;
  DmdSpectrum spectrum;
  std::vector<Index> rank;  // rank[i] = position of eigenvalue i in the |mu| ordering (0 = largest)
};

struct ClusterMember {
  std::size_t row = 0;
  Index eig = 0;
};

struct Cluster {
  int id = 0;
  double center_hz = 0.0;
  std::vector<ClusterMember> members;
  double persistence = 0.0;  // fraction of successful rows containing the cluster
  double decay_rate = 0.0;   // mean of -Re(s) over members
};

struct StabilityTable {
  int k_max = 0;
  double base_dt = 0.0;
  double freq_tol_rel = 0.0;
  std::vector<StabilityRow> rows;  // ordered by k ascending
  std::vector<Cluster> clusters;

  std::size_t successful_rows() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.failed; }));
  }
  bool any_failed() const { return successful_rows() != rows.size(); }

  /// Cluster id of (row, eig), or -1.
  int cluster_of(std::size_t row, Index eig) const {
    for (const auto& c : clusters)
      for (const auto& m : c.members)
        if (m.row == row && m.eig == eig) return c.id;
    return -1;
  }
};

/// Eigenvalues that take part in clustering: defined, not aliased, and the
/// upper half-plane representative of each conjugate pair.
inline bool clusterable(const DmdSpectrum& spec, Index i) {
  const auto& d = spec.details[static_cast<std::size_t>(i)];
  return d.s_defined && !d.aliased && spec.mu[i].imag() >= 0.0 && std::isfinite(d.freq_hz) && d.freq_hz > 0.0;
}

/// Groups eigenvalues across rows by relative frequency proximity. Rows are
/// visited from the finest sampling to the coarsest; each cluster takes at
/// most one member per row, matched greedily by smallest relative distance
/// to the running cluster centre.
inline std::vector<Cluster> cluster_rows(const std::vector<StabilityRow>& rows, double freq_tol_rel) {
  std::vector<Cluster> clusters;
  std::vector<double> sum_f;
  const auto ok_rows = static_cast<double>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.failed; }));
  for (std::size_t ri = rows.size(); ri-- > 0;) {
    const auto& row = rows[ri];
    if (row.failed) continue;
    const auto& spec = row.spectrum;
    struct Candidate {
      double dist;
      Index eig;
      std::size_t cluster;
    };
    std::vector<Candidate> cands;
    std::vector<Index> eligible;
    for (Index i = 0; i < spec.size(); ++i) {
      if (!clusterable(spec, i)) continue;
      eligible.push_back(i);
      for (std::size_t c = 0; c < clusters.size(); ++c) {
        const double d = std::abs(spec.freq_hz[i] - clusters[c].center_hz) / clusters[c].center_hz;
        if (d <= freq_tol_rel) cands.push_back({d, i, c});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.dist < b.dist; });
    std::vector<bool> eig_used(static_cast<std::size_t>(spec.size()), false);
    std::vector<bool> cluster_used(clusters.size(), false);
    for (const auto& c : cands) {
      if (eig_used[static_cast<std::size_t>(c.eig)] || cluster_used[c.cluster]) continue;
      eig_used[static_cast<std::size_t>(c.eig)] = true;
      cluster_used[c.cluster] = true;
      clusters[c.cluster].members.push_back({ri, c.eig});
    }
    for (Index i : eligible) {
      if (eig_used[static_cast<std::size_t>(i)]) continue;
      Cluster cl;
      cl.id = static_cast<int>(clusters.size());
      cl.members.push_back({ri, i});
      clusters.push_back(cl);
      sum_f.push_back(0.0);
    }
    for (auto& cl : clusters) {
      double f = 0.0;
      for (const auto& m : cl.members) f += rows[m.row].spectrum.freq_hz[m.eig];
      cl.center_hz = f / static_cast<double>(cl.members.size());
    }
  }
  for (auto& cl : clusters) {
    double decay = 0.0;
    for (const auto& m : cl.members) decay -= rows[m.row].spectrum.s[m.eig].real();
    cl.decay_rate = decay / static_cast<double>(cl.members.size());
    cl.persistence = ok_rows > 0 ? static_cast<double>(cl.members.size()) / ok_rows : 0.0;
  }
  return clusters;
}

/// DMD at every sampling interval dt_k = (k_max / k) dt, k = 1..k_max.
/// Non-integer strides are obtained by resampling the trajectory (Hermite
/// interpolation when velocities are stored).
inline StabilityTable pseudo_stability(const integrate::Trajectory& traj, const StabilityOptions& opt) {
  opt.validate();
  if (!traj.is_uniform()) throw ConfigError("pseudo-stability: trajectory is not uniformly sampled");
  const double span = traj.times.back() - traj.times.front();
  if (span / (traj.dt * opt.k_max) < 2.0 - 1e-9)
    throw ConfigError("pseudo-stability: trajectory too short for the coarsest sampling interval");
  StabilityTable table;
  table.k_max = opt.k_max;
  table.base_dt = traj.dt;
  table.freq_tol_rel = opt.freq_tol_rel;
  table.rows.resize(static_cast<std::size_t>(opt.k_max));
  const double weight = opt.content == SnapshotContent::state
                            ? (opt.velocity_weight > 0.0 ? opt.velocity_weight : balanced_velocity_weight(traj))
                            : 0.0;
  parallel_for(table.rows.size(), opt.threads, [&](std::size_t idx) {
    auto& row = table.rows[idx];
    row.k = static_cast<int>(idx) + 1;
    const double ratio = static_cast<double>(opt.k_max) / row.k;
    row.dt_k = ratio * traj.dt;
    try {
      const auto stride = static_cast<Index>(std::llround(ratio));
      const bool integral = std::abs(ratio - static_cast<double>(stride)) < 1e-12;
      const SnapshotPair pair = integral ? build_snapshot_pair(traj, stride, opt.content, weight)
                                         : build_snapshot_pair(integrate::resample(traj, row.dt_k), 1, opt.content, weight);
      row.spectrum = dmd(pair, opt.rejection_ratio);
      row.rank.assign(static_cast<std::size_t>(row.spectrum.size()), 0);
      for (std::size_t pos = 0; pos < row.spectrum.rank_order.size(); ++pos)
        row.rank[static_cast<std::size_t>(row.spectrum.rank_order[pos])] = static_cast<Index>(pos);
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
    }
  });
  table.clusters = cluster_rows(table.rows, opt.freq_tol_rel);
  return table;
}

inline StabilityTable pseudo_stability(const integrate::Trajectory& traj, int k_max, double rejection_ratio) {
  StabilityOptions opt;
  opt.k_max = k_max;
  opt.rejection_ratio = rejection_ratio;
  return pseudo_stability(traj, opt);
}

struct SelectedMode {
  Complex mu;          // at the sampling interval of the row it was taken from
  ComplexVector phi;   // displacement part, unit infinity norm
  Complex s;
  double freq_hz = 0.0;
  double zeta = 0.0;
  double dt = 0.0;
  int cluster_id = 0;
  int source_k = 0;
  double persistence = 0.0;
};

struct ModeSelection {
  std::vector<SelectedMode> modes;
  std::size_t stable_clusters = 0;
  bool shortfall = false;    // fewer than p stable clusters were found
  bool rows_failed = false;  // some rows failed; persistence used the remaining ones
};

/// Keeps clusters present in at least `min_persistence` of the successful
/// rows, orders them by slowest decay (largest |mu| at a common sampling
/// interval) and returns the first p, each represented by its member from the
/// finest-sampled row.
inline ModeSelection select_stable_modes(const StabilityTable& table, double freq_tol_rel, double min_persistence, std::size_t p) {
  require(!table.rows.empty(), "select_stable_modes: empty stability table");
  require(min_persistence >= 0.0 && min_persistence <= 1.0, "select_stable_modes: persistence must lie in [0, 1]");
  require(p >= 1, "select_stable_modes: p must be >= 1");
  if (table.successful_rows() == 0) throw NumericalError("select_stable_modes: every DMD run failed");
  const auto clusters = freq_tol_rel == table.freq_tol_rel ? table.clusters : cluster_rows(table.rows, freq_tol_rel);
  std::vector<const Cluster*> stable;
  for (const auto& c : clusters)
    if (c.persistence >= min_persistence - 1e-12) stable.push_back(&c);
  std::stable_sort(stable.begin(), stable.end(), [](const Cluster* a, const Cluster* b) { return a->decay_rate < b->decay_rate; });
  ModeSelection out;
  out.stable_clusters = stable.size();
  out.rows_failed = table.any_failed();
  out.shortfall = stable.size() < p;
  for (std::size_t i = 0; i < std::min(p, stable.size()); ++i) {
    const Cluster& c = *stable[i];
    const auto finest = std::max_element(c.members.begin(), c.members.end(),
                                         [&](const auto& a, const auto& b) { return table.rows[a.row].k < table.rows[b.row].k; });
    const auto& row = table.rows[finest->row];
    const auto& spec = row.spectrum;
    const Index e = finest->eig;
    out.modes.push_back({spec.mu[e], displacement_shape(spec, e), spec.s[e], spec.freq_hz[e], spec.zeta[e], row.dt_k, c.id, row.k,
                         c.persistence});
  }
  return out;
}

/// Long-format table: one line per eigenvalue of every successful row.
inline void write_stability_csv(std::ostream& os, const StabilityTable& table) {
  os << "k,dt_k,f_hz,zeta,abs_mu,rank,cluster_id\n";
  os << std::setprecision(17);
  std::map<std::pair<std::size_t, Index>, int> ids;
  for (const auto& c : table.clusters)
    for (const auto& m : c.members) ids[{m.row, m.eig}] = c.id;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.failed) continue;
    for (Index i = 0; i < row.spectrum.size(); ++i) {
      if (!row.spectrum.details[static_cast<std::size_t>(i)].s_defined) continue;
      const auto it = ids.find({r, i});
      os << row.k << ',' << row.dt_k << ',' << row.spectrum.freq_hz[i] << ','
         << (std::isfinite(row.spectrum.zeta[i]) ? std::to_string(row.spectrum.zeta[i]) : std::string()) << ','
         << std::abs(row.spectrum.mu[i]) << ','
         << row.rank[static_cast<std::size_t>(i)] << ',' << (it == ids.end() ? -1 : it->second) << '\n';
    }
  }
}

}  // namespace pwlrom::dmd
