#pragma once

#include "pwlrom/analysis/sweep.hpp"
#include "pwlrom/integrate/trajectory.hpp"

#include <unsupported/Eigen/FFT>

namespace pwlrom::analysis {

/// One-sided amplitude spectrum. Column j of `magnitude` belongs to series j;
/// a pure sine of amplitude a that falls on a bin reads a.
struct Spectrum {
  Vector freq_hz;
  Matrix magnitude;

  Index dominant_bin(Index series = 0, Index skip_dc = 1) const {
    Index best = skip_dc;
    magnitude.col(series).segment(skip_dc, magnitude.rows() - skip_dc).maxCoeff(&best);
    return best + skip_dc;
  }

  /// Local maxima above `floor_rel` times the series maximum, by descending height.
  std::vector<Index> peaks(Index series = 0, double floor_rel = 1e-3) const {
    const auto col = magnitude.col(series);
    const double top = col.segment(1, col.size() - 1).maxCoeff();
    std::vector<Index> out;
    for (Index k = 1; k + 1 < col.size(); ++k)
      if (col[k] > col[k - 1] && col[k] >= col[k + 1] && col[k] >= floor_rel * top) out.push_back(k);
    std::sort(out.begin(), out.end(), [&](Index a, Index b) { return col[a] > col[b]; });
    return out;
  }
};

/// Amplitude spectrum of a uniformly sampled real signal.
inline Vector amplitude_spectrum(const Vector& x) {
  const auto n = x.size();
  require(n >= 2, "fft: need at least 2 samples");
  Eigen::FFT<double> fft;
  std::vector<double> in(x.data(), x.data() + n);
  std::vector<Complex> out;
  fft.fwd(out, in);
  const Index bins = n / 2 + 1;
  Vector mag(bins);
  for (Index k = 0; k < bins; ++k) {
    const double scale = (k == 0 || (n % 2 == 0 && k == n / 2)) ? 1.0 : 2.0;
    mag[k] = scale * std::abs(out[static_cast<std::size_t>(k)]) / static_cast<double>(n);
  }
  return mag;
}

inline Vector fft_frequencies(Index n, double dt) {
  Vector f(n / 2 + 1);
  for (Index k = 0; k < f.size(); ++k) f[k] = static_cast<double>(k) / (static_cast<double>(n) * dt);
  return f;
}

/// Spectrum of one DOF (dof >= 0) or the mean of all per-DOF spectra (dof < 0).
inline Spectrum fft_spectrum(const integrate::Trajectory& traj, Index dof = -1) {
  if (!traj.is_uniform()) throw ConfigError("fft: trajectory is not uniformly sampled");
  require(dof < traj.dimension(), "fft: DOF out of range");
  Spectrum s;
  s.freq_hz = fft_frequencies(traj.samples(), traj.dt);
  if (dof >= 0) {
    s.magnitude = amplitude_spectrum(traj.displacements.row(dof).transpose());
    return s;
  }
  Vector acc = Vector::Zero(s.freq_hz.size());
  for (Index i = 0; i < traj.dimension(); ++i) acc += amplitude_spectrum(traj.displacements.row(i).transpose());
  s.magnitude = acc / static_cast<double>(traj.dimension());
  return s;
}

inline constexpr double kDbFloor = -400.0;

/// 20 log10(a / 1 um), floored.
inline double to_db(double amplitude_m) {
  if (!(amplitude_m > 0.0)) return kDbFloor;
  return std::max(kDbFloor, 20.0 * std::log10(amplitude_m / 1e-6));
}

/// Response spectrum per excitation frequency. Each measure window spans an
/// integer number of excitation cycles, so the n-th order line n * f_exc
/// falls exactly on bin n * measure_cycles.
struct Spectrogram {
  std::vector<double> excitation_hz;
  std::vector<Vector> response_hz;
  std::vector<Vector> db;
  int measure_cycles = 0;

  /// Level of the order-n line at each excitation frequency (dB).
  Vector order_line(int order) const {
    Vector out(static_cast<Index>(excitation_hz.size()));
    for (std::size_t i = 0; i < excitation_hz.size(); ++i) {
      const Index bin = static_cast<Index>(order) * measure_cycles;
      out[static_cast<Index>(i)] = bin < db[i].size() ? db[i][bin] : kDbFloor;
    }
    return out;
  }

  /// Strongest level away from the first-order line (and DC) per excitation.
  Vector off_line_max(Index guard_bins = 2) const {
    Vector out(static_cast<Index>(excitation_hz.size()));
    for (std::size_t i = 0; i < excitation_hz.size(); ++i) {
      double best = kDbFloor;
      for (Index k = 1; k < db[i].size(); ++k)
        if (std::abs(k - measure_cycles) > guard_bins) best = std::max(best, db[i][k]);
      out[static_cast<Index>(i)] = best;
    }
    return out;
  }
};

/// Spectrogram of readout `series` from sweep histories.
inline Spectrogram spectrogram_over_sweep(const SweepResult& sweep, const SweepConfig& cfg, Index series = 0) {
  Spectrogram sg;
  sg.measure_cycles = cfg.measure_cycles;
  for (const auto& p : sweep.points) {
    require(p.history.cols() > 0, "spectrogram: sweep was run without histories");
    require(series < p.history.rows(), "spectrogram: readout index out of range");
    sg.excitation_hz.push_back(p.freq_hz);
    sg.response_hz.push_back(fft_frequencies(p.history.cols(), p.dt));
    const Vector mag = amplitude_spectrum(p.history.row(series).transpose());
    sg.db.push_back(mag.unaryExpr([](double a) { return to_db(a); }));
  }
  return sg;
}

/// Rows "freq_hz,<name_0>,<name_1>,...".
inline void write_spectrum_csv(std::ostream& os, const Spectrum& s, const std::vector<std::string>& names) {
  os << "freq_hz";
  for (Index j = 0; j < s.magnitude.cols(); ++j)
    os << ',' << (static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)] : "series" + std::to_string(j));
  os << '\n' << std::setprecision(17);
  for (Index k = 0; k < s.freq_hz.size(); ++k) {
    os << s.freq_hz[k];
    for (Index j = 0; j < s.magnitude.cols(); ++j) os << ',' << s.magnitude(k, j);
    os << '\n';
  }
}

/// Rows "excitation_hz,response_hz,db" up to `max_response_hz`.
inline void write_spectrogram_csv(std::ostream& os, const Spectrogram& sg, double max_response_hz) {
  os << "excitation_hz,response_hz,db\n" << std::setprecision(12);
  for (std::size_t i = 0; i < sg.excitation_hz.size(); ++i)
    for (Index k = 0; k < sg.response_hz[i].size() && sg.response_hz[i][k] <= max_response_hz; ++k)
      os << sg.excitation_hz[i] << ',' << sg.response_hz[i][k] << ',' << sg.db[i][k] << '\n';
}

}  // namespace pwlrom::analysis
