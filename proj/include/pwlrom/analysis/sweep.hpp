#pragma once

#include "pwlrom/analysis/model.hpp"
#include "pwlrom/integrate/newmark.hpp"
#include "pwlrom/parallel.hpp"

#include <chrono>
#include <limits>

namespace pwlrom::analysis {

struct SweepConfig {
  std::vector<double> freq_grid;  // Hz, ascending
  double amplitude = 0.01;        // N
  int settle_cycles = 200;
  double min_settle_time = 0.0;  // s; raises settle_cycles at high excitation frequencies
  int measure_cycles = 20;
  int steps_per_cycle = 256;
  unsigned threads = 1;
  bool keep_histories = false;
  double drift_tol = 0.005;

  void validate() const {
    require(!freq_grid.empty(), "sweep: empty frequency grid");
    for (std::size_t i = 0; i < freq_grid.size(); ++i) {
      require(freq_grid[i] > 0.0 && std::isfinite(freq_grid[i]), "sweep: frequencies must be positive");
      if (i > 0) require(freq_grid[i] > freq_grid[i - 1], "sweep: frequency grid must be strictly ascending");
    }
    require(std::isfinite(amplitude), "sweep: amplitude must be finite");
    require(settle_cycles >= 1, "sweep: settle_cycles must be >= 1");
    require(measure_cycles >= 1, "sweep: measure_cycles must be >= 1");
    require(settle_cycles >= measure_cycles, "sweep: settle_cycles must be >= measure_cycles (drift check window)");
    require(steps_per_cycle >= 20, "sweep: steps_per_cycle must be >= 20");
    require(min_settle_time >= 0.0 && std::isfinite(min_settle_time), "sweep: min_settle_time must be >= 0");
  }

  /// Settling cycles used at `freq_hz`.
  int settle_cycles_at(double freq_hz) const {
    return std::max(settle_cycles, static_cast<int>(std::ceil(min_settle_time * freq_hz - 1e-9)));
  }
};

/// Uniform frequency grid lo, lo + step, ..., hi (inclusive when it lands).
inline std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  require(count >= 1 && hi >= lo, "linear_grid: need count >= 1 and hi >= lo");
  std::vector<double> g;
  for (std::size_t i = 0; i < count; ++i)
    g.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  return g;
}

struct SweepPoint {
  double freq_hz = 0.0;
  double amplitude = 0.0;       // max |readout 0| over the final measure window
  double prev_amplitude = 0.0;  // same over the window before it
  double wallclock_s = 0.0;
  bool converged = true;        // window-to-window drift below tolerance
  bool inner_fallback = false;
  bool failed = false;
  std::string error;
  double dt = 0.0;
  Matrix history;  // readouts x samples of the final window, when kept
};

struct SweepResult {
  std::string model_id;
  std::string basis_id;
  Index p = 0;
  std::vector<SweepPoint> points;

  Index peak_index() const {
    Index best = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
      if (points[i].amplitude > points[static_cast<std::size_t>(best)].amplitude) best = static_cast<Index>(i);
    return best;
  }
  double peak_frequency() const { return points[static_cast<std::size_t>(peak_index())].freq_hz; }
  double peak_amplitude() const { return points[static_cast<std::size_t>(peak_index())].amplitude; }

  /// Peak located by a parabola through the largest grid point and its
  /// neighbours; falls back to the grid point at the ends.
  std::pair<double, double> refined_peak() const {
    const auto i = static_cast<std::size_t>(peak_index());
    if (i == 0 || i + 1 >= points.size()) return {points[i].freq_hz, points[i].amplitude};
    const double x0 = points[i - 1].freq_hz, x1 = points[i].freq_hz, x2 = points[i + 1].freq_hz;
    const double y0 = points[i - 1].amplitude, y1 = points[i].amplitude, y2 = points[i + 1].amplitude;
    const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
    const double c = (d12 - d01) / (x2 - x0);
    if (c >= 0.0) return {x1, y1};
    const double b = d01 - c * (x0 + x1);
    const double xv = std::clamp(-b / (2.0 * c), x0, x2);
    const double yv = y0 + d01 * (xv - x0) + c * (xv - x0) * (xv - x1);
    return {xv, yv};
  }

  bool all_converged() const {
    return std::all_of(points.begin(), points.end(), [](const auto& p) { return p.converged && !p.failed; });
  }
};

/// Steady-state response of `model` to amplitude * sin(2 pi f t) at one
/// frequency, starting from rest.
inline SweepPoint forced_response(const ForcedModel& model, double freq_hz, const SweepConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  SweepPoint pt;
  pt.freq_hz = freq_hz;
  integrate::Dynamics dyn = model.dyn;
  if (auto* h = std::get_if<fe::Harmonic>(&dyn.load)) {
    h->amplitude = cfg.amplitude;
    h->frequency_hz = freq_hz;
  }
  integrate::IntegratorConfig ic;
  ic.scheme = integrate::Scheme::newmark;
  ic.dt = 1.0 / (freq_hz * cfg.steps_per_cycle);
  ic.record_from = std::numeric_limits<double>::infinity();
  pt.dt = ic.dt;
  const std::int64_t spc = cfg.steps_per_cycle;
  const int settle = cfg.settle_cycles_at(freq_hz);
  const std::int64_t total = static_cast<std::int64_t>(settle + cfg.measure_cycles) * spc;
  const std::int64_t final_start = static_cast<std::int64_t>(settle) * spc;
  const std::int64_t prev_start = final_start - static_cast<std::int64_t>(cfg.measure_cycles) * spc;
  const auto nr = model.readouts.size();
  if (cfg.keep_histories) pt.history.resize(static_cast<Index>(nr), cfg.measure_cycles * spc);
  double amp = 0.0, prev = 0.0;
  auto observer = [&](std::int64_t j, double, const Vector& q, const Vector&) {
    if (j <= prev_start) return;
    const double y = model.read(0, q);
    if (j <= final_start) {
      prev = std::max(prev, std::abs(y));
      return;
    }
    amp = std::max(amp, std::abs(y));
    if (cfg.keep_histories) {
      const Index col = static_cast<Index>(j - final_start - 1);
      for (std::size_t i = 0; i < nr; ++i) pt.history(static_cast<Index>(i), col) = model.read(i, q);
    }
  };
  try {
    const auto traj = integrate::integrate_newmark(dyn, integrate::State::zero(dyn.size()), 0.0,
                                                   static_cast<double>(total) * ic.dt, ic, observer);
    pt.inner_fallback = traj.stats.inner_fallback();
  } catch (const NumericalError& e) {
    pt.failed = true;
    pt.error = e.what();
  }
  pt.amplitude = amp;
  pt.prev_amplitude = prev;
  pt.converged = !pt.failed && (amp == 0.0 ? prev == 0.0 : std::abs(amp - prev) <= cfg.drift_tol * amp);
  pt.wallclock_s = std::max(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1e-9);
  return pt;
}

/// Frequencies are independent initial-value problems; results are stored by
/// grid index so the outcome does not depend on scheduling.
inline SweepResult frequency_sweep(const ForcedModel& model, const SweepConfig& cfg) {
  cfg.validate();
  require(std::holds_alternative<fe::Harmonic>(model.dyn.load), "sweep: model must carry a harmonic load");
  SweepResult res;
  res.model_id = model.id;
  res.basis_id = model.basis_id;
  res.p = model.p;
  res.points.resize(cfg.freq_grid.size());
  parallel_for(cfg.freq_grid.size(), cfg.threads,
               [&](std::size_t i) { res.points[i] = forced_response(model, cfg.freq_grid[i], cfg); });
  return res;
}

/// Rows "freq_hz,amplitude,wallclock_s,converged,inner_fallback".
inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "freq_hz,amplitude,wallclock_s,converged,inner_fallback\n" << std::setprecision(17);
  for (const auto& p : r.points)
    os << p.freq_hz << ',' << p.amplitude << ',' << p.wallclock_s << ',' << (p.converged ? 1 : 0) << ','
       << (p.inner_fallback ? 1 : 0) << '\n';
}

}  // namespace pwlrom::analysis
