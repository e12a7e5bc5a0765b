#pragma once

#include "pwlrom/analysis/sweep.hpp"

#include <algorithm>
#include <chrono>

namespace pwlrom::analysis {

struct Timing {
  double median_s = 0.0;
  double min_s = 0.0;
  double max_s = 0.0;
  int repeats = 0;

  /// Spread (max - min) / median; values above 0.2 mark a noisy measurement.
  double spread() const { return median_s > 0.0 ? (max_s - min_s) / median_s : 0.0; }
  bool noisy() const { return spread() > 0.2; }
};

inline Timing time_median(const std::function<void()>& work, int repeats) {
  require(repeats >= 1, "benchmark: repeats must be >= 1");
  std::vector<double> t;
  for (int i = 0; i < repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    work();
    t.push_back(std::max(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1e-9));
  }
  std::sort(t.begin(), t.end());
  const auto n = t.size();
  const double median = n % 2 ? t[n / 2] : 0.5 * (t[n / 2 - 1] + t[n / 2]);
  return {median, t.front(), t.back(), repeats};
}

struct BenchRow {
  std::string model_id;
  std::string basis_id;
  Index p = 0;
  Timing per_frequency;
  double speedup = 1.0;  // reference per-frequency time over this row's
};

/// Per-frequency forced-response wall clock for each model, run serially at
/// the same excitation. The first model is the speedup reference.
inline std::vector<BenchRow> benchmark(const std::vector<ForcedModel>& models, const SweepConfig& cfg, double freq_hz,
                                       int repeats) {
  require(!models.empty(), "benchmark: no models");
  cfg.validate();
  std::vector<BenchRow> rows;
  for (const auto& m : models) {
    BenchRow row{m.id, m.basis_id, m.p, time_median([&] { forced_response(m, freq_hz, cfg); }, repeats)};
    rows.push_back(row);
  }
  for (auto& r : rows) r.speedup = rows.front().per_frequency.median_s / r.per_frequency.median_s;
  return rows;
}

/// Rows "stage,model,basis,p,median_s,min_s,max_s,repeats,speedup".
inline void write_bench_csv(std::ostream& os, const std::string& stage, const std::vector<BenchRow>& rows, bool header = true) {
  if (header) os << "stage,model,basis,p,median_s,min_s,max_s,repeats,speedup\n";
  os << std::setprecision(9);
  for (const auto& r : rows)
    os << stage << ',' << r.model_id << ',' << r.basis_id << ',' << r.p << ',' << r.per_frequency.median_s << ','
       << r.per_frequency.min_s << ',' << r.per_frequency.max_s << ',' << r.per_frequency.repeats << ',' << r.speedup << '\n';
}

}  // namespace pwlrom::analysis
