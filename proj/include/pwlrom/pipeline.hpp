#pragma once

#include "pwlrom/analysis/bench.hpp"
#include "pwlrom/analysis/metrics.hpp"
#include "pwlrom/analysis/model.hpp"
#include "pwlrom/analysis/snapshots.hpp"
#include "pwlrom/analysis/spectra.hpp"
#include "pwlrom/analysis/sweep.hpp"
#include "pwlrom/dmd/stability.hpp"
#include "pwlrom/fe/beam.hpp"
#include "pwlrom/fe/bonded.hpp"
#include "pwlrom/io/config.hpp"
#include "pwlrom/io/manifest.hpp"
#include "pwlrom/io/matrix_io.hpp"
#include "pwlrom/rom/rom.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>

namespace pwlrom::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Stage { model, snapshot, dmd, rom, sweep, compare, bench, all };

inline constexpr std::pair<Stage, const char*> kStageNames[] = {
    {Stage::model, "model"}, {Stage::snapshot, "snapshot"}, {Stage::dmd, "dmd"},     {Stage::rom, "rom"},
    {Stage::sweep, "sweep"}, {Stage::compare, "compare"},   {Stage::bench, "bench"}, {Stage::all, "all"}};

inline std::string to_string(Stage s) {
  for (const auto& [st, name] : kStageNames)
    if (st == s) return name;
  return "unknown";
}

inline Stage stage_from_string(const std::string& s) {
  for (const auto& [st, name] : kStageNames)
    if (s == name) return st;
  throw ConfigError("unknown stage '" + s + "'");
}

/// Exit statuses of the command-line front end.
enum ExitCode : int { kOk = 0, kOtherError = 1, kConfigError = 2, kMissingUpstream = 3, kNumericalError = 4 };

struct RunOptions {
  std::optional<fs::path> out;  // overrides PWLROM_OUT and the config file
  unsigned threads = 1;
  std::uint64_t seed = 0;
  io::MatrixFormat format = io::MatrixFormat::text;
  bool force = false;  // recompute even when the manifest says the stage is current
};

/// --out, then the PWLROM_OUT environment variable, then [output] dir.
inline fs::path resolve_output_dir(const io::PipelineConfig& cfg, const RunOptions& opt) {
  if (opt.out) return *opt.out;
  if (const char* env = std::getenv("PWLROM_OUT"); env && *env) return env;
  return cfg.output_dir;
}

/// A model rebuilt from the [model] section.
struct ModelBundle {
  fe::SecondOrderSystem sys;
  Index forcing_dof = 0;
  std::vector<fe::GapPair> pairs;
  std::optional<fe::BondedParams> bonded;
};

inline ModelBundle build_model(const io::ModelSection& s) {
  ModelBundle b;
  if (s.type == io::ModelType::beam) {
    auto p = fe::calibrated_cantilever(s.f1_hz, s.n_elements, s.k_c);
    p.stop_gap = s.stop_gap;
    b.sys = fe::build_cantilever_beam(p);
    b.forcing_dof = fe::cantilever_tip_dof(p);
    b.sys.model_id = "beam";
  } else {
    auto p = fe::default_bonded_params();
    p.upper.n_elements = p.lower.n_elements = s.n_elements;
    p.bonded_fraction = s.bonded_fraction;
    p.n_contact_pairs = s.n_contact_pairs;
    p.k_p = s.k_p;
    p.contacts_enabled = s.contacts;
    p.forcing_amplitude = s.forcing_amplitude;
    auto a = fe::build_bonded_assembly_detailed(p);
    b.sys = std::move(a.system);
    b.forcing_dof = a.forcing_dof;
    b.pairs = std::move(a.candidate_pairs);
    b.bonded = p;
  }
  return b;
}

/// Fully bonded counterpart of a bonded model (linear reference).
inline ModelBundle bonded_reference(const ModelBundle& m) {
  require(m.bonded.has_value(), "bonded reference requested for a non-bonded model");
  auto p = *m.bonded;
  p.bonded_fraction = 1.0;
  auto a = fe::build_bonded_assembly_detailed(p);
  ModelBundle b;
  b.sys = std::move(a.system);
  b.sys.model_id = "bonded_reference";
  b.forcing_dof = a.forcing_dof;
  b.bonded = p;
  return b;
}

/// Named reduction built by the rom stage.
struct RomSpec {
  std::string name;
  std::string kind;
  int size = 0;  // p for dmd/pod/lnm, n_m for cb/hybrid_dmd
};

inline std::vector<RomSpec> rom_specs(const io::RomSection& r) {
  std::vector<RomSpec> out;
  for (const auto& kind : r.bases) {
    const auto& sizes = io::sized_by_n_m(kind) ? r.n_m : r.p;
    for (int n : sizes) out.push_back({kind + (io::sized_by_n_m(kind) ? "_nm" : "_p") + std::to_string(n), kind, n});
  }
  return out;
}

class Pipeline {
 public:
  Pipeline(io::PipelineConfig cfg, RunOptions opt, std::ostream& log = std::cout)
      : cfg_(std::move(cfg)), opt_(std::move(opt)), log_(log), hashes_(io::stage_hashes(cfg_)),
        dir_(resolve_output_dir(cfg_, opt_)) {
    fs::create_directories(dir_);
    manifest_ = io::Manifest::load(dir_);
  }

  const fs::path& output_dir() const { return dir_; }
  const io::StageHashes& hashes() const { return hashes_; }
  const io::Manifest& manifest() const { return manifest_; }

  void run(Stage stage) {
    if (stage == Stage::all) {
      for (Stage s : {Stage::model, Stage::snapshot, Stage::dmd, Stage::rom, Stage::sweep, Stage::compare}) run(s);
      return;
    }
    const std::string name = to_string(stage);
    const std::string& hash = hash_of(stage);
    if (!opt_.force && stage != Stage::bench && manifest_.fresh(name, hash)) {
      log_ << "[" << name << "] up to date (" << hash.substr(0, 12) << ")\n";
      return;
    }
    const auto start = std::chrono::steady_clock::now();
    record_ = io::StageRecord{hash, hashes_.model, opt_.seed, {}, json::object()};
    switch (stage) {
      case Stage::model: run_model(); break;
      case Stage::snapshot: run_snapshot(); break;
      case Stage::dmd: run_dmd(); break;
      case Stage::rom: run_rom(); break;
      case Stage::sweep: run_sweep(); break;
      case Stage::compare: run_compare(); break;
      case Stage::bench: run_bench(); break;
      case Stage::all: break;
    }
    manifest_.put(name, record_);
    manifest_.save();
    log_ << "[" << name << "] done in " << std::setprecision(3)
         << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s, "
         << record_.artifacts.size() << " artifacts in " << dir_.string() << "\n";
  }

 private:
  const std::string& hash_of(Stage s) const {
    switch (s) {
      case Stage::model: return hashes_.model;
      case Stage::snapshot: return hashes_.snapshot;
      case Stage::dmd: return hashes_.dmd;
      case Stage::rom: return hashes_.rom;
      case Stage::sweep: return hashes_.sweep;
      case Stage::compare: return hashes_.compare;
      default: return hashes_.bench;
    }
  }

  std::string matrix_ext() const { return opt_.format == io::MatrixFormat::binary ? ".bin" : ".txt"; }

  void record(const std::string& file) { record_.artifacts[file] = {io::sha256_file(dir_ / file), record_.hash}; }

  void write_text(const std::string& file, const std::function<void(std::ostream&)>& fill) {
    io::atomic_write(dir_ / file, fill);
    record(file);
  }

  void write_matrix(const std::string& stem, const Matrix& A) {
    const std::string file = stem + matrix_ext();
    io::write_matrix(dir_ / file, A, opt_.format);
    record(file);
  }

  const io::StageRecord& upstream(const std::string& stage, const std::string& consumer) const {
    const auto& r = manifest_.require_fresh(stage, hash_of(stage_from_string(stage)), consumer);
    if (r.model_hash != hashes_.model)
      throw MissingArtifactError(consumer + ": stage '" + stage + "' was built from a different model (model hash mismatch)");
    return r;
  }

  ModelBundle model() const { return build_model(cfg_.model); }

  Index sweep_forcing_dof(const ModelBundle& m) const { return cfg_.sweep.forcing_dof.value_or(m.forcing_dof); }
  Index response_dof(const ModelBundle& m) const { return cfg_.sweep.response_dof.value_or(sweep_forcing_dof(m)); }

  // ---- model ----

  void run_model() {
    const auto m = model();
    const auto& sys = m.sys;
    write_matrix("model_M", sys.M);
    write_matrix("model_K", sys.K);
    write_matrix("model_C", sys.C);
    write_text("model_dofs.csv", [&](std::ostream& os) {
      os << "dof,beam,node,kind,shared\n";
      for (std::size_t i = 0; i < sys.dof_labels.size(); ++i) {
        const auto& l = sys.dof_labels[i];
        os << i << ',' << l.beam << ',' << l.node << ',' << (l.kind == fe::DofKind::translation ? "w" : "theta") << ','
           << (l.shared ? 1 : 0) << '\n';
      }
    });
    const Vector f = fe::natural_frequencies(sys.K, sys.M);
    write_text("model_frequencies.csv", [&](std::ostream& os) {
      os << "mode,freq_hz\n" << std::setprecision(17);
      for (Index i = 0; i < f.size(); ++i) os << i + 1 << ',' << f[i] << '\n';
    });
    record_.info = {{"dofs", sys.size()}, {"forcing_dof", m.forcing_dof}, {"pwl_dofs", fe::pwl_dofs(sys.pwl)},
                    {"rayleigh_alpha", sys.rayleigh_alpha}, {"rayleigh_beta", sys.rayleigh_beta}};
    log_ << "[model] " << io::to_string(cfg_.model.type) << ", m = " << sys.size() << ", f1 = " << f[0] << " Hz\n";
  }

  // ---- snapshot ----

  void run_snapshot() {
    upstream("model", "snapshot");
    const auto m = model();
    const auto& s = cfg_.snapshot;
    analysis::SnapshotOptions so;
    so.duration = s.duration;
    so.sample_dt = 1.0 / s.sample_rate;
    so.record_from = s.record_from;
    so.scheme = s.scheme == "newmark" ? integrate::Scheme::newmark : integrate::Scheme::adaptive_rk;
    so.newmark_substeps = s.substeps;
    const Index dof = s.dof.value_or(m.forcing_dof);
    require(dof < m.sys.size(), "[snapshot] dof exceeds the model size");
    integrate::Trajectory traj;
    if (s.kind == io::SnapshotKind::impulse) {
      traj = analysis::generate_snapshots_impulse(m.sys, fe::HalfSineImpulse{dof, s.b0, s.period}, so);
    } else {
      const Vector load = m.pairs.empty() ? integrate::unit_load(m.sys.size(), dof) * s.opening_force
                                          : analysis::opening_load(m.sys.size(), m.pairs, s.opening_force);
      traj = analysis::generate_snapshots_initial_deformation(m.sys, load, so);
    }
    write_trajectory(traj);
    record_.info = {{"samples", traj.samples()}, {"dt", traj.dt}, {"t0", traj.times.front()}, {"t1", traj.times.back()},
                    {"velocities", traj.has_velocities()}};
    log_ << "[snapshot] " << traj.samples() << " samples of " << traj.dimension() << " DOFs\n";
  }

  void write_trajectory(const integrate::Trajectory& traj) {
    if (opt_.format == io::MatrixFormat::binary) {
      write_matrix("snapshots", io::pack_trajectory(traj));
      return;
    }
    write_text("snapshots.csv", [&](std::ostream& os) { io::write_trajectory_csv(os, traj); });
    if (traj.has_velocities()) {
      integrate::Trajectory vel;
      vel.times = traj.times;
      vel.displacements = traj.velocities;
      write_text("snapshots_velocity.csv", [&](std::ostream& os) { io::write_trajectory_csv(os, vel); });
    }
  }

  integrate::Trajectory read_snapshots(const io::StageRecord& r) const {
    if (r.artifacts.count("snapshots.bin"))
      return io::unpack_trajectory(io::read_matrix(dir_ / "snapshots.bin"), r.info.value("velocities", false));
    if (r.artifacts.count("snapshots.txt"))
      return io::unpack_trajectory(io::read_matrix(dir_ / "snapshots.txt"), r.info.value("velocities", false));
    std::ifstream in(dir_ / "snapshots.csv");
    auto traj = io::read_trajectory_csv(in);
    if (r.artifacts.count("snapshots_velocity.csv")) {
      std::ifstream vin(dir_ / "snapshots_velocity.csv");
      const auto vel = io::read_trajectory_csv(vin);
      if (vel.times != traj.times) throw FormatError("snapshot velocities do not share the displacement time stamps");
      traj.velocities = vel.displacements;
    }
    return traj;
  }

  // ---- dmd ----

  void run_dmd() {
    const auto& snap = upstream("snapshot", "dmd");
    const auto traj = read_snapshots(snap);
    if (!traj.is_uniform())
      throw ConfigError("dmd: snapshot trajectory is not uniformly sampled; DMD needs a constant time step between snapshots");
    const auto& d = cfg_.dmd;
    dmd::StabilityOptions so;
    so.k_max = d.k_max;
    so.rejection_ratio = d.rejection_ratio;
    so.freq_tol_rel = d.freq_tol_rel;
    so.threads = opt_.threads;
    so.content = d.content == "state" ? dmd::SnapshotContent::state : dmd::SnapshotContent::displacement;
    const auto table = dmd::pseudo_stability(traj, so);
    const std::size_t keep = d.p > 0 ? static_cast<std::size_t>(d.p) : table.clusters.size() + 1;
    const auto sel = dmd::select_stable_modes(table, d.freq_tol_rel, d.min_persistence, std::max<std::size_t>(keep, 1));
    write_text("dmd_stability.csv", [&](std::ostream& os) { dmd::write_stability_csv(os, table); });
    write_text("dmd_modes.csv", [&](std::ostream& os) {
      os << "mode,cluster_id,freq_hz,zeta,mu_re,mu_im,s_re,s_im,dt,source_k,persistence\n" << std::setprecision(17);
      for (std::size_t i = 0; i < sel.modes.size(); ++i) {
        const auto& md = sel.modes[i];
        os << i << ',' << md.cluster_id << ',' << md.freq_hz << ',' << md.zeta << ',' << md.mu.real() << ',' << md.mu.imag() << ','
           << md.s.real() << ',' << md.s.imag() << ',' << md.dt << ',' << md.source_k << ',' << md.persistence << '\n';
      }
    });
    const Index m = traj.dimension();
    Matrix re(m, static_cast<Index>(sel.modes.size())), im(m, static_cast<Index>(sel.modes.size()));
    for (std::size_t i = 0; i < sel.modes.size(); ++i) {
      re.col(static_cast<Index>(i)) = sel.modes[i].phi.real();
      im.col(static_cast<Index>(i)) = sel.modes[i].phi.imag();
    }
    write_matrix("dmd_modes_re", re);
    write_matrix("dmd_modes_im", im);
    record_.info = {{"stable_clusters", sel.stable_clusters}, {"modes", sel.modes.size()}, {"shortfall", sel.shortfall},
                    {"rows_failed", sel.rows_failed}};
    log_ << "[dmd] " << sel.stable_clusters << " stable clusters:";
    for (const auto& md : sel.modes) log_ << ' ' << std::setprecision(6) << md.freq_hz;
    log_ << " Hz\n";
    if (sel.rows_failed) log_ << "[dmd] warning: some pseudo-stability rows failed\n";
  }

  std::vector<dmd::SelectedMode> read_dmd_modes() const {
    const std::string ext = manifest_.find("dmd")->artifacts.count("dmd_modes_re.bin") ? ".bin" : ".txt";
    const Matrix re = io::read_matrix(dir_ / ("dmd_modes_re" + ext));
    const Matrix im = io::read_matrix(dir_ / ("dmd_modes_im" + ext));
    const auto table = io::read_csv(dir_ / "dmd_modes.csv");
    if (static_cast<Index>(table.rows.size()) != re.cols() || re.rows() != im.rows() || re.cols() != im.cols())
      throw FormatError("dmd artifacts disagree on the number of modes");
    std::vector<dmd::SelectedMode> modes;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      dmd::SelectedMode md;
      md.phi = re.col(static_cast<Index>(i)).cast<Complex>() + Complex(0.0, 1.0) * im.col(static_cast<Index>(i)).cast<Complex>();
      md.mu = {table.number(i, "mu_re"), table.number(i, "mu_im")};
      md.s = {table.number(i, "s_re"), table.number(i, "s_im")};
      md.freq_hz = table.number(i, "freq_hz");
      md.zeta = table.number(i, "zeta");
      md.dt = table.number(i, "dt");
      md.cluster_id = static_cast<int>(table.number(i, "cluster_id"));
      md.source_k = static_cast<int>(table.number(i, "source_k"));
      md.persistence = table.number(i, "persistence");
      modes.push_back(std::move(md));
    }
    return modes;
  }

  // ---- rom ----

  fe::SecondOrderSystem forced_system(const ModelBundle& m) const {
    return fe::with_forcing(m.sys, fe::Harmonic{sweep_forcing_dof(m), cfg_.sweep.amplitude, 0.0});
  }

  std::vector<Index> active_dofs(const fe::SecondOrderSystem& sys) const {
    if (cfg_.rom.active_dofs) {
      for (Index d : *cfg_.rom.active_dofs) require(d < sys.size(), "[rom] active_dofs: DOF " + std::to_string(d) + " out of range");
      return *cfg_.rom.active_dofs;
    }
    return rom::default_active_dofs(sys);
  }

  rom::ReductionBasis build_basis(const RomSpec& spec, const fe::SecondOrderSystem& sys) {
    if (spec.kind == "lnm") return rom::lnm_basis(sys.M, sys.K, spec.size);
    if (spec.kind == "pod") {
      if (!pod_data_) pod_data_ = read_snapshots(upstream("snapshot", "rom")).displacements;
      return rom::pod_basis(*pod_data_, spec.size);
    }
    const auto active = active_dofs(sys);
    if (spec.kind == "cb") return rom::craig_bampton(sys.M, sys.K, active, spec.size);
    if (!dmd_modes_) {
      upstream("dmd", "rom");
      dmd_modes_ = read_dmd_modes();
    }
    if (dmd_modes_->empty()) throw NumericalError("rom: the dmd stage selected no stable modes");
    if (spec.kind == "dmd") return rom::dmd_basis(*dmd_modes_, spec.size);
    const auto constraints = rom::constraint_modes(sys.K, active);
    if (spec.size == 0) {
      rom::ReductionBasis empty;
      empty.Phi.resize(sys.size(), 0);
      return rom::assemble_hybrid(empty, constraints);
    }
    return rom::assemble_hybrid(rom::dmd_basis(*dmd_modes_, spec.size), constraints);
  }

  rom::PwlPath path_for(const rom::ReductionBasis& b) const {
    return cfg_.rom.pwl_path == "reduced_space" && !b.active_dofs.empty() ? rom::PwlPath::reduced_space : rom::PwlPath::full_space;
  }

  void run_rom() {
    upstream("model", "rom");
    const auto m = model();
    const auto sys = forced_system(m);
    const Vector f_full = fe::natural_frequencies(sys.K, sys.M);
    json roms = json::array();
    std::vector<std::tuple<std::string, Vector>> freq_rows;
    for (const auto& spec : rom_specs(cfg_.rom)) {
      const auto basis = build_basis(spec, sys);
      const auto path = path_for(basis);
      const auto r = rom::galerkin_project(sys, basis, path);
      write_matrix("basis_" + spec.name, basis.Phi);
      write_text("basis_" + spec.name + "_provenance.csv", [&](std::ostream& os) { rom::write_provenance_csv(os, basis); });
      write_matrix("rom_" + spec.name + "_M", r.Mt);
      write_matrix("rom_" + spec.name + "_K", r.Kt);
      write_matrix("rom_" + spec.name + "_C", r.Ct);
      freq_rows.emplace_back(spec.name, r.natural_frequencies());
      roms.push_back({{"name", spec.name}, {"kind", spec.kind}, {"p", basis.size()}, {"n_m", basis.n_m},
                      {"active_dofs", basis.active_dofs}, {"path", std::string(rom::to_string(path))},
                      {"dropped_columns", basis.dropped_columns}});
      log_ << "[rom] " << spec.name << ": p = " << basis.size() << ", path = " << rom::to_string(path);
      if (basis.dropped_columns) log_ << ", " << basis.dropped_columns << " dependent columns dropped";
      log_ << '\n';
    }
    write_text("rom_frequencies.csv", [&](std::ostream& os) {
      os << "rom,mode,f_full_hz,f_rom_hz,rel_err\n" << std::setprecision(17);
      for (const auto& [name, f] : freq_rows)
        for (Index i = 0; i < f.size(); ++i) os << name << ',' << i + 1 << ',' << f_full[i] << ',' << f[i] << ',' << (f[i] - f_full[i]) / f_full[i] << '\n';
    });
    record_.info = {{"roms", roms}};
  }

  /// Rebuilds a ROM from the rom-stage artifacts.
  rom::Rom load_rom(const json& entry, const fe::SecondOrderSystem& sys) const {
    const std::string name = entry.at("name");
    const std::string ext = manifest_.find("rom")->artifacts.count("basis_" + name + ".bin") ? ".bin" : ".txt";
    rom::ReductionBasis b;
    b.Phi = io::read_matrix(dir_ / ("basis_" + name + ext));
    const auto prov = io::read_csv(dir_ / ("basis_" + name + "_provenance.csv"));
    for (std::size_t i = 0; i < prov.rows.size(); ++i) {
      b.provenance.push_back(rom::basis_tag_from_string(prov.text(i, "tag")));
      b.source_freq_hz.push_back(prov.number(i, "source_freq_hz"));
    }
    b.active_dofs = entry.at("active_dofs").get<std::vector<Index>>();
    b.n_m = entry.at("n_m").get<Index>();
    b.dropped_columns = entry.at("dropped_columns").get<Index>();
    if (b.rows() != sys.size()) throw FormatError("basis_" + name + ": row count does not match the model");
    const auto path = entry.at("path").get<std::string>() == "reduced_space" ? rom::PwlPath::reduced_space : rom::PwlPath::full_space;
    return rom::galerkin_project(sys, b, path);
  }

  // ---- sweep ----

  analysis::SweepConfig sweep_config() const {
    const auto& w = cfg_.sweep;
    analysis::SweepConfig sc;
    sc.freq_grid = analysis::linear_grid(w.f_min, w.f_max, static_cast<std::size_t>(w.points));
    sc.amplitude = w.amplitude;
    sc.settle_cycles = w.settle_cycles;
    sc.min_settle_time = w.min_settle_time;
    sc.measure_cycles = w.measure_cycles;
    sc.steps_per_cycle = w.steps_per_cycle;
    sc.drift_tol = w.drift_tol;
    sc.threads = opt_.threads;
    sc.keep_histories = w.spectrogram;
    return sc;
  }

  std::vector<RowVector> readouts(const ModelBundle& m) const {
    const Index n = m.sys.size();
    const Index resp = response_dof(m);
    require(resp < n, "[sweep] response_dof exceeds the model size");
    require(sweep_forcing_dof(m) < n, "[sweep] forcing_dof exceeds the model size");
    std::vector<RowVector> ro{analysis::dof_readout(n, resp)};
    if (cfg_.sweep.gap_pair >= 0) ro.push_back(analysis::gap_readout(n, m.pairs.at(static_cast<std::size_t>(cfg_.sweep.gap_pair))));
    return ro;
  }

  /// Models swept by the sweep and bench stages, keyed by a file-safe id.
  std::vector<std::pair<std::string, analysis::ForcedModel>> forced_models(bool with_references, const std::string& consumer) {
    const auto& rom_rec = upstream("rom", consumer);
    const auto m = model();
    const auto sys = forced_system(m);
    const auto ro = readouts(m);
    const Index fdof = sweep_forcing_dof(m);
    std::vector<std::pair<std::string, analysis::ForcedModel>> out;
    if (cfg_.sweep.include_full || !with_references) out.emplace_back("full", analysis::forced_model(sys, fdof, ro));
    if (with_references && cfg_.sweep.include_linear) {
      auto fm = analysis::forced_model(fe::linearized(sys), fdof, ro);
      fm.basis_id = "linear";
      out.emplace_back("linear", std::move(fm));
    }
    if (with_references && cfg_.sweep.include_bonded) {
      const auto ref = bonded_reference(m);
      auto fm = analysis::forced_model(ref.sys, ref.forcing_dof, {analysis::dof_readout(ref.sys.size(), ref.forcing_dof)});
      fm.basis_id = "bonded_linear";
      out.emplace_back("bonded_linear", std::move(fm));
    }
    for (const auto& entry : rom_rec.info.at("roms")) {
      const std::string name = entry.at("name");
      out.emplace_back(name, analysis::forced_model(load_rom(entry, sys), fdof, ro, name));
    }
    return out;
  }

  void run_sweep() {
    const auto sc = sweep_config();
    json sweeps = json::array();
    for (auto& [id, fm] : forced_models(true, "sweep")) {
      const auto res = analysis::frequency_sweep(fm, sc);
      write_text("sweep_" + id + ".csv", [&](std::ostream& os) { analysis::write_sweep_csv(os, res); });
      const auto [f_ref, a_ref] = res.refined_peak();
      std::size_t unconverged = 0, failed = 0;
      for (const auto& p : res.points) {
        unconverged += !p.converged;
        failed += p.failed;
      }
      json entry = {{"id", id}, {"file", "sweep_" + id + ".csv"}, {"model", fm.id}, {"basis", fm.basis_id}, {"p", fm.p},
                    {"peak_hz", res.peak_frequency()}, {"peak_amplitude", res.peak_amplitude()}, {"refined_peak_hz", f_ref},
                    {"refined_amplitude", a_ref}, {"unconverged", unconverged}, {"failed", failed}};
      if (sc.keep_histories) {
        const Index series = fm.readouts.size() > 1 ? 1 : 0;
        const auto sg = analysis::spectrogram_over_sweep(res, sc, series);
        write_text("spectrogram_" + id + ".csv", [&](std::ostream& os) { analysis::write_spectrogram_csv(os, sg, 5.0 * cfg_.sweep.f_max); });
        entry["spectrogram"] = "spectrogram_" + id + ".csv";
      }
      sweeps.push_back(entry);
      log_ << "[sweep] " << std::left << std::setw(16) << id << " p = " << std::setw(4) << fm.p << " peak " << std::setprecision(6)
           << f_ref << " Hz, amplitude " << a_ref << (unconverged ? "  (" + std::to_string(unconverged) + " points unconverged)" : "")
           << '\n';
    }
    record_.info = {{"sweeps", sweeps}};
  }

  // ---- compare ----

  void run_compare() {
    const auto& sweep_rec = upstream("sweep", "compare");
    const auto& rom_rec = upstream("rom", "compare");
    for (const auto& [file, a] : sweep_rec.artifacts)
      if (a.config_hash != sweep_rec.hash) throw MissingArtifactError("compare: artifact " + file + " carries a foreign config hash");
    const auto& sweeps = sweep_rec.info.at("sweeps");
    const json* full = nullptr;
    for (const auto& s : sweeps)
      if (s.at("id") == "full") full = &s;
    write_text("compare_sweeps.csv", [&](std::ostream& os) {
      os << "id,model,basis,p,peak_hz,peak_amplitude,refined_peak_hz,refined_amplitude,freq_err_rel,amp_err_rel,unconverged\n"
         << std::setprecision(10);
      for (const auto& s : sweeps) {
        const auto table = io::read_csv(dir_ / s.at("file").get<std::string>());
        if (table.rows.empty()) throw FormatError("compare: empty sweep file " + s.at("file").get<std::string>());
        os << s.at("id").get<std::string>() << ',' << s.at("model").get<std::string>() << ',' << s.at("basis").get<std::string>() << ','
           << s.at("p") << ',' << s.at("peak_hz").get<double>() << ',' << s.at("peak_amplitude").get<double>() << ','
           << s.at("refined_peak_hz").get<double>() << ',' << s.at("refined_amplitude").get<double>() << ',';
        if (full) {
          os << (s.at("refined_peak_hz").get<double>() / full->at("refined_peak_hz").get<double>() - 1.0) << ','
             << (s.at("refined_amplitude").get<double>() / full->at("refined_amplitude").get<double>() - 1.0);
        } else {
          os << ',';
        }
        os << ',' << s.at("unconverged") << '\n';
      }
    });

    const auto m = model();
    const auto sys = forced_system(m);
    const Vector f_full = fe::natural_frequencies(sys.K, sys.M);
    write_text("compare_angles.csv", [&](std::ostream& os) {
      os << "rom,p,reference,largest_angle_rad\n" << std::setprecision(10);
      for (const auto& entry : rom_rec.info.at("roms")) {
        const auto r = load_rom(entry, sys);
        const Index p = r.size();
        if (p > sys.size()) continue;
        const auto lnm = rom::lnm_basis(sys.M, sys.K, p);
        os << entry.at("name").get<std::string>() << ',' << p << ",lnm_p" << p << ','
           << analysis::largest_principal_angle(r.basis.Phi, lnm.Phi) << '\n';
      }
    });

    log_ << "\n" << std::left << std::setw(18) << "model" << std::setw(6) << "p" << std::setw(14) << "peak [Hz]" << std::setw(14)
         << "amplitude" << std::setw(12) << "df/f" << std::setw(12) << "dA/A" << "unconverged\n";
    for (const auto& s : sweeps) {
      log_ << std::setw(18) << s.at("id").get<std::string>() << std::setw(6) << s.at("p").get<Index>() << std::setw(14)
           << std::setprecision(6) << s.at("refined_peak_hz").get<double>() << std::setw(14) << s.at("refined_amplitude").get<double>();
      if (full) {
        log_ << std::setw(12) << std::setprecision(3)
             << (s.at("refined_peak_hz").get<double>() / full->at("refined_peak_hz").get<double>() - 1.0) << std::setw(12)
             << (s.at("refined_amplitude").get<double>() / full->at("refined_amplitude").get<double>() - 1.0);
      } else {
        log_ << std::setw(24) << "";
      }
      log_ << s.at("unconverged").get<int>() << '\n';
    }
    log_ << "\nfull-model frequencies [Hz]:";
    for (Index i = 0; i < std::min<Index>(5, f_full.size()); ++i) log_ << ' ' << std::setprecision(6) << f_full[i];
    log_ << "\n";
    record_.info = {{"rows", sweeps.size()}};
  }

  // ---- bench ----

  void run_bench() {
    const auto sc = sweep_config();
    const double freq = cfg_.bench.freq > 0.0 ? cfg_.bench.freq : sc.freq_grid[sc.freq_grid.size() / 2];
    std::vector<analysis::ForcedModel> models;
    for (auto& [id, fm] : forced_models(false, "bench")) models.push_back(std::move(fm));
    auto serial = sc;
    serial.threads = 1;
    serial.keep_histories = false;
    const auto rows = analysis::benchmark(models, serial, freq, cfg_.bench.repeats);
    std::vector<std::pair<std::string, analysis::Timing>> stages;
    if (cfg_.bench.stages) {
      const auto m = model();
      const auto sys = forced_system(m);
      const auto& snap = upstream("snapshot", "bench");
      const auto traj = read_snapshots(snap);
      const int reps = cfg_.bench.repeats;
      stages.emplace_back("decomposition", analysis::time_median([&] {
                            dmd::StabilityOptions so;
                            so.k_max = cfg_.dmd.k_max;
                            so.rejection_ratio = cfg_.dmd.rejection_ratio;
                            so.freq_tol_rel = cfg_.dmd.freq_tol_rel;
                            so.content = cfg_.dmd.content == "state" ? dmd::SnapshotContent::state : dmd::SnapshotContent::displacement;
                            dmd::pseudo_stability(traj, so);
                          }, reps));
      const auto& rom_rec = upstream("rom", "bench");
      for (const auto& entry : rom_rec.info.at("roms"))
        stages.emplace_back("projection:" + entry.at("name").get<std::string>(),
                            analysis::time_median([&] { load_rom(entry, sys); }, reps));
    }
    write_text("bench.csv", [&](std::ostream& os) {
      analysis::write_bench_csv(os, "per_frequency@" + std::to_string(freq), rows);
      for (const auto& [name, t] : stages)
        os << name << ",,,," << t.median_s << ',' << t.min_s << ',' << t.max_s << ',' << t.repeats << ",\n";
    });
    log_ << "[bench] per-frequency forced response at " << freq << " Hz (median of " << cfg_.bench.repeats << "):\n";
    for (const auto& r : rows)
      log_ << "  " << std::left << std::setw(18) << r.basis_id << " p = " << std::setw(4) << r.p << std::setprecision(4) << r.per_frequency.median_s
           << " s  speedup " << r.speedup << (r.per_frequency.noisy() ? "  (spread > 20 %)" : "") << '\n';
    for (const auto& [name, t] : stages) log_ << "  " << std::setw(28) << name << std::setprecision(4) << t.median_s << " s\n";
  }

  io::PipelineConfig cfg_;
  RunOptions opt_;
  std::ostream& log_;
  io::StageHashes hashes_;
  fs::path dir_;
  io::Manifest manifest_;
  io::StageRecord record_;
  std::optional<Matrix> pod_data_;
  std::optional<std::vector<dmd::SelectedMode>> dmd_modes_;
};

/// Maps library exceptions onto exit codes, writing the message to `err`.
inline int run_guarded(const std::function<void()>& body, std::ostream& err = std::cerr) {
  try {
    body();
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const MissingArtifactError& e) {
    err << "missing upstream artifact: " << e.what() << '\n';
    return kMissingUpstream;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kOtherError;
  }
}

}  // namespace pwlrom::pipeline
