#pragma once

#include "pwlrom/io/files.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace pwlrom::io {

// Pipeline configuration, one INI file for every stage. Each section is
// parsed into a struct with defaults, validated before anything runs, and
// serialised back into a canonical "key=value" form so that formatting and
// comments never change a section hash.

enum class ModelType { beam, bonded };
enum class SnapshotKind { impulse, initial_deformation };

struct ModelSection {
  ModelType type = ModelType::beam;
  // beam
  double f1_hz = 50.9;
  int n_elements = 32;
  double k_c = 1000.0;
  double stop_gap = 0.0;
  // bonded
  double bonded_fraction = 0.25;
  int n_contact_pairs = 9;
  double k_p = 1e5;
  bool contacts = true;
  double forcing_amplitude = 1.0;
};

struct SnapshotSection {
  SnapshotKind kind = SnapshotKind::impulse;
  std::optional<Index> dof;  // impulse DOF, defaults to the tip / forcing DOF
  double b0 = 100.0;
  double period = 1e-4;
  double duration = 0.11;
  double sample_rate = 12000.0;
  double record_from = 0.01;
  std::string scheme = "adaptive";  // adaptive | newmark
  int substeps = 8;
  double opening_force = 1.0;
};

struct DmdSection {
  int k_max = 8;
  double rejection_ratio = 1e-8;
  double freq_tol_rel = 0.005;
  double min_persistence = 0.5;
  std::string content = "state";  // state | displacement
  int p = 0;                       // modes kept in the artifact, 0 keeps every stable cluster
};

struct RomSection {
  std::vector<std::string> bases{"dmd", "lnm"};
  std::vector<int> p{1, 5};    // sizes for dmd, pod and lnm
  std::vector<int> n_m{10};    // dynamic columns for hybrid_dmd and cb
  std::optional<std::vector<Index>> active_dofs;  // empty optional = auto from contacts
  std::string pwl_path = "full_space";
};

struct SweepSection {
  double f_min = 2.0;
  double f_max = 120.0;
  int points = 60;
  double amplitude = 0.01;
  int settle_cycles = 200;
  double min_settle_time = 6.0;
  int measure_cycles = 20;
  int steps_per_cycle = 256;
  double drift_tol = 0.005;
  std::optional<Index> forcing_dof;
  std::optional<Index> response_dof;
  int gap_pair = -1;  // candidate pair whose gap is recorded (bonded only)
  bool spectrogram = false;
  bool include_full = true;
  bool include_linear = true;
  bool include_bonded = false;  // fully bonded reference (bonded only)
};

struct BenchSection {
  int repeats = 3;
  double freq = 0.0;  // 0 picks the middle of the sweep grid
  bool stages = true;
};

struct PipelineConfig {
  ModelSection model;
  SnapshotSection snapshot;
  DmdSection dmd;
  RomSection rom;
  SweepSection sweep;
  BenchSection bench;
  std::string output_dir = "out";
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < v.size(); ++i) ss << (i ? "," : "") << v[i];
  return ss.str();
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

/// Typed access to one INI section that remembers which keys were read.
class Section {
 public:
  Section(const boost::property_tree::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    const auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return trim(it->second.data());
  }

  double get(const std::string& key, double def) {
    const auto s = raw(key);
    if (!s) return def;
    try {
      std::size_t pos = 0;
      const double v = std::stod(*s, &pos);
      if (pos != s->size()) throw std::invalid_argument(*s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(where(key) + ": expected a number, got '" + *s + "'");
    }
  }

  int get(const std::string& key, int def) {
    const auto s = raw(key);
    if (!s) return def;
    return parse_int(key, *s);
  }

  bool get(const std::string& key, bool def) {
    const auto s = raw(key);
    if (!s) return def;
    if (*s == "true" || *s == "1" || *s == "yes" || *s == "on") return true;
    if (*s == "false" || *s == "0" || *s == "no" || *s == "off") return false;
    throw ConfigError(where(key) + ": expected a boolean, got '" + *s + "'");
  }

  std::string get(const std::string& key, const std::string& def) { return raw(key).value_or(def); }

  std::string choice(const std::string& key, const std::string& def, std::initializer_list<const char*> allowed) {
    const std::string v = get(key, def);
    for (const char* a : allowed)
      if (v == a) return v;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : "|") + a;
    throw ConfigError(where(key) + ": expected one of " + list + ", got '" + v + "'");
  }

  /// "auto" (or absent) maps to nullopt.
  std::optional<Index> dof(const std::string& key) {
    const auto s = raw(key);
    if (!s || *s == "auto") return std::nullopt;
    const int v = parse_int(key, *s);
    if (v < 0) throw ConfigError(where(key) + ": DOF index must be >= 0");
    return v;
  }

  std::vector<int> int_list(const std::string& key, const std::vector<int>& def) {
    const auto s = raw(key);
    if (!s) return def;
    std::vector<int> out;
    for (const auto& tok : split_list(*s)) out.push_back(parse_int(key, tok));
    if (out.empty()) throw ConfigError(where(key) + ": empty list");
    return out;
  }

  std::vector<std::string> string_list(const std::string& key, const std::vector<std::string>& def) {
    const auto s = raw(key);
    if (!s) return def;
    auto out = split_list(*s);
    if (out.empty()) throw ConfigError(where(key) + ": empty list");
    return out;
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, _] : *tree_)
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in section [" + name_ + "]");
  }

  std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

 private:
  int parse_int(const std::string& key, const std::string& s) const {
    try {
      std::size_t pos = 0;
      const long v = std::stol(s, &pos);
      if (pos != s.size() || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw std::invalid_argument(s);
      return static_cast<int>(v);
    } catch (const std::exception&) {
      throw ConfigError(where(key) + ": expected an integer, got '" + s + "'");
    }
  }

  const boost::property_tree::ptree* tree_;
  std::string name_;
  std::set<std::string> used_;
};

inline void check(bool ok, const std::string& where, const std::string& what) {
  if (!ok) throw ConfigError(where + ": " + what);
}

}  // namespace detail

inline std::string to_string(ModelType t) { return t == ModelType::beam ? "beam" : "bonded"; }
inline std::string to_string(SnapshotKind k) { return k == SnapshotKind::impulse ? "impulse" : "initial_deformation"; }

inline constexpr const char* kKnownBases[] = {"dmd", "pod", "lnm", "cb", "hybrid_dmd"};

inline bool sized_by_n_m(const std::string& basis) { return basis == "cb" || basis == "hybrid_dmd"; }

/// Range and consistency checks; throws ConfigError naming the offending key.
inline void validate(const PipelineConfig& c) {
  using detail::check;
  const auto& m = c.model;
  if (m.type == ModelType::beam) {
    check(m.f1_hz > 0.0 && std::isfinite(m.f1_hz), "[model] f1_hz", "must be > 0");
    check(m.n_elements >= 2, "[model] n_elements", "must be >= 2");
    check(m.k_c >= 0.0, "[model] k_c", "must be >= 0");
    check(m.stop_gap >= 0.0, "[model] stop_gap", "must be >= 0");
  } else {
    check(m.n_elements >= 4 && m.n_elements % 2 == 0, "[model] n_elements", "must be even and >= 4");
    check(m.bonded_fraction >= 0.0 && m.bonded_fraction < 1.0, "[model] bonded_fraction", "must lie in [0, 1)");
    check(m.n_contact_pairs >= 1, "[model] n_contact_pairs", "must be >= 1");
    check(m.k_p > 0.0, "[model] k_p", "must be > 0");
  }
  const auto& s = c.snapshot;
  check(s.duration > 0.0, "[snapshot] duration", "must be > 0");
  check(s.sample_rate > 0.0, "[snapshot] sample_rate", "must be > 0");
  check(s.record_from >= 0.0 && s.record_from < s.duration, "[snapshot] record_from", "must lie in [0, duration)");
  check(s.period > 0.0, "[snapshot] period", "must be > 0");
  check(s.substeps >= 1, "[snapshot] substeps", "must be >= 1");
  check(std::isfinite(s.b0) && std::isfinite(s.opening_force), "[snapshot] b0/opening_force", "must be finite");
  const auto& d = c.dmd;
  check(d.k_max >= 1, "[dmd] k_max", "must be >= 1");
  check(d.rejection_ratio >= 0.0 && d.rejection_ratio < 1.0, "[dmd] rejection_ratio", "must lie in [0, 1)");
  check(d.freq_tol_rel > 0.0, "[dmd] freq_tol_rel", "must be > 0");
  check(d.min_persistence >= 0.0 && d.min_persistence <= 1.0, "[dmd] min_persistence", "must lie in [0, 1]");
  check(d.p >= 0, "[dmd] p", "must be >= 0");
  check((s.duration - s.record_from) * s.sample_rate / d.k_max >= 3.0, "[dmd] k_max",
        "record too short for the coarsest sampling interval");
  const auto& r = c.rom;
  for (const auto& b : r.bases)
    check(std::find(std::begin(kKnownBases), std::end(kKnownBases), b) != std::end(kKnownBases), "[rom] bases",
          "unknown basis '" + b + "' (expected dmd, pod, lnm, cb or hybrid_dmd)");
  for (int p : r.p) check(p >= 1, "[rom] p", "sizes must be >= 1");
  for (int n : r.n_m) check(n >= 0, "[rom] n_m", "sizes must be >= 0");
  const auto& w = c.sweep;
  check(w.f_min > 0.0 && w.f_max >= w.f_min, "[sweep] f_min/f_max", "need 0 < f_min <= f_max");
  check(w.points >= 1, "[sweep] points", "must be >= 1");
  check(w.points == 1 || w.f_max > w.f_min, "[sweep] f_max", "must exceed f_min when points > 1");
  check(w.settle_cycles >= w.measure_cycles && w.measure_cycles >= 1, "[sweep] settle_cycles",
        "need settle_cycles >= measure_cycles >= 1");
  check(w.steps_per_cycle >= 20, "[sweep] steps_per_cycle", "must be >= 20");
  check(w.min_settle_time >= 0.0, "[sweep] min_settle_time", "must be >= 0");
  check(w.drift_tol > 0.0, "[sweep] drift_tol", "must be > 0");
  check(w.gap_pair < 0 || m.type == ModelType::bonded, "[sweep] gap_pair", "only available for the bonded model");
  check(w.gap_pair < m.n_contact_pairs, "[sweep] gap_pair", "exceeds n_contact_pairs");
  check(!w.include_bonded || m.type == ModelType::bonded, "[sweep] include_bonded", "only available for the bonded model");
  check(c.bench.repeats >= 1, "[bench] repeats", "must be >= 1");
  check(c.bench.freq >= 0.0, "[bench] freq", "must be >= 0");
  check(!c.output_dir.empty(), "[output] dir", "must not be empty");
}

inline PipelineConfig parse_config(std::istream& in, const std::string& origin = "config") {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(origin + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  static const std::set<std::string> known{"model", "snapshot", "dmd", "rom", "sweep", "bench", "output"};
  for (const auto& [name, sub] : tree) {
    if (!known.count(name)) throw ConfigError(origin + ": unknown section [" + name + "]");
    if (sub.empty() && !sub.data().empty()) throw ConfigError(origin + ": key '" + name + "' outside any section");
  }
  auto section = [&tree](const std::string& name) {
    const auto it = tree.find(name);
    return detail::Section(it == tree.not_found() ? nullptr : &it->second, name);
  };

  PipelineConfig c;
  {
    auto s = section("model");
    auto& m = c.model;
    m.type = s.choice("type", "beam", {"beam", "bonded"}) == "beam" ? ModelType::beam : ModelType::bonded;
    if (m.type == ModelType::bonded) m.n_elements = 64;
    m.f1_hz = s.get("f1_hz", m.f1_hz);
    m.n_elements = s.get("n_elements", m.n_elements);
    m.k_c = s.get("k_c", m.k_c);
    m.stop_gap = s.get("stop_gap", m.stop_gap);
    m.bonded_fraction = s.get("bonded_fraction", m.bonded_fraction);
    m.n_contact_pairs = s.get("n_contact_pairs", m.n_contact_pairs);
    m.k_p = s.get("k_p", m.k_p);
    m.contacts = s.get("contacts", m.contacts);
    m.forcing_amplitude = s.get("forcing_amplitude", m.forcing_amplitude);
    s.reject_unknown();
  }
  {
    auto s = section("snapshot");
    auto& n = c.snapshot;
    const bool bonded = c.model.type == ModelType::bonded;
    n.kind = s.choice("kind", bonded ? "initial_deformation" : "impulse", {"impulse", "initial_deformation"}) == "impulse"
                 ? SnapshotKind::impulse
                 : SnapshotKind::initial_deformation;
    if (bonded) n.scheme = "newmark";
    n.dof = s.dof("dof");
    n.b0 = s.get("b0", n.b0);
    n.period = s.get("period", n.period);
    n.duration = s.get("duration", n.duration);
    n.sample_rate = s.get("sample_rate", n.sample_rate);
    n.record_from = s.get("record_from", n.record_from);
    n.scheme = s.choice("scheme", n.scheme, {"adaptive", "newmark"});
    n.substeps = s.get("substeps", n.substeps);
    n.opening_force = s.get("opening_force", n.opening_force);
    s.reject_unknown();
  }
  {
    auto s = section("dmd");
    auto& d = c.dmd;
    d.k_max = s.get("k_max", d.k_max);
    d.rejection_ratio = s.get("rejection_ratio", d.rejection_ratio);
    d.freq_tol_rel = s.get("freq_tol_rel", d.freq_tol_rel);
    d.min_persistence = s.get("min_persistence", d.min_persistence);
    d.content = s.choice("content", d.content, {"state", "displacement"});
    d.p = s.get("p", d.p);
    s.reject_unknown();
  }
  {
    auto s = section("rom");
    auto& r = c.rom;
    r.bases = s.string_list("bases", r.bases);
    r.p = s.int_list("p", r.p);
    r.n_m = s.int_list("n_m", r.n_m);
    const std::string act = s.get("active_dofs", std::string("auto"));
    if (act != "auto") {
      std::vector<Index> dofs;
      for (int v : s.int_list("active_dofs", {})) {
        if (v < 0) throw ConfigError("[rom] active_dofs: DOF index must be >= 0");
        dofs.push_back(v);
      }
      r.active_dofs = dofs;
    }
    r.pwl_path = s.choice("pwl_path", c.model.type == ModelType::bonded ? "reduced_space" : "full_space", {"full_space", "reduced_space"});
    s.reject_unknown();
  }
  {
    auto s = section("sweep");
    auto& w = c.sweep;
    w.f_min = s.get("f_min", w.f_min);
    w.f_max = s.get("f_max", w.f_max);
    w.points = s.get("points", w.points);
    w.amplitude = s.get("amplitude", w.amplitude);
    w.settle_cycles = s.get("settle_cycles", w.settle_cycles);
    w.min_settle_time = s.get("min_settle_time", w.min_settle_time);
    w.measure_cycles = s.get("measure_cycles", w.measure_cycles);
    w.steps_per_cycle = s.get("steps_per_cycle", w.steps_per_cycle);
    w.drift_tol = s.get("drift_tol", w.drift_tol);
    w.forcing_dof = s.dof("forcing_dof");
    w.response_dof = s.dof("response_dof");
    w.gap_pair = s.get("gap_pair", w.gap_pair);
    w.spectrogram = s.get("spectrogram", w.spectrogram);
    w.include_full = s.get("include_full", w.include_full);
    w.include_linear = s.get("include_linear", w.include_linear);
    w.include_bonded = s.get("include_bonded", w.include_bonded);
    s.reject_unknown();
  }
  {
    auto s = section("bench");
    c.bench.repeats = s.get("repeats", c.bench.repeats);
    c.bench.freq = s.get("freq", c.bench.freq);
    c.bench.stages = s.get("stages", c.bench.stages);
    s.reject_unknown();
  }
  {
    auto s = section("output");
    c.output_dir = s.get("dir", c.output_dir);
    s.reject_unknown();
  }
  validate(c);
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

// Canonical section text. Only keys that influence the results appear, so a
// change to, say, the sweep grid never invalidates the DMD artifacts.

inline std::string canonical_model(const ModelSection& m) {
  std::ostringstream ss;
  ss << "type=" << to_string(m.type) << "\nn_elements=" << m.n_elements << '\n';
  if (m.type == ModelType::beam) {
    ss << "f1_hz=" << detail::fmt(m.f1_hz) << "\nk_c=" << detail::fmt(m.k_c) << "\nstop_gap=" << detail::fmt(m.stop_gap) << '\n';
  } else {
    ss << "bonded_fraction=" << detail::fmt(m.bonded_fraction) << "\nn_contact_pairs=" << m.n_contact_pairs
       << "\nk_p=" << detail::fmt(m.k_p) << "\ncontacts=" << m.contacts << "\nforcing_amplitude=" << detail::fmt(m.forcing_amplitude)
       << '\n';
  }
  return ss.str();
}

inline std::string canonical_snapshot(const SnapshotSection& s) {
  std::ostringstream ss;
  ss << "kind=" << to_string(s.kind) << "\ndof=" << (s.dof ? std::to_string(*s.dof) : "auto") << "\nb0=" << detail::fmt(s.b0)
     << "\nperiod=" << detail::fmt(s.period) << "\nduration=" << detail::fmt(s.duration)
     << "\nsample_rate=" << detail::fmt(s.sample_rate) << "\nrecord_from=" << detail::fmt(s.record_from) << "\nscheme=" << s.scheme
     << "\nsubsteps=" << s.substeps << "\nopening_force=" << detail::fmt(s.opening_force) << '\n';
  return ss.str();
}

inline std::string canonical_dmd(const DmdSection& d) {
  std::ostringstream ss;
  ss << "k_max=" << d.k_max << "\nrejection_ratio=" << detail::fmt(d.rejection_ratio) << "\nfreq_tol_rel=" << detail::fmt(d.freq_tol_rel)
     << "\nmin_persistence=" << detail::fmt(d.min_persistence) << "\ncontent=" << d.content << "\np=" << d.p << '\n';
  return ss.str();
}

inline std::string canonical_rom(const RomSection& r) {
  std::ostringstream ss;
  ss << "bases=" << detail::join(r.bases) << "\np=" << detail::join(r.p) << "\nn_m=" << detail::join(r.n_m)
     << "\nactive_dofs=" << (r.active_dofs ? detail::join(*r.active_dofs) : "auto") << "\npwl_path=" << r.pwl_path << '\n';
  return ss.str();
}

inline std::string canonical_sweep(const SweepSection& w) {
  auto opt = [](const std::optional<Index>& v) { return v ? std::to_string(*v) : std::string("auto"); };
  std::ostringstream ss;
  ss << "f_min=" << detail::fmt(w.f_min) << "\nf_max=" << detail::fmt(w.f_max) << "\npoints=" << w.points
     << "\namplitude=" << detail::fmt(w.amplitude) << "\nsettle_cycles=" << w.settle_cycles
     << "\nmin_settle_time=" << detail::fmt(w.min_settle_time) << "\nmeasure_cycles=" << w.measure_cycles
     << "\nsteps_per_cycle=" << w.steps_per_cycle << "\ndrift_tol=" << detail::fmt(w.drift_tol) << "\nforcing_dof=" << opt(w.forcing_dof)
     << "\nresponse_dof=" << opt(w.response_dof) << "\ngap_pair=" << w.gap_pair << "\nspectrogram=" << w.spectrogram
     << "\ninclude_full=" << w.include_full << "\ninclude_linear=" << w.include_linear << "\ninclude_bonded=" << w.include_bonded
     << '\n';
  return ss.str();
}

inline std::string canonical_bench(const BenchSection& b) {
  std::ostringstream ss;
  ss << "repeats=" << b.repeats << "\nfreq=" << detail::fmt(b.freq) << "\nstages=" << b.stages << '\n';
  return ss.str();
}

/// Chained stage hashes: each stage hash covers its own section and the
/// hash of the stage it consumes.
struct StageHashes {
  std::string model, snapshot, dmd, rom, sweep, compare, bench;
};

inline StageHashes stage_hashes(const PipelineConfig& c) {
  StageHashes h;
  h.model = sha256_hex("model\n" + canonical_model(c.model));
  h.snapshot = sha256_hex(h.model + "\nsnapshot\n" + canonical_snapshot(c.snapshot));
  h.dmd = sha256_hex(h.snapshot + "\ndmd\n" + canonical_dmd(c.dmd));
  h.rom = sha256_hex(h.dmd + "\nrom\n" + canonical_rom(c.rom));
  h.sweep = sha256_hex(h.rom + "\nsweep\n" + canonical_sweep(c.sweep));
  h.compare = sha256_hex(h.sweep + "\ncompare\n");
  h.bench = sha256_hex(h.rom + "\nbench\n" + canonical_bench(c.bench) + canonical_sweep(c.sweep));
  return h;
}

}  // namespace pwlrom::io
