#pragma once

#include "pwlrom/io/files.hpp"

#include <json.hpp>

#include <map>

namespace pwlrom::io {

// manifest.json in the output directory:
//   { "format": 1,
//     "stages": { "<stage>": { "hash": ..., "model_hash": ..., "seed": ...,
//                              "artifacts": { "<file>": { "sha256": ..., "config_hash": ... } } } } }
// A stage is reusable when its hash matches the current configuration and
// every listed file still has the recorded digest.

struct ArtifactRecord {
  std::string sha256;
  std::string config_hash;
};

struct StageRecord {
  std::string hash;
  std::string model_hash;
  std::uint64_t seed = 0;
  std::map<std::string, ArtifactRecord> artifacts;
  nlohmann::json info = nlohmann::json::object();  // stage-specific summary
};

class Manifest {
 public:
  static constexpr int kFormat = 1;

  static Manifest load(const fs::path& dir) {
    Manifest m;
    m.dir_ = dir;
    const fs::path path = dir / "manifest.json";
    if (!fs::exists(path)) return m;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    if (j.value("format", 0) != kFormat) throw FormatError(path.string() + ": unsupported manifest format");
    for (const auto& [name, s] : j.at("stages").items()) {
      StageRecord r;
      r.hash = s.at("hash").get<std::string>();
      r.model_hash = s.at("model_hash").get<std::string>();
      r.seed = s.value("seed", std::uint64_t{0});
      r.info = s.value("info", nlohmann::json::object());
      for (const auto& [file, a] : s.at("artifacts").items())
        r.artifacts[file] = {a.at("sha256").get<std::string>(), a.at("config_hash").get<std::string>()};
      m.stages_[name] = std::move(r);
    }
    return m;
  }

  const fs::path& dir() const { return dir_; }

  const StageRecord* find(const std::string& stage) const {
    const auto it = stages_.find(stage);
    return it == stages_.end() ? nullptr : &it->second;
  }

  /// True when the stage was recorded under `hash` and its files are intact.
  bool fresh(const std::string& stage, const std::string& hash) const {
    const auto* r = find(stage);
    if (!r || r->hash != hash) return false;
    for (const auto& [file, a] : r->artifacts) {
      const fs::path p = dir_ / file;
      if (!fs::exists(p) || sha256_file(p) != a.sha256) return false;
    }
    return true;
  }

  /// Throws MissingArtifactError unless `stage` is fresh for `hash`.
  const StageRecord& require_fresh(const std::string& stage, const std::string& hash, const std::string& consumer) const {
    const auto* r = find(stage);
    if (!r) throw MissingArtifactError(consumer + ": upstream stage '" + stage + "' has not been run in " + dir_.string());
    if (r->hash != hash)
      throw MissingArtifactError(consumer + ": upstream stage '" + stage + "' was produced by a different configuration; re-run it");
    if (!fresh(stage, hash)) throw MissingArtifactError(consumer + ": artifacts of stage '" + stage + "' are missing or modified");
    return *r;
  }

  void put(const std::string& stage, StageRecord r) { stages_[stage] = std::move(r); }

  void save() const {
    nlohmann::json j;
    j["format"] = kFormat;
    j["stages"] = nlohmann::json::object();
    for (const auto& [name, r] : stages_) {
      nlohmann::json s;
      s["hash"] = r.hash;
      s["model_hash"] = r.model_hash;
      s["seed"] = r.seed;
      s["info"] = r.info;
      s["artifacts"] = nlohmann::json::object();
      for (const auto& [file, a] : r.artifacts) s["artifacts"][file] = {{"sha256", a.sha256}, {"config_hash", a.config_hash}};
      j["stages"][name] = s;
    }
    atomic_write_string(dir_ / "manifest.json", j.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::map<std::string, StageRecord> stages_;
};

}  // namespace pwlrom::io
