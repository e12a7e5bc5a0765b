#pragma once

#include "pwlrom/core.hpp"

#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

namespace pwlrom::io {

namespace fs = std::filesystem;

/// Lower-case hex SHA-256 of a byte string.
inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

/// Writes through `fill` into a temporary file next to `path`, then renames
/// it into place so readers never observe a partial artifact.
inline void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& fill, bool binary = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  const fs::path tmp = path.string() + ".tmp" + std::to_string(rng() % 1000000007ULL);
  try {
    std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw Error("cannot create " + tmp.string());
    fill(out);
    out.flush();
    if (!out) throw Error("write failed for " + path.string());
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
  fs::rename(tmp, path);
}

inline void atomic_write_string(const fs::path& path, std::string_view content) {
  atomic_write(path, [&](std::ostream& os) { os.write(content.data(), static_cast<std::streamsize>(content.size())); }, true);
}

}  // namespace pwlrom::io
