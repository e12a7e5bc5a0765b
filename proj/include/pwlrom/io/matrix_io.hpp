#pragma once

#include "pwlrom/io/files.hpp"
#include "pwlrom/integrate/trajectory.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <iomanip>
#include <limits>

namespace pwlrom::io {

// Dense matrix files.
//   text:   first line "rows cols f64", then one line per row, values
//           separated by spaces and printed with 17 significant digits.
//   binary: "PWLM" magic, u32 version (1), u64 rows, u64 cols, u32 dtype
//           tag (1 = f64), then rows*cols little-endian doubles, row-major.

enum class MatrixFormat { text, binary };

inline constexpr char kMagic[4] = {'P', 'W', 'L', 'M'};
inline constexpr std::uint32_t kBinaryVersion = 1;
inline constexpr std::uint32_t kDtypeF64 = 1;

static_assert(std::endian::native == std::endian::little, "binary matrix format assumes a little-endian host");

inline void check_finite(const Matrix& A, bool allow_nan, const std::string& what) {
  if (!allow_nan && !A.allFinite()) throw FormatError(what + ": refusing to write non-finite values");
}

inline void write_matrix_text(std::ostream& os, const Matrix& A, bool allow_nan = false) {
  check_finite(A, allow_nan, "matrix text");
  os << A.rows() << ' ' << A.cols() << " f64\n" << std::setprecision(17);
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) os << (j ? " " : "") << A(i, j);
    os << '\n';
  }
}

inline double parse_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    // from_chars rejects "inf"/"nan" spellings produced by iostreams.
    if (tok == "nan" || tok == "-nan") return std::numeric_limits<double>::quiet_NaN();
    if (tok == "inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    throw FormatError("line " + std::to_string(line) + ": cannot parse '" + std::string(tok) + "' as a number");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (sep == ' ') {
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
      const std::size_t start = i;
      while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
      if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
  }
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i)
    if (i == s.size() || s[i] == sep) {
      std::string_view tok = s.substr(start, i - start);
      if (!tok.empty() && tok.back() == '\r') tok.remove_suffix(1);
      out.push_back(tok);
      start = i + 1;
    }
  return out;
}

inline Matrix read_matrix_text(std::istream& is) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) throw FormatError("matrix text: empty input");
  const auto head = split(line, ' ');
  if (head.size() != 3 || head[2] != "f64") throw FormatError("line 1: expected header 'rows cols f64'");
  long long rows = 0, cols = 0;
  if (std::from_chars(head[0].data(), head[0].data() + head[0].size(), rows).ec != std::errc() ||
      std::from_chars(head[1].data(), head[1].data() + head[1].size(), cols).ec != std::errc() || rows < 0 || cols < 0)
    throw FormatError("line 1: malformed dimensions");
  Matrix A(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    ++lineno;
    if (!std::getline(is, line)) throw FormatError("line " + std::to_string(lineno) + ": truncated payload, expected " + std::to_string(rows) + " rows");
    const auto toks = split(line, ' ');
    if (static_cast<long long>(toks.size()) != cols)
      throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(cols) + " columns, found " + std::to_string(toks.size()));
    for (Index j = 0; j < cols; ++j) A(i, j) = parse_double(toks[static_cast<std::size_t>(j)], lineno);
  }
  return A;
}

inline void write_matrix_binary(std::ostream& os, const Matrix& A, bool allow_nan = false) {
  check_finite(A, allow_nan, "matrix binary");
  const auto rows = static_cast<std::uint64_t>(A.rows()), cols = static_cast<std::uint64_t>(A.cols());
  os.write(kMagic, 4);
  os.write(reinterpret_cast<const char*>(&kBinaryVersion), 4);
  os.write(reinterpret_cast<const char*>(&rows), 8);
  os.write(reinterpret_cast<const char*>(&cols), 8);
  os.write(reinterpret_cast<const char*>(&kDtypeF64), 4);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = A;
  os.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * 8));
}

inline Matrix read_matrix_binary(std::istream& is) {
  char magic[4];
  std::uint32_t version = 0, dtype = 0;
  std::uint64_t rows = 0, cols = 0;
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("matrix binary: bad magic");
  if (!is.read(reinterpret_cast<char*>(&version), 4) || version != kBinaryVersion) throw FormatError("matrix binary: unsupported version");
  if (!is.read(reinterpret_cast<char*>(&rows), 8) || !is.read(reinterpret_cast<char*>(&cols), 8))
    throw FormatError("matrix binary: malformed header");
  if (!is.read(reinterpret_cast<char*>(&dtype), 4) || dtype != kDtypeF64) throw FormatError("matrix binary: unsupported dtype");
  if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw FormatError("matrix binary: implausible dimensions");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(static_cast<Index>(rows), static_cast<Index>(cols));
  const auto bytes = static_cast<std::streamsize>(rows * cols * 8);
  if (!is.read(reinterpret_cast<char*>(rm.data()), bytes)) throw FormatError("matrix binary: truncated payload");
  return rm;
}

inline void write_matrix(const fs::path& path, const Matrix& A, MatrixFormat f, bool allow_nan = false) {
  atomic_write(path, [&](std::ostream& os) {
    if (f == MatrixFormat::binary) write_matrix_binary(os, A, allow_nan);
    else write_matrix_text(os, A, allow_nan);
  }, true);
}

/// Reads either format, detected from the magic bytes.
inline Matrix read_matrix(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open " + path.string());
  char first[4] = {};
  in.read(first, 4);
  in.clear();
  in.seekg(0);
  if (std::memcmp(first, kMagic, 4) == 0) return read_matrix_binary(in);
  try {
    return read_matrix_text(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Comma-separated table with a header line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError("csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
  double number(std::size_t row, const std::string& name) const {
    const auto& cell = rows.at(row).at(column(name));
    return cell.empty() ? std::numeric_limits<double>::quiet_NaN() : parse_double(cell, row + 2);
  }
  const std::string& text(std::size_t row, const std::string& name) const { return rows.at(row).at(column(name)); }
};

inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw FormatError("csv: empty input");
  for (auto tok : split(line, ',')) t.header.emplace_back(tok);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto toks = split(line, ',');
    if (toks.size() != t.header.size())
      throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                        std::to_string(toks.size()));
    t.rows.emplace_back(toks.begin(), toks.end());
  }
  return t;
}

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open " + path.string());
  try {
    return read_csv(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Trajectory CSV: header "t,u0,u1,...", one row per sample.
class TrajectoryCsvWriter {
 public:
  TrajectoryCsvWriter(std::ostream& os, Index dofs) : os_(os), dofs_(dofs) {
    os_ << 't';
    for (Index i = 0; i < dofs; ++i) os_ << ",u" << i;
    os_ << '\n' << std::setprecision(17);
  }

  void row(double t, const Vector& u) {
    require(u.size() == dofs_, "trajectory csv: row length mismatch");
    if (!u.allFinite() || !std::isfinite(t)) throw FormatError("trajectory csv: refusing to write non-finite values");
    os_ << t;
    for (Index i = 0; i < dofs_; ++i) os_ << ',' << u[i];
    os_ << '\n';
  }

 private:
  std::ostream& os_;
  Index dofs_;
};

inline void write_trajectory_csv(std::ostream& os, const integrate::Trajectory& tr) {
  TrajectoryCsvWriter w(os, tr.dimension());
  for (Index j = 0; j < tr.samples(); ++j) w.row(tr.times[static_cast<std::size_t>(j)], tr.displacements.col(j));
}

/// Reads a trajectory CSV. Non-uniform time stamps are accepted; `dt` is set
/// only when the samples are uniform.
inline integrate::Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("trajectory csv: empty input");
  const auto head = split(line, ',');
  if (head.empty() || head[0] != "t") throw FormatError("line 1: expected header starting with 't'");
  const auto dofs = static_cast<Index>(head.size() - 1);
  std::vector<double> values;
  integrate::Trajectory tr;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto toks = split(line, ',');
    if (static_cast<Index>(toks.size()) != dofs + 1)
      throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(dofs + 1) + " fields, found " + std::to_string(toks.size()));
    const double t = parse_double(toks[0], lineno);
    if (!tr.times.empty() && !(t > tr.times.back())) throw FormatError("line " + std::to_string(lineno) + ": times must increase");
    tr.times.push_back(t);
    for (Index i = 0; i < dofs; ++i) values.push_back(parse_double(toks[static_cast<std::size_t>(i + 1)], lineno));
  }
  tr.displacements = Eigen::Map<const Matrix>(values.data(), dofs, static_cast<Index>(tr.times.size()));
  integrate::detect_uniform(tr);
  return tr;
}

/// Binary trajectory: a matrix file whose first row holds the times and the
/// remaining rows the displacements (then velocities, when present).
inline Matrix pack_trajectory(const integrate::Trajectory& tr) {
  const Index n = tr.dimension();
  const bool vel = tr.has_velocities();
  Matrix P(1 + n * (vel ? 2 : 1), tr.samples());
  P.row(0) = Eigen::Map<const RowVector>(tr.times.data(), tr.samples());
  P.middleRows(1, n) = tr.displacements;
  if (vel) P.bottomRows(n) = tr.velocities;
  return P;
}

inline integrate::Trajectory unpack_trajectory(const Matrix& P, bool has_velocities) {
  const Index rows = P.rows() - 1;
  if (rows < 1 || (has_velocities && rows % 2 != 0)) throw FormatError("packed trajectory: unexpected row count");
  const Index n = has_velocities ? rows / 2 : rows;
  integrate::Trajectory tr;
  for (Index j = 0; j < P.cols(); ++j) tr.times.push_back(P(0, j));
  for (std::size_t j = 1; j < tr.times.size(); ++j)
    if (!(tr.times[j] > tr.times[j - 1])) throw FormatError("packed trajectory: times must increase");
  tr.displacements = P.middleRows(1, n);
  if (has_velocities) tr.velocities = P.bottomRows(n);
  integrate::detect_uniform(tr);
  return tr;
}

}  // namespace pwlrom::io
