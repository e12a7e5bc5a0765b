#include "pwlrom/dmd/stability.hpp"
#include "pwlrom/io/config.hpp"
#include "pwlrom/io/manifest.hpp"
#include "pwlrom/io/matrix_io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <unistd.h>
#include <random>

using namespace pwlrom;
using namespace pwlrom::io;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("pwlrom_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Matrix random_matrix(Index rows, Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix A(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) A(i, j) = n(rng) * std::pow(10.0, static_cast<double>(static_cast<int>(rng() % 40) - 20));
  return A;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

std::string format_error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(MatrixFile, BinaryRoundTripIsBitExact) {
  TempDir dir;
  const Matrix A = random_matrix(64, 1000, 7);
  write_matrix(dir.path() / "a.bin", A, MatrixFormat::binary);
  EXPECT_TRUE(bit_equal(read_matrix(dir.path() / "a.bin"), A));
}

TEST(MatrixFile, TextRoundTripIsBitExact) {
  TempDir dir;
  Matrix A = random_matrix(7, 13, 3);
  A(0, 0) = 0.1;
  A(1, 1) = -0.0;
  A(2, 2) = std::numeric_limits<double>::denorm_min();
  write_matrix(dir.path() / "a.txt", A, MatrixFormat::text);
  EXPECT_TRUE(bit_equal(read_matrix(dir.path() / "a.txt"), A));
}

TEST(MatrixFile, EmptyMatrixRoundTrips) {
  TempDir dir;
  const Matrix A(5, 0);
  write_matrix(dir.path() / "e.bin", A, MatrixFormat::binary);
  write_matrix(dir.path() / "e.txt", A, MatrixFormat::text);
  EXPECT_EQ(read_matrix(dir.path() / "e.bin").rows(), 5);
  EXPECT_EQ(read_matrix(dir.path() / "e.txt").cols(), 0);
}

TEST(MatrixFile, WrongColumnCountNamesTheLine) {
  std::istringstream in("2 3 f64\n1 2 3\n4 5\n");
  const auto msg = format_error_message([&] { read_matrix_text(in); });
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("expected 3 columns"), std::string::npos) << msg;
}

TEST(MatrixFile, MalformedInputsAreRejected) {
  for (const char* bad : {"", "2 2\n1 2\n3 4\n", "2 2 f32\n1 2\n3 4\n", "2 2 f64\n1 2\n", "1 2 f64\n1 x\n", "-1 2 f64\n"}) {
    std::istringstream in(bad);
    EXPECT_THROW(read_matrix_text(in), FormatError) << bad;
  }
  const auto msg = format_error_message([] {
    std::istringstream in("1 2 f64\n1 abc\n");
    read_matrix_text(in);
  });
  EXPECT_NE(msg.find("line 2"), std::string::npos);
}

TEST(MatrixFile, TruncatedAndForeignBinaryRejected) {
  std::ostringstream out;
  write_matrix_binary(out, random_matrix(4, 4, 1));
  const std::string bytes = out.str();
  std::istringstream truncated(bytes.substr(0, bytes.size() - 8));
  EXPECT_THROW(read_matrix_binary(truncated), FormatError);
  std::string wrong = bytes;
  wrong[0] = 'X';
  std::istringstream magic(wrong);
  EXPECT_THROW(read_matrix_binary(magic), FormatError);
  std::string version = bytes;
  version[4] = 9;
  std::istringstream ver(version);
  EXPECT_THROW(read_matrix_binary(ver), FormatError);
}

TEST(MatrixFile, NanRejectedUnlessAllowed) {
  TempDir dir;
  Matrix A = Matrix::Ones(2, 2);
  A(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(write_matrix(dir.path() / "n.bin", A, MatrixFormat::binary), FormatError);
  EXPECT_FALSE(fs::exists(dir.path() / "n.bin"));
  EXPECT_TRUE(fs::is_empty(dir.path()));  // the temporary file is cleaned up too
  write_matrix(dir.path() / "n.bin", A, MatrixFormat::binary, true);
  write_matrix(dir.path() / "n.txt", A, MatrixFormat::text, true);
  EXPECT_TRUE(std::isnan(read_matrix(dir.path() / "n.bin")(1, 0)));
  EXPECT_TRUE(std::isnan(read_matrix(dir.path() / "n.txt")(1, 0)));
}

TEST(TrajectoryCsv, RoundTripKeepsValuesAndUniformity) {
  integrate::Trajectory tr;
  const double dt = 1.0 / 12000.0;
  const Index n = 50;
  tr.displacements = random_matrix(3, n, 11);
  for (Index j = 0; j < n; ++j) tr.times.push_back(0.01 + static_cast<double>(j) * dt);
  integrate::detect_uniform(tr);
  ASSERT_TRUE(tr.is_uniform());
  std::stringstream ss;
  write_trajectory_csv(ss, tr);
  EXPECT_EQ(ss.str().substr(0, 9), "t,u0,u1,u");
  const auto back = read_trajectory_csv(ss);
  EXPECT_EQ(back.times, tr.times);
  EXPECT_TRUE(bit_equal(back.displacements, tr.displacements));
  EXPECT_TRUE(back.is_uniform());
}

TEST(TrajectoryCsv, StreamingWriterMatchesBatchWriter) {
  integrate::Trajectory tr;
  tr.displacements = random_matrix(2, 10, 5);
  for (int j = 0; j < 10; ++j) tr.times.push_back(j * 0.5);
  std::ostringstream batch, stream;
  write_trajectory_csv(batch, tr);
  TrajectoryCsvWriter w(stream, 2);
  for (Index j = 0; j < 10; ++j) w.row(tr.times[static_cast<std::size_t>(j)], tr.displacements.col(j));
  EXPECT_EQ(batch.str(), stream.str());
  EXPECT_THROW(w.row(6.0, Vector::Constant(2, std::numeric_limits<double>::infinity())), FormatError);
}

TEST(TrajectoryCsv, NonUniformAcceptedForStorageRejectedByDmd) {
  std::istringstream in("t,u0,u1\n0,1,0\n0.001,0.5,0.2\n0.0025,0.1,0.3\n0.003,0,0.1\n0.0041,-0.2,0\n");
  const auto tr = read_trajectory_csv(in);
  EXPECT_EQ(tr.samples(), 5);
  EXPECT_FALSE(tr.is_uniform());
  try {
    dmd::pseudo_stability(tr, 2, 1e-8);
    FAIL() << "non-uniform snapshots were accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("not uniformly sampled"), std::string::npos) << e.what();
  }
  EXPECT_THROW(dmd::build_snapshot_pair(tr), ConfigError);
}

TEST(TrajectoryCsv, MalformedRowsRejected) {
  std::istringstream short_row("t,u0,u1\n0,1,2\n1,2\n");
  const auto msg = format_error_message([&] { read_trajectory_csv(short_row); });
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  std::istringstream backwards("t,u0\n1,0\n0.5,1\n");
  EXPECT_THROW(read_trajectory_csv(backwards), FormatError);
  std::istringstream header("time,u0\n0,1\n");
  EXPECT_THROW(read_trajectory_csv(header), FormatError);
}

TEST(TrajectoryBinary, PackedRoundTripWithVelocities) {
  TempDir dir;
  integrate::Trajectory tr;
  tr.displacements = random_matrix(4, 30, 2);
  tr.velocities = random_matrix(4, 30, 4);
  for (int j = 0; j < 30; ++j) tr.times.push_back(0.25 * j);
  write_matrix(dir.path() / "t.bin", pack_trajectory(tr), MatrixFormat::binary);
  const auto back = unpack_trajectory(read_matrix(dir.path() / "t.bin"), true);
  EXPECT_EQ(back.times, tr.times);
  EXPECT_TRUE(bit_equal(back.displacements, tr.displacements));
  EXPECT_TRUE(bit_equal(back.velocities, tr.velocities));
  EXPECT_DOUBLE_EQ(back.dt, 0.25);
}

TEST(Hashing, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(AtomicWrite, ReplacesContentAndLeavesNoTemporaries) {
  TempDir dir;
  atomic_write_string(dir.path() / "sub" / "f.txt", "first");
  atomic_write_string(dir.path() / "sub" / "f.txt", "second");
  EXPECT_EQ(read_file(dir.path() / "sub" / "f.txt"), "second");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir.path() / "sub"), fs::directory_iterator()), 1);
}

TEST(Config, DefaultsValidate) {
  std::istringstream in("");
  const auto c = parse_config(in);
  EXPECT_EQ(c.model.type, ModelType::beam);
  EXPECT_EQ(c.dmd.k_max, 8);
  EXPECT_EQ(c.rom.p, (std::vector<int>{1, 5}));
}

TEST(Config, BondedDefaultsFollowTheModelType) {
  std::istringstream in("[model]\ntype = bonded\n");
  const auto c = parse_config(in);
  EXPECT_EQ(c.model.n_elements, 64);
  EXPECT_EQ(c.snapshot.kind, SnapshotKind::initial_deformation);
  EXPECT_EQ(c.snapshot.scheme, "newmark");
  EXPECT_EQ(c.rom.pwl_path, "reduced_space");
}

TEST(Config, ErrorsNameTheKey) {
  auto message = [](const std::string& text) -> std::string {
    std::istringstream in(text);
    try {
      parse_config(in);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message("[model]\nf1_hz = fast\n").find("[model] f1_hz"), std::string::npos);
  EXPECT_NE(message("[model]\nn_elements = 0\n").find("n_elements"), std::string::npos);
  EXPECT_NE(message("[dmd]\nk_max = 3.5\n").find("[dmd] k_max"), std::string::npos);
  EXPECT_NE(message("[rom]\nbases = dmd, svd\n").find("svd"), std::string::npos);
  EXPECT_NE(message("[sweep]\nspectrogram = maybe\n").find("spectrogram"), std::string::npos);
  EXPECT_NE(message("[sweep]\ngap_pair = 2\n").find("gap_pair"), std::string::npos);
  EXPECT_NE(message("[model]\ntypo = 1\n").find("typo"), std::string::npos);
  EXPECT_NE(message("[extra]\na = 1\n").find("[extra]"), std::string::npos);
  EXPECT_NE(message("[sweep]\nsettle_cycles = 5\nmeasure_cycles = 10\n").find("settle_cycles"), std::string::npos);
}

TEST(Config, HashesIgnoreFormattingAndChainDownstream) {
  std::istringstream a("[model]\nk_c = 1000\n[sweep]\npoints = 60\n");
  std::istringstream b("; comment\n[sweep]\npoints=60\n\n[model]\n  k_c   =   1e3  \n");
  const auto ha = stage_hashes(parse_config(a));
  const auto hb = stage_hashes(parse_config(b));
  EXPECT_EQ(ha.model, hb.model);
  EXPECT_EQ(ha.sweep, hb.sweep);

  std::istringstream c("[model]\nk_c = 1000\n[sweep]\npoints = 30\n");
  const auto hc = stage_hashes(parse_config(c));
  EXPECT_EQ(ha.dmd, hc.dmd);  // a sweep change keeps the DMD artifacts
  EXPECT_EQ(ha.rom, hc.rom);
  EXPECT_NE(ha.sweep, hc.sweep);

  std::istringstream d("[model]\nk_c = 2000\n");
  const auto hd = stage_hashes(parse_config(d));
  EXPECT_NE(ha.model, hd.model);
  EXPECT_NE(ha.snapshot, hd.snapshot);
  EXPECT_NE(ha.sweep, hd.sweep);
}

TEST(Manifest, RoundTripAndFreshness) {
  TempDir dir;
  atomic_write_string(dir.path() / "a.txt", "payload");
  {
    Manifest m = Manifest::load(dir.path());
    EXPECT_EQ(m.find("model"), nullptr);
    StageRecord r;
    r.hash = "h1";
    r.model_hash = "h1";
    r.seed = 42;
    r.artifacts["a.txt"] = {sha256_file(dir.path() / "a.txt"), "h1"};
    r.info = {{"dofs", 64}};
    m.put("model", r);
    m.save();
  }
  Manifest m = Manifest::load(dir.path());
  ASSERT_NE(m.find("model"), nullptr);
  EXPECT_EQ(m.find("model")->seed, 42u);
  EXPECT_EQ(m.find("model")->info.at("dofs"), 64);
  EXPECT_EQ(m.find("model")->artifacts.at("a.txt").config_hash, "h1");
  EXPECT_TRUE(m.fresh("model", "h1"));
  EXPECT_FALSE(m.fresh("model", "h2"));
  EXPECT_THROW(m.require_fresh("snapshot", "x", "dmd"), MissingArtifactError);
  atomic_write_string(dir.path() / "a.txt", "tampered");
  EXPECT_FALSE(m.fresh("model", "h1"));
  EXPECT_THROW(m.require_fresh("model", "h1", "snapshot"), MissingArtifactError);
}

TEST(Manifest, CorruptFileIsAFormatError) {
  TempDir dir;
  atomic_write_string(dir.path() / "manifest.json", "{ not json");
  EXPECT_THROW(Manifest::load(dir.path()), FormatError);
}
