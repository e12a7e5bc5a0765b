#include "pwlrom/dmd/stability.hpp"

#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <random>

using namespace pwlrom;
using namespace pwlrom::dmd;
using integrate::Trajectory;

namespace {

Trajectory from_columns(const Matrix& X, double dt) {
  Trajectory tr;
  tr.displacements = X;
  tr.dt = dt;
  for (Index j = 0; j < X.cols(); ++j) tr.times.push_back(static_cast<double>(j) * dt);
  return tr;
}

// Continuous linear system with decaying oscillations at the given
// frequencies; the state itself is stored as "displacements" and its exact
// derivative as velocities so that Hermite resampling is available.
Trajectory linear_modes(const std::vector<std::pair<double, double>>& f_zeta, double dt, Index samples, int spatial = 0) {
  const auto nm = static_cast<Index>(f_zeta.size());
  Matrix A = Matrix::Zero(2 * nm, 2 * nm);
  for (Index i = 0; i < nm; ++i) {
    const double w = kTwoPi * f_zeta[static_cast<std::size_t>(i)].first, z = f_zeta[static_cast<std::size_t>(i)].second;
    A(2 * i, 2 * i + 1) = 1.0;
    A(2 * i + 1, 2 * i) = -w * w;
    A(2 * i + 1, 2 * i + 1) = -2.0 * z * w;
  }
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  const Index m = spatial > 0 ? spatial : 2 * nm;
  Matrix mix = Matrix::Identity(m, 2 * nm);
  if (spatial > 0)
    for (Index i = 0; i < mix.size(); ++i) mix.data()[i] = nd(rng);
  Vector x0 = Vector::Ones(2 * nm);
  const Matrix step = (A * dt).exp();
  Trajectory tr;
  tr.displacements.resize(m, samples);
  tr.velocities.resize(m, samples);
  Vector x = x0;
  for (Index j = 0; j < samples; ++j) {
    tr.times.push_back(static_cast<double>(j) * dt);
    tr.displacements.col(j) = mix * x;
    tr.velocities.col(j) = mix * (A * x);
    x = step * x;
  }
  tr.dt = dt;
  return tr;
}

Complex nearest(const ComplexVector& mu, Complex target) {
  Index best = 0;
  (mu.array() - target).abs().minCoeff(&best);
  return mu[best];
}

}  // namespace

TEST(SnapshotPair, StrideOne) {
  Matrix X(2, 4);
  X << 1, 2, 3, 4, 5, 6, 7, 8;
  const auto pair = build_snapshot_pair(from_columns(X, 0.1), 1);
  EXPECT_EQ(pair.X, X.leftCols(3));
  EXPECT_EQ(pair.Y, X.rightCols(3));
  EXPECT_DOUBLE_EQ(pair.dt, 0.1);
}

TEST(SnapshotPair, StrideTwo) {
  Matrix X(1, 7);
  X << 1, 2, 3, 4, 5, 6, 7;
  const auto pair = build_snapshot_pair(from_columns(X, 0.1), 2);
  Matrix ex(1, 3), ey(1, 3);
  ex << 1, 3, 5;
  ey << 3, 5, 7;
  EXPECT_EQ(pair.X, ex);
  EXPECT_EQ(pair.Y, ey);
  EXPECT_DOUBLE_EQ(pair.dt, 0.2);
}

TEST(SnapshotPair, TooFewColumns) {
  Matrix X = Matrix::Ones(1, 5);
  EXPECT_THROW(build_snapshot_pair(from_columns(X, 0.1), 3), ConfigError);
  EXPECT_NO_THROW(build_snapshot_pair(from_columns(X, 0.1), 2));
}

TEST(SnapshotPair, StateContentStacksWeightedVelocities) {
  auto tr = linear_modes({{2.0, 0.01}}, 0.01, 20);
  const auto pair = build_snapshot_pair(tr, 1, SnapshotContent::state, 0.5);
  EXPECT_EQ(pair.X.rows(), 4);
  EXPECT_EQ(pair.dofs, 2);
  EXPECT_EQ(pair.X.col(3).tail(2), 0.5 * tr.velocities.col(3));
  tr.velocities.resize(0, 0);
  EXPECT_THROW(build_snapshot_pair(tr, 1, SnapshotContent::state), ConfigError);
}

TEST(TruncatedSvd, RankOne) {
  Vector u(3), v(4);
  u << 1, 2, 3;
  v << 4, -1, 0.5, 2;
  const auto svd = truncated_svd(u * v.transpose(), 1e-10);
  EXPECT_EQ(svd.rank(), 1);
  EXPECT_NEAR(std::abs(svd.U.col(0).dot(u.normalized())), 1.0, 1e-12);
}

TEST(TruncatedSvd, ThresholdArithmetic) {
  Matrix D = Eigen::Vector3d(1.0, 1e-3, 1e-12).asDiagonal();
  EXPECT_EQ(truncated_svd(D, 1e-8).rank(), 2);
  EXPECT_EQ(truncated_svd(D, 0.0).rank(), 3);
}

TEST(TruncatedSvd, ReconstructsFullRank) {
  std::mt19937 rng(11);
  std::normal_distribution<double> nd;
  Matrix X(10, 8);
  for (Index i = 0; i < X.size(); ++i) X.data()[i] = nd(rng);
  const auto svd = truncated_svd(X, 0.0);
  EXPECT_EQ(svd.rank(), 8);
  EXPECT_LT((svd.U * svd.sigma.asDiagonal() * svd.V.transpose() - X).norm() / X.norm(), 1e-10);
  EXPECT_LT((svd.U.transpose() * svd.U - Matrix::Identity(8, 8)).norm(), 1e-10);
  EXPECT_LT((svd.V.transpose() * svd.V - Matrix::Identity(8, 8)).norm(), 1e-10);
  for (Index i = 1; i < 8; ++i) EXPECT_LE(svd.sigma[i], svd.sigma[i - 1]);
}

TEST(TruncatedSvd, ZeroMatrixRejected) { EXPECT_THROW(truncated_svd(Matrix::Zero(3, 3), 0.0), NumericalError); }

TEST(Dmd, RotationScalingMap) {
  const double rho = 0.9, th = kPi / 4;
  Matrix R(2, 2);
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Matrix X(2, 11);
  X.col(0) << 1, 0;
  for (Index j = 1; j < 11; ++j) X.col(j) = rho * R * X.col(j - 1);
  const auto spec = dmd::dmd(build_snapshot_pair(from_columns(X, 1.0)), 0.0);
  ASSERT_EQ(spec.size(), 2);
  const Complex target = std::polar(rho, th);
  EXPECT_LT(std::abs(nearest(spec.mu, target) - target), 1e-10);
  EXPECT_LT(std::abs(nearest(spec.mu, std::conj(target)) - std::conj(target)), 1e-10);
}

TEST(Dmd, UnitEigenvalueHasUndefinedDamping) {
  Matrix X = Matrix::Ones(1, 6);
  const auto spec = dmd::dmd(build_snapshot_pair(from_columns(X, 0.37)), 0.0);
  ASSERT_EQ(spec.size(), 1);
  EXPECT_NEAR(std::abs(spec.s[0]), 0.0, 1e-14);
  EXPECT_NEAR(spec.freq_hz[0], 0.0, 1e-14);
  EXPECT_FALSE(spec.details[0].zeta_defined);
}

TEST(ContinuousSpectrum, Examples) {
  const double dt = 0.01;
  const Complex s(-2.0, 100 * kPi);
  auto c = continuous_eigen(std::exp(s * dt), dt);
  EXPECT_NEAR(c.freq_hz, std::sqrt(4 + std::pow(100 * kPi, 2)) / kTwoPi, 1e-9);
  EXPECT_NEAR(c.zeta, 2.0 / std::sqrt(4 + std::pow(100 * kPi, 2)), 1e-12);
  c = continuous_eigen(std::exp(-0.1), 1.0);
  EXPECT_NEAR(c.s.real(), -0.1, 1e-15);
  EXPECT_NEAR(c.freq_hz, 0.1 / kTwoPi, 1e-15);
  EXPECT_NEAR(c.zeta, 1.0, 1e-15);
  c = continuous_eigen(std::polar(1.0, kPi / 2), 1.0);
  EXPECT_NEAR(c.zeta, 0.0, 1e-15);
  EXPECT_NEAR(c.freq_hz, 0.25, 1e-15);
  c = continuous_eigen(0.0, 1.0);
  EXPECT_FALSE(c.s_defined);
  c = continuous_eigen(-0.5, 1.0);
  EXPECT_TRUE(c.aliased);
  c = continuous_eigen(std::exp(Complex(0.3, 1.0)), 1.0);
  EXPECT_LT(c.zeta, 0.0);  // growing modes are reported, not clamped
  EXPECT_THROW(continuous_eigen(1.0, 0.0), ConfigError);
}

TEST(Dmd, LinearDataProperties) {
  const auto tr = linear_modes({{3.0, 0.02}, {7.5, 0.01}, {11.0, 0.03}}, 0.01, 200, 9);
  const auto pair = build_snapshot_pair(tr, 1);
  const auto spec = dmd::dmd(pair, 1e-10);
  ASSERT_EQ(spec.size(), 6);
  // Exact-mode eigen-residual.
  for (Index i = 0; i < spec.size(); ++i) EXPECT_LT(eigen_residual(pair, spec, i), 1e-8);
  // Best-fit reconstruction.
  const auto& svd = spec.svd;
  const Matrix YVS = pair.Y * svd.V * svd.sigma.cwiseInverse().asDiagonal();
  EXPECT_LT((pair.Y - YVS * (svd.U.transpose() * pair.X)).norm() / pair.Y.norm(), 1e-10);
  // Conjugate closure.
  for (Index i = 0; i < spec.size(); ++i) EXPECT_LT(std::abs(nearest(spec.mu, std::conj(spec.mu[i])) - std::conj(spec.mu[i])), 1e-10);
  EXPECT_NEAR(spec.mu.sum().imag(), 0.0, 1e-10);
  // |mu| = exp(-zeta w dt).
  for (Index i = 0; i < spec.size(); ++i) {
    const double w = kTwoPi * spec.freq_hz[i];
    EXPECT_NEAR(std::abs(spec.mu[i]), std::exp(-spec.zeta[i] * w * spec.dt), 1e-12);
  }
  // Frequencies and damping recovered.
  for (auto [f, z] : std::vector<std::pair<double, double>>{{3.0, 0.02}, {7.5, 0.01}, {11.0, 0.03}}) {
    Index best = 0;
    (spec.freq_hz.array() - f).abs().minCoeff(&best);
    EXPECT_NEAR(spec.freq_hz[best] / f, 1.0, 1e-8);
    EXPECT_NEAR(spec.zeta[best] / z, 1.0, 1e-6);
  }
  // Ranking is by descending |mu|.
  for (std::size_t i = 1; i < spec.rank_order.size(); ++i)
    EXPECT_GE(std::abs(spec.mu[spec.rank_order[i - 1]]), std::abs(spec.mu[spec.rank_order[i]]));
  // Unit infinity norm.
  for (Index i = 0; i < spec.size(); ++i) EXPECT_NEAR(spec.phi.col(i).cwiseAbs().maxCoeff(), 1.0, 1e-14);
}

TEST(Dmd, StrideInvarianceOfContinuousExponents) {
  const auto tr = linear_modes({{3.0, 0.02}, {7.5, 0.01}}, 0.005, 400, 6);
  const auto s1 = dmd::dmd(build_snapshot_pair(tr, 1), 1e-10);
  for (Index k : {2, 3, 5}) {
    const auto sk = dmd::dmd(build_snapshot_pair(tr, k), 1e-10);
    for (Index i = 0; i < sk.size(); ++i) {
      const Complex ref = nearest(s1.s, sk.s[i]);
      EXPECT_LT(std::abs(sk.s[i] - ref) / std::abs(ref), 1e-6) << "stride " << k;
    }
  }
}

TEST(PseudoStability, LinearTwoModeSystemPersists) {
  const auto tr = linear_modes({{3.0, 0.02}, {7.5, 0.01}}, 0.002, 2001, 6);
  StabilityOptions opt;
  opt.k_max = 8;
  opt.content = SnapshotContent::displacement;
  const auto table = pseudo_stability(tr, opt);
  ASSERT_EQ(table.rows.size(), 8u);
  for (std::size_t r = 0; r < 8; ++r) EXPECT_NEAR(table.rows[r].dt_k, 8.0 / static_cast<double>(r + 1) * 0.002, 1e-15);
  int full = 0;
  for (const auto& c : table.clusters) {
    if (c.members.size() == 8u) {
      ++full;
      EXPECT_TRUE(std::abs(c.center_hz / 3.0 - 1.0) < 1e-3 || std::abs(c.center_hz / 7.5 - 1.0) < 1e-3);
      for (const auto& m : c.members)
        EXPECT_LE(std::abs(table.rows[m.row].spectrum.freq_hz[m.eig] / c.center_hz - 1.0), table.freq_tol_rel);
    }
  }
  EXPECT_EQ(full, 2);
  const auto sel = select_stable_modes(table, opt.freq_tol_rel, 0.5, 2);
  ASSERT_EQ(sel.modes.size(), 2u);
  EXPECT_FALSE(sel.shortfall);
  EXPECT_NEAR(sel.modes[0].freq_hz, 3.0, 1e-3);  // slower decay ranks first
  EXPECT_EQ(sel.modes[0].source_k, 8);
  const auto one = select_stable_modes(table, opt.freq_tol_rel, 0.5, 1);
  ASSERT_EQ(one.modes.size(), 1u);
  EXPECT_NEAR(one.modes[0].freq_hz, 3.0, 1e-3);
  const auto many = select_stable_modes(table, opt.freq_tol_rel, 0.5, 5);
  EXPECT_EQ(many.modes.size(), 2u);
  EXPECT_TRUE(many.shortfall);
}

TEST(PseudoStability, WhiteNoiseHasNoStableCluster) {
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  Trajectory tr;
  const Index m = 12, n = 1601;
  tr.displacements.resize(m, n);
  tr.velocities.resize(m, n);
  for (Index i = 0; i < tr.displacements.size(); ++i) tr.displacements.data()[i] = nd(rng);
  for (Index i = 0; i < tr.velocities.size(); ++i) tr.velocities.data()[i] = nd(rng);
  for (Index j = 0; j < n; ++j) tr.times.push_back(static_cast<double>(j) * 1e-3);
  tr.dt = 1e-3;
  StabilityOptions opt;
  const auto table = pseudo_stability(tr, opt);
  const auto sel = select_stable_modes(table, opt.freq_tol_rel, 0.5, 5);
  EXPECT_EQ(sel.stable_clusters, 0u);
  EXPECT_TRUE(sel.shortfall);
}

TEST(PseudoStability, FailedRowsAreExcludedAndFlagged) {
  const auto tr = linear_modes({{3.0, 0.02}, {7.5, 0.01}}, 0.002, 2001, 6);
  StabilityOptions opt;
  opt.content = SnapshotContent::displacement;
  auto table = pseudo_stability(tr, opt);
  table.rows[2].failed = true;
  table.clusters = cluster_rows(table.rows, opt.freq_tol_rel);
  const auto sel = select_stable_modes(table, opt.freq_tol_rel, 1.0, 2);
  EXPECT_TRUE(sel.rows_failed);
  EXPECT_EQ(sel.modes.size(), 2u);
}

TEST(PseudoStability, ParallelRowsMatchSerial) {
  const auto tr = linear_modes({{3.0, 0.02}, {7.5, 0.01}}, 0.002, 1001, 6);
  StabilityOptions opt;
  opt.content = SnapshotContent::displacement;
  const auto serial = pseudo_stability(tr, opt);
  opt.threads = 4;
  const auto parallel = pseudo_stability(tr, opt);
  for (std::size_t r = 0; r < serial.rows.size(); ++r) EXPECT_EQ(serial.rows[r].spectrum.mu, parallel.rows[r].spectrum.mu);
  std::ostringstream a, b;
  write_stability_csv(a, serial);
  write_stability_csv(b, parallel);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, 34), "k,dt_k,f_hz,zeta,abs_mu,rank,clust");
}

TEST(PseudoStability, RejectsShortTrajectory) {
  const auto tr = linear_modes({{3.0, 0.02}}, 0.01, 10);
  EXPECT_THROW(pseudo_stability(tr, 8, 1e-10), ConfigError);
}
