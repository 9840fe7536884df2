// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "subdoa/linalg.hpp"
#include "subdoa/simulate.hpp"

using namespace subdoa;

namespace {
const ArrayGeometry kGeom = ArrayGeometry::uca(9, 1.0);
const SubarrayScheme kScheme = SubarrayScheme::default_uca9();
const ScenarioRanges kRanges;  // defaults
const CorrelationSpec kUncorrelated;
}  // namespace

TEST_CASE("draw_scenario with no sources") {
  Rng rng(1);
  const Scenario sc = draw_scenario(0, kRanges, kUncorrelated, rng);
  CHECK(sc.num_sources() == 0);
  CHECK(sc.source_cov.rows() == 0);
  CHECK(sc.noise_var >= std::pow(10.0, -1.0));
  CHECK(sc.noise_var <= std::pow(10.0, 3.0));
}

TEST_CASE("draw_scenario power convention") {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Scenario sc = draw_scenario(3, kRanges, kUncorrelated, rng);
    CHECK(std::is_sorted(sc.doas.begin(), sc.doas.end()));
    double max_power = 0.0;
    for (int l = 0; l < 3; ++l) {
      const double p = sc.source_cov(l, l).real();
      CHECK(p >= std::pow(10.0, -0.9) - 1e-15);
      CHECK(p <= 1.0);
      max_power = std::max(max_power, p);
      for (int j = 0; j < 3; ++j)
        if (j != l) CHECK(sc.source_cov(l, j) == std::complex<double>(0, 0));
    }
    CHECK(max_power == 1.0);
  }
}

TEST_CASE("draw_scenario rejects inverted ranges") {
  Rng rng(3);
  ScenarioRanges bad = kRanges;
  bad.noise_min_db = 10.0;
  bad.noise_max_db = -10.0;
  CHECK_THROWS_AS(draw_scenario(2, bad, kUncorrelated, rng),
                  std::invalid_argument);
}

TEST_CASE("draw_scenario is bit-reproducible") {
  Rng a(42), b(42);
  const Scenario sa = draw_scenario(3, kRanges, kUncorrelated, a);
  const Scenario sb = draw_scenario(3, kRanges, kUncorrelated, b);
  CHECK(sa.noise_var == sb.noise_var);
  for (int i = 0; i < 3; ++i) {
    CHECK(sa.doas(i) == sb.doas(i));
    CHECK(sa.source_cov(i, i) == sb.source_cov(i, i));
  }
}

TEST_CASE("drawn angles are uniform on the field of view") {
  // Pooled over components (the multiset is unchanged by sorting), the angles
  // are i.i.d. uniform; Kolmogorov-Smirnov against U[0, 2 pi) at the 1% level.
  Rng rng(5);
  const int draws = 100000;
  std::vector<double> pooled;
  pooled.reserve(3 * draws);
  for (int i = 0; i < draws; ++i) {
    const Scenario sc = draw_scenario(3, kRanges, kUncorrelated, rng);
    for (int l = 0; l < 3; ++l) pooled.push_back(sc.doas(l));
  }
  std::sort(pooled.begin(), pooled.end());
  const double n = static_cast<double>(pooled.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    const double f = pooled[i] / kTwoPi;
    ks = std::max(ks, std::abs((i + 1) / n - f));
    ks = std::max(ks, std::abs(f - i / n));
  }
  const double critical = 1.62762 / std::sqrt(n);
  CHECK(ks < critical);
}

TEST_CASE("correlated covariance structure") {
  const Eigen::VectorXd unit = Eigen::VectorXd::Ones(3);

  const Eigen::MatrixXcd r0 = correlated_covariance(0.0, unit);
  CHECK((r0 - Eigen::MatrixXcd::Identity(3, 3)).norm() == 0.0);

  const Eigen::MatrixXcd r1 = correlated_covariance(1.0, unit);
  CHECK((r1 - Eigen::MatrixXcd::Ones(3, 3)).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r1);
  int nonzero = 0;
  for (int i = 0; i < 3; ++i)
    if (es.eigenvalues()(i) > 1e-12) ++nonzero;
  CHECK(nonzero == 1);  // rank one at full correlation

  const Eigen::MatrixXcd rh = correlated_covariance(0.5, unit);
  CHECK(rh(1, 0).real() == doctest::Approx(0.5));
  CHECK(rh(1, 1).real() == doctest::Approx(1.0));
  CHECK(rh(1, 2).real() == doctest::Approx(0.5));
  CHECK(rh(0, 2).real() == doctest::Approx(0.25));

  CHECK_THROWS_AS(correlated_covariance(1.5, unit), std::invalid_argument);
  CHECK_THROWS_AS(correlated_covariance(-0.1, unit), std::invalid_argument);

  // PSD across the admissible range.
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd powers(3);
    for (int l = 0; l < 3; ++l) powers(l) = rng.uniform(0.1, 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> check(
        correlated_covariance(rng.uniform(), powers));
    CHECK(check.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("snapshots of an empty noiseless scenario are zero") {
  Scenario sc;
  sc.doas.resize(0);
  sc.source_cov.resize(0, 0);
  sc.noise_var = 0.0;
  Rng rng(7);
  const SnapshotSet snaps = synthesize_snapshots(sc, kScheme, kGeom, 32, rng);
  for (const auto& y : snaps.samples) CHECK(y.norm() == 0.0);
}

TEST_CASE("noise-only snapshots have the configured variance") {
  Scenario sc;
  sc.doas.resize(0);
  sc.source_cov.resize(0, 0);
  sc.noise_var = 4.0;
  Rng rng(8);
  const SnapshotSet snaps =
      synthesize_snapshots(sc, kScheme, kGeom, 100000, rng);
  const Eigen::MatrixXcd& y = snaps.samples[0];
  for (int w = 0; w < 3; ++w) {
    const double var = y.row(w).squaredNorm() / y.cols();
    CHECK(var == doctest::Approx(4.0).epsilon(0.03));
  }
}

TEST_CASE("snapshot second moments match the model covariance") {
  Rng rng(9);
  ScenarioRanges ranges = kRanges;
  ranges.noise_min_db = 0.0;  // keep signal and noise comparable
  ranges.noise_max_db = 0.0;
  const Scenario sc = draw_scenario(2, ranges, kUncorrelated, rng);
  const SampleCovSet covs = sample_covariances(
      synthesize_snapshots(sc, kScheme, kGeom, 100000, rng));

  const Eigen::MatrixXcd a = steering_matrix(kGeom, sc.doas);
  for (int k = 0; k < kScheme.num_subarrays(); ++k) {
    const Eigen::MatrixXcd sub_a = select_rows(kScheme, k, a);
    const Eigen::MatrixXcd expected =
        sub_a * sc.source_cov * sub_a.adjoint() +
        sc.noise_var * Eigen::MatrixXcd::Identity(3, 3);
    const double scale = expected.cwiseAbs().maxCoeff();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(std::abs(covs.covs[k](i, j) - expected(i, j)) < 0.05 * scale);
  }
}

TEST_CASE("sample covariance basics") {
  Rng rng(10);
  Scenario sc = draw_scenario(1, kRanges, kUncorrelated, rng);
  const SnapshotSet one = synthesize_snapshots(sc, kScheme, kGeom, 1, rng);
  const SampleCovSet covs1 = sample_covariances(one);
  for (int k = 0; k < 4; ++k) {
    const Eigen::MatrixXcd& r = covs1.covs[k];
    CHECK((r - r.adjoint()).norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
    int nonzero = 0;
    for (int i = 0; i < 3; ++i)
      if (es.eigenvalues()(i) > 1e-12 * es.eigenvalues().maxCoeff()) ++nonzero;
    CHECK(nonzero == 1);  // N = 1 gives a rank-one outer product
  }

  // Duplicating every snapshot leaves the average unchanged.
  SnapshotSet doubled = one;
  for (auto& y : doubled.samples) {
    Eigen::MatrixXcd twice(y.rows(), 2 * y.cols());
    twice << y, y;
    y = twice;
  }
  doubled.num_snapshots = 2 * one.num_snapshots;
  const SampleCovSet covs2 = sample_covariances(doubled);
  for (int k = 0; k < 4; ++k)
    CHECK((covs1.covs[k] - covs2.covs[k]).norm() < 1e-15);

  // All-zero snapshots give zero matrices.
  SnapshotSet zero = one;
  for (auto& y : zero.samples) y.setZero();
  for (const auto& r : sample_covariances(zero).covs) CHECK(r.norm() == 0.0);
}

TEST_CASE("sample covariances converge to the model covariance") {
  Eigen::VectorXd doas(2);
  doas << 1.0, 3.5;
  Scenario sc;
  sc.doas = doas;
  sc.source_cov = Eigen::MatrixXcd::Identity(2, 2);
  sc.noise_var = 0.5;
  const Eigen::MatrixXcd a = steering_matrix(kGeom, doas);

  double previous = std::numeric_limits<double>::infinity();
  for (int n : {10, 1000, 100000}) {
    Rng rng(77);  // one seed, growing N
    const SampleCovSet covs =
        sample_covariances(synthesize_snapshots(sc, kScheme, kGeom, n, rng));
    double err = 0.0;
    for (int k = 0; k < 4; ++k) {
      const Eigen::MatrixXcd sub_a = select_rows(kScheme, k, a);
      err += (covs.covs[k] - sub_a * sc.source_cov * sub_a.adjoint() -
              sc.noise_var * Eigen::MatrixXcd::Identity(3, 3))
                 .norm();
    }
    CHECK(err < previous);
    previous = err;
  }
}

namespace {

SampleCovSet synthetic_covs() {
  SampleCovSet covs;
  covs.num_snapshots = 10;
  for (int k = 0; k < 4; ++k) {
    Eigen::MatrixXcd x(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        x(i, j) = std::complex<double>(3.0 * i + j + 1.0 + k, j - i);
    covs.covs.push_back(hermitianize(x));
  }
  return covs;
}

}  // namespace

TEST_CASE("featurize layout") {
  SampleCovSet eye;
  eye.num_snapshots = 1;
  for (int k = 0; k < 4; ++k)
    eye.covs.push_back(Eigen::MatrixXcd::Identity(3, 3));
  const Eigen::VectorXd x = featurize(eye);
  CHECK(x.size() == 36);
  for (int k = 0; k < 4; ++k) {
    for (int i = 0; i < 3; ++i) CHECK(x(9 * k + i) == 1.0);
    for (int i = 3; i < 9; ++i) CHECK(x(9 * k + i) == 0.0);
  }
}

TEST_CASE("featurize golden vector") {
  // Hermitian part of x(i,j) = (3i + j + 1 + k) + (j - i) I has diagonal
  // 4i + 1 + k, upper real part 2(i + j + 1) / ... computed by hand:
  // H(i,j) = (2i + 2j + 2 + ... ) see below; frozen block for k = 0.
  const Eigen::VectorXd x = featurize(synthetic_covs());
  const double expected_k0[9] = {
      1.0, 5.0, 9.0,   // diagonal 4i + 1
      3.0, 5.0, 7.0,   // Re upper (i,j) = 2i + 2j + 1 - ... = (3i+j+1+3j+i+1)/2
      1.0, 2.0, 1.0};  // Im upper (i,j) = j - i
  for (int i = 0; i < 9; ++i) CHECK(x(i) == expected_k0[i]);
  // Remaining blocks shift the real entries by k.
  for (int k = 1; k < 4; ++k) {
    for (int i = 0; i < 6; ++i) CHECK(x(9 * k + i) == expected_k0[i] + k);
    for (int i = 6; i < 9; ++i) CHECK(x(9 * k + i) == expected_k0[i]);
  }
}

TEST_CASE("featurize is injective on Hermitian inputs") {
  const SampleCovSet covs = synthetic_covs();
  const Eigen::VectorXd x = featurize(covs);
  // Rebuild the matrices from the feature layout and compare exactly.
  int pos = 0;
  for (int k = 0; k < 4; ++k) {
    Eigen::MatrixXcd r(3, 3);
    for (int i = 0; i < 3; ++i) r(i, i) = x(pos++);
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        r(i, j) = x(pos++);
        r(j, i) = r(i, j);
      }
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        r(i, j) += std::complex<double>(0.0, x(pos));
        r(j, i) -= std::complex<double>(0.0, x(pos));
        ++pos;
      }
    CHECK((r - covs.covs[k]).norm() == 0.0);
  }
}

TEST_CASE("snapshot files round trip") {
  Rng rng(12);
  const Scenario sc = draw_scenario(2, kRanges, kUncorrelated, rng);
  const SnapshotSet snaps = synthesize_snapshots(sc, kScheme, kGeom, 7, rng);
  const std::string path = "snapshots_test.bin";
  write_snapshots(path, snaps);
  const SnapshotSet loaded = read_snapshots(path);
  CHECK(loaded.num_chains == snaps.num_chains);
  CHECK(loaded.num_snapshots == snaps.num_snapshots);
  REQUIRE(loaded.num_subarrays() == snaps.num_subarrays());
  for (int k = 0; k < snaps.num_subarrays(); ++k)
    CHECK((loaded.samples[k] - snaps.samples[k]).norm() == 0.0);
  std::remove(path.c_str());
}
