// SPDX-License-Identifier: Apache-2.0
#include "subdoa/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "subdoa/linalg.hpp"

namespace subdoa {

Eigen::MatrixXcd correlated_covariance(double rho,
                                       const Eigen::VectorXd& powers) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::invalid_argument("correlated_covariance: rho outside [0, 1]");
  const Eigen::Index l = powers.size();
  Eigen::MatrixXcd r(l, l);
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index j = 0; j < l; ++j)
      r(i, j) = std::sqrt(powers(i)) * std::sqrt(powers(j)) *
                std::pow(rho, std::abs(static_cast<double>(i - j)));
  return r;
}

Scenario draw_scenario(int num_sources, const ScenarioRanges& ranges,
                       const CorrelationSpec& correlation, Rng& rng) {
  if (num_sources < 0)
    throw std::invalid_argument("draw_scenario: negative source count");
  if (ranges.source_min_db > ranges.source_max_db ||
      ranges.noise_min_db > ranges.noise_max_db)
    throw std::invalid_argument("draw_scenario: dB range with min > max");

  Scenario sc;
  sc.doas.resize(num_sources);
  for (int i = 0; i < num_sources; ++i)
    sc.doas(i) = rng.uniform(0.0, ranges.field_of_view);
  std::sort(sc.doas.begin(), sc.doas.end());

  Eigen::VectorXd powers(num_sources);
  for (int i = 0; i < num_sources; ++i)
    powers(i) = std::pow(
        10.0, rng.uniform(ranges.source_min_db, ranges.source_max_db) / 10.0);
  if (num_sources > 0) {
    const auto strongest = static_cast<Eigen::Index>(
        rng.uniform_int(static_cast<std::uint64_t>(num_sources)));
    powers(strongest) = 1.0;
  }

  sc.noise_var = std::pow(
      10.0, rng.uniform(ranges.noise_min_db, ranges.noise_max_db) / 10.0);

  switch (correlation.kind) {
    case CorrelationSpec::Kind::Uncorrelated:
      sc.source_cov = powers.cast<std::complex<double>>().asDiagonal();
      break;
    case CorrelationSpec::Kind::UniformRho:
      sc.source_cov = correlated_covariance(rng.uniform(), powers);
      break;
    case CorrelationSpec::Kind::FixedRho:
      sc.source_cov = correlated_covariance(correlation.rho, powers);
      break;
  }
  return sc;
}

SnapshotSet synthesize_snapshots(const Scenario& scenario,
                                 const SubarrayScheme& scheme,
                                 const ArrayGeometry& geom, int num_snapshots,
                                 Rng& rng) {
  if (num_snapshots < 1)
    throw std::invalid_argument("synthesize_snapshots: N must be >= 1");
  const int l = scenario.num_sources();
  const int w = scheme.num_chains;
  const int k_count = scheme.num_subarrays();

  // CN(0, R_s) = R_s^{1/2} z; the eigenvalue-clipping square root stays
  // valid for rank-deficient source covariances (rho = 1).
  const Eigen::MatrixXcd cov_sqrt =
      l > 0 ? psd_sqrt(scenario.source_cov) : Eigen::MatrixXcd(0, 0);
  const Eigen::MatrixXcd a = steering_matrix(geom, scenario.doas);
  const double noise_amp = std::sqrt(scenario.noise_var);

  SnapshotSet out;
  out.num_chains = w;
  out.num_snapshots = num_snapshots;
  out.samples.reserve(k_count);
  for (int k = 0; k < k_count; ++k) {
    const Eigen::MatrixXcd sub_a = select_rows(scheme, k, a);  // W x L
    Eigen::MatrixXcd y(w, num_snapshots);
    Eigen::VectorXcd z(l);
    for (int n = 0; n < num_snapshots; ++n) {
      for (int i = 0; i < l; ++i) z(i) = rng.complex_normal();
      Eigen::VectorXcd col = l > 0 ? Eigen::VectorXcd(sub_a * (cov_sqrt * z))
                                   : Eigen::VectorXcd::Zero(w);
      for (int i = 0; i < w; ++i) col(i) += noise_amp * rng.complex_normal();
      y.col(n) = col;
    }
    out.samples.push_back(std::move(y));
  }
  return out;
}

SampleCovSet sample_covariances(const SnapshotSet& snapshots) {
  if (snapshots.num_snapshots < 1)
    throw std::invalid_argument("sample_covariances: N must be >= 1");
  SampleCovSet out;
  out.num_snapshots = snapshots.num_snapshots;
  out.covs.reserve(snapshots.samples.size());
  for (const auto& y : snapshots.samples) {
    Eigen::MatrixXcd r =
        (y * y.adjoint()) / static_cast<double>(snapshots.num_snapshots);
    out.covs.push_back(hermitianize(r));
  }
  return out;
}

Eigen::VectorXd featurize(const SampleCovSet& covs) {
  const int w = covs.num_chains();
  const int k_count = covs.num_subarrays();
  Eigen::VectorXd x(static_cast<Eigen::Index>(k_count) * w * w);
  Eigen::Index pos = 0;
  for (int k = 0; k < k_count; ++k) {
    const Eigen::MatrixXcd& r = covs.covs[k];
    for (int i = 0; i < w; ++i) x(pos++) = r(i, i).real();
    for (int i = 0; i < w; ++i)
      for (int j = i + 1; j < w; ++j) x(pos++) = r(i, j).real();
    for (int i = 0; i < w; ++i)
      for (int j = i + 1; j < w; ++j) x(pos++) = r(i, j).imag();
  }
  return x;
}

void write_snapshots(const std::string& path, const SnapshotSet& snapshots) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const std::uint32_t header[3] = {
      static_cast<std::uint32_t>(snapshots.num_subarrays()),
      static_cast<std::uint32_t>(snapshots.num_chains),
      static_cast<std::uint32_t>(snapshots.num_snapshots)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const auto& y : snapshots.samples)
    for (int n = 0; n < snapshots.num_snapshots; ++n)
      for (int w = 0; w < snapshots.num_chains; ++w) {
        const double re = y(w, n).real();
        const double im = y(w, n).imag();
        out.write(reinterpret_cast<const char*>(&re), sizeof(re));
        out.write(reinterpret_cast<const char*>(&im), sizeof(im));
      }
  if (!out) throw std::runtime_error("write failed: " + path);
}

SnapshotSet read_snapshots(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::uint32_t header[3];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw std::runtime_error("truncated snapshot file: " + path);
  SnapshotSet s;
  s.num_chains = static_cast<int>(header[1]);
  s.num_snapshots = static_cast<int>(header[2]);
  s.samples.resize(header[0]);
  for (auto& y : s.samples) {
    y.resize(s.num_chains, s.num_snapshots);
    for (int n = 0; n < s.num_snapshots; ++n)
      for (int w = 0; w < s.num_chains; ++w) {
        double re, im;
        in.read(reinterpret_cast<char*>(&re), sizeof(re));
        in.read(reinterpret_cast<char*>(&im), sizeof(im));
        y(w, n) = {re, im};
      }
  }
  if (!in) throw std::runtime_error("truncated snapshot file: " + path);
  return s;
}

}  // namespace subdoa
