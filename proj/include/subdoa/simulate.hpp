// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "subdoa/array.hpp"
#include "subdoa/rng.hpp"

namespace subdoa {

// Source-correlation model used when drawing scenarios.
struct CorrelationSpec {
  enum class Kind { Uncorrelated, UniformRho, FixedRho };
  Kind kind = Kind::Uncorrelated;
  double rho = 0.0;  // FixedRho only
};

// Generator ranges for random scenarios. Powers are relative to the strongest
// source (fixed at 1 linear). Defaults follow the simulation setup: weaker
// sources in [-9, 0] dB, noise in [-10, 30] dB.
struct ScenarioRanges {
  double source_min_db = -9.0;
  double source_max_db = 0.0;
  double noise_min_db = -10.0;
  double noise_max_db = 30.0;
  double field_of_view = kTwoPi;  // U
};

// Ground truth for one trial.
struct Scenario {
  Eigen::VectorXd doas;          // L angles, ascending in [0, 2*pi)
  Eigen::MatrixXcd source_cov;   // L x L Hermitian PSD
  double noise_var = 0.0;        // sigma_eta^2, linear

  int num_sources() const { return static_cast<int>(doas.size()); }
};

// N received W-vectors per subarray.
struct SnapshotSet {
  int num_chains = 0;     // W
  int num_snapshots = 0;  // N
  std::vector<Eigen::MatrixXcd> samples;  // per subarray: W x N

  int num_subarrays() const { return static_cast<int>(samples.size()); }
};

// The K per-subarray sample covariance matrices; common input of every
// estimator in this library.
struct SampleCovSet {
  std::vector<Eigen::MatrixXcd> covs;  // K Hermitian W x W matrices
  int num_snapshots = 0;

  int num_subarrays() const { return static_cast<int>(covs.size()); }
  int num_chains() const {
    return covs.empty() ? 0 : static_cast<int>(covs.front().rows());
  }
};

// Toeplitz correlation rho^|i-j| scaled by per-source amplitudes:
// D^{1/2} * T(rho) * D^{1/2}, D = diag(powers). rho must lie in [0, 1].
Eigen::MatrixXcd correlated_covariance(double rho,
                                       const Eigen::VectorXd& powers);

// Draws DoAs i.i.d. uniform on [0, U) (then sorted), the strongest source
// power exactly 1, weaker powers uniform in dB, noise power uniform in dB.
Scenario draw_scenario(int num_sources, const ScenarioRanges& ranges,
                       const CorrelationSpec& correlation, Rng& rng);

// y^(k)(n) = G^(k) (A(theta) s + eta), s ~ CN(0, R_s), eta ~ CN(0, s2 I).
// Source symbols are drawn fresh per (subarray, snapshot): the switching
// states are processed non-coherently.
SnapshotSet synthesize_snapshots(const Scenario& scenario,
                                 const SubarrayScheme& scheme,
                                 const ArrayGeometry& geom, int num_snapshots,
                                 Rng& rng);

// R_hat^(k) = (1/N) sum_n y y^H, explicitly Hermitian-symmetrized.
SampleCovSet sample_covariances(const SnapshotSet& snapshots);

// Stacks, per subarray, the W diagonal entries (real), then the real parts,
// then the imaginary parts of the strict upper triangle in row-major order.
// Length K * W^2.
Eigen::VectorXd featurize(const SampleCovSet& covs);

// Binary snapshot file: u32 K, W, N, then per subarray, per snapshot, per
// chain the interleaved real/imag 64-bit floats.
void write_snapshots(const std::string& path, const SnapshotSet& snapshots);
SnapshotSet read_snapshots(const std::string& path);

}  // namespace subdoa
