// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "subdoa/array.hpp"
#include "subdoa/estimate.hpp"
#include "subdoa/simulate.hpp"
#include "subdoa/sml.hpp"

namespace subdoa {

// Equidistant angular grid of Q = oversampling * M points on [0, 2*pi).
struct GridSpec {
  int oversampling = 32;
  Eigen::VectorXd angles;

  int size() const { return static_cast<int>(angles.size()); }
  static GridSpec make(int num_antennas, int oversampling);
};

// Per-subarray dictionaries of subarray steering vectors at the grid points.
struct Dictionary {
  Eigen::VectorXd angles;               // Q
  std::vector<Eigen::MatrixXcd> atoms;  // per k: W x Q, column g = G^(k) a(g)

  int size() const { return static_cast<int>(angles.size()); }
  static Dictionary build(const SubarrayScheme& scheme,
                          const ArrayGeometry& geom, const GridSpec& grid);
};

struct GlsFit {
  Eigen::VectorXd powers;  // L, non-negative
  double noise_var = 0.0;
  double residual = 0.0;   // whitened squared Frobenius misfit
};

// Covariance fit at fixed angles: minimizes
//   sum_k || T^(k) (Rhat - sum_l p_l G a_l a_l^H G^T - s2 I) T^(k)H ||_F^2
// over p >= 0, s2 >= 0, with whitening T^(k) = Rhat^(k)^{-1/2}
// (eigenvalues floored at 1e-10 of the maximum). Non-negative least squares
// on the real-vectorized whitened basis.
GlsFit gls_inner_fit(const Eigen::VectorXd& doas, const SampleCovSet& covs,
                     const SubarrayScheme& scheme, const ArrayGeometry& geom);

// Exhaustive search of gls_inner_fit over all L-combinations of grid angles.
// Refuses more than 1e6 combinations.
Estimate gls_grid_search(const SampleCovSet& covs, int num_sources,
                         const GridSpec& grid, const SubarrayScheme& scheme,
                         const ArrayGeometry& geom);

struct SsrWeights {
  Eigen::VectorXd grid;  // w_g
  double noise = 0.0;    // w_bar
};

// w_g = 1/(KW) sum_k a^H G^T Rhat^-1 G a,  w_bar = 1/(KW) sum_k tr(Rhat^-1).
SsrWeights ssr_weights(const SampleCovSet& covs, const Dictionary& dict);

struct SsrResult {
  Eigen::VectorXd powers;  // Q, non-negative
  double noise_var = 0.0;
  std::vector<double> objective_trace;   // sum_k tr(Rcheck^-1 Rhat) per iter
  std::vector<double> constraint_trace;  // sum_g w_g p_g + w_bar s2 per iter
};

// Alternating multiplicative updates of the sparse covariance-fitting
// program; the constraint sum_g w_g p_g + w_bar s2 = 1 is preserved exactly
// by the normalizer in every iteration.
SsrResult ssr_alternating(const SampleCovSet& covs, const Dictionary& dict,
                          int iterations = 10000);

// Top-L circular local maxima (strictly larger than both neighbors), sorted
// by height; falls back to the largest remaining entries when fewer than L
// local maxima exist. Returned indices ascend.
std::vector<int> ssr_peak_indices(const Eigen::VectorXd& powers,
                                  int num_sources);
Eigen::VectorXd ssr_peak_pick(const Eigen::VectorXd& powers,
                              const Eigen::VectorXd& grid_angles,
                              int num_sources);

// Plain SSR estimate: alternating updates plus peak picking. The source
// covariance is the diagonal of grid powers at the picked peaks.
Estimate ssr_estimate(const SampleCovSet& covs, int num_sources,
                      const Dictionary& dict, int iterations = 10000);

// spectrum(theta) = 1 / sum_k a^H G^T Rhat^-1 G a on the grid; diagonal
// loading 1e-6 tr(Rhat)/W is added before inversion when N < W.
Estimate mvdr_estimate(const SampleCovSet& covs, int num_sources,
                       const Dictionary& dict);

enum class HybridInit { Ssr, Gls, Mvdr, External };

struct HybridOptions {
  HybridInit init = HybridInit::Ssr;
  int num_sources = 3;
  int ssr_oversampling = 32;
  int gls_oversampling = 8;
  int mvdr_oversampling = 32;
  int ssr_iterations = 10000;
  AscentOptions ascent;
  Eigen::VectorXd external_doas;  // HybridInit::External (e.g. a NN output)
};

// Two-stage estimator: initializer, nuisance fit when the initializer yields
// angles only, then block coordinate ascent on the SML likelihood.
Estimate hybrid_estimate(const SampleCovSet& covs, const SubarrayScheme& scheme,
                         const ArrayGeometry& geom,
                         const HybridOptions& options);

}  // namespace subdoa
