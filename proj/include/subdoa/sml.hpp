// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <ostream>
#include <vector>

#include "subdoa/array.hpp"
#include "subdoa/estimate.hpp"
#include "subdoa/simulate.hpp"

namespace subdoa {

// Lower clamp for the noise variance; keeps every model covariance positive
// definite and the log-determinant finite.
inline constexpr double kNoiseVarFloor = 1e-8;

// The stochastic-ML parameter triple (theta, R_s, sigma^2).
struct ParamVector {
  Eigen::VectorXd doas;         // L
  Eigen::MatrixXcd source_cov;  // L x L Hermitian
  double noise_var = 0.0;

  int num_sources() const { return static_cast<int>(doas.size()); }
};

// Per-subarray model covariances with cached Cholesky factors.
struct ModelCovSet {
  std::vector<Eigen::MatrixXcd> covs;
  std::vector<Eigen::LLT<Eigen::MatrixXcd>> chol;
};

// R^(k) = G^(k) A R_s A^H G^(k)T + sigma^2 I, Hermitian-symmetrized.
ModelCovSet model_covariances(const ParamVector& c,
                              const SubarrayScheme& scheme,
                              const ArrayGeometry& geom);

// L(c) = -N * sum_k [ ln det R^(k) + tr(R^(k)^-1 Rhat^(k)) ], via Cholesky.
// Throws std::runtime_error when a model covariance is singular.
double log_likelihood(const ParamVector& c, const SampleCovSet& covs,
                      const SubarrayScheme& scheme, const ArrayGeometry& geom);

struct SmlGradient {
  Eigen::VectorXd doas;          // dL/dtheta
  Eigen::MatrixXcd source_cov;   // Hermitian ascent direction for R_s
  double noise_var = 0.0;        // dL/dsigma^2
};

// Analytic gradient of log_likelihood. The source-covariance block is the
// Hermitian matrix D with dL = tr(D dR_s); its diagonal equals dL/d[R_s]_ii
// and for i < j the derivatives w.r.t. Re/Im [R_s]_ij are 2 Re D_ij and
// 2 Im D_ij.
SmlGradient gradient(const ParamVector& c, const SampleCovSet& covs,
                     const SubarrayScheme& scheme, const ArrayGeometry& geom);

// Angles wrapped into [0, 2*pi), R_s symmetrized and eigenvalue-clipped at 0,
// noise variance clamped at kNoiseVarFloor.
ParamVector project_feasible(const ParamVector& c);

struct AscentOptions {
  double step_doas = 1e-2;
  double step_source_cov = 1e-2;
  double step_noise = 1e-3;
  double tolerance = 1e-6;   // absolute log-likelihood change
  int max_iterations = 5000;
  int max_halvings = 30;
  std::ostream* trace_out = nullptr;  // CSV rows: iter, loglik, step sizes
};

struct AscentResult {
  ParamVector params;
  std::vector<double> trace;  // log-likelihood, trace[0] at the start point
  int iterations = 0;
};

// Block coordinate ascent of the hybrid estimator: per outer iteration one
// projected, backtracked gradient step in the theta block, the R_s block and
// the sigma^2 block, in that order. The likelihood trace is non-decreasing;
// terminates on the tolerance or the iteration cap.
AscentResult block_coordinate_ascent(const ParamVector& start,
                                     const SampleCovSet& covs,
                                     const SubarrayScheme& scheme,
                                     const ArrayGeometry& geom,
                                     const AscentOptions& options = {});

// Likelihood ascent initialized at the ground truth; the returned local
// maximum serves as the performance bound in the simulations.
Estimate genie_ml(const Scenario& truth, const SampleCovSet& covs,
                  const SubarrayScheme& scheme, const ArrayGeometry& geom,
                  const AscentOptions& options = {});

// Sorts doas ascending and applies the same permutation to the source
// covariance; used by every estimator that finishes with an ascent.
Estimate make_sorted_estimate(const ParamVector& c, double objective,
                              int iterations, double residual = 0.0);

}  // namespace subdoa
