// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace subdoa {

// Result of any DoA estimator.
struct Estimate {
  Eigen::VectorXd doas;          // ascending in [0, 2*pi)
  Eigen::MatrixXcd source_cov;   // PSD
  double noise_var = 0.0;
  double objective = 0.0;        // method-specific (likelihood, residual, ...)
  int iterations = 0;
  double residual = 0.0;
};

enum class EstimatorKind {
  Ssr,
  HybridSsr,
  Gls,
  HybridGls,
  Mvdr,
  HybridMvdr,
  Mcenet,
  HybridMcenet,
  GenieMl,
};

std::string estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

}  // namespace subdoa
