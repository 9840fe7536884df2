// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace subdoa {

struct NnlsResult {
  Eigen::VectorXd x;        // minimizer, x >= 0
  double residual = 0.0;    // ||A x - b||^2 at the minimizer
  int iterations = 0;
};

// min ||A x - b||^2 subject to x >= 0, Lawson-Hanson active set.
// Throws std::invalid_argument when A is all-zero (degenerate basis).
NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

}  // namespace subdoa
