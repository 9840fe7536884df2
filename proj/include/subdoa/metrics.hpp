// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace subdoa {

struct PeriodicError {
  Eigen::VectorXd per_source;  // wrapped into [-pi, pi)
  double rmspe = 0.0;
  std::vector<int> permutation;  // truth[i] is paired with estimate[perm[i]]
};

// Associates truth and estimate by the permutation minimizing the summed
// squared periodic error (exhaustive, L <= 6), then reports per-source
// wrapped errors and their root mean square.
PeriodicError periodic_error(const Eigen::VectorXd& truth,
                             const Eigen::VectorXd& estimate);

// Root mean square of the floor(q * T) smallest per-trial RMSPE values.
double top_quantile_rmspe(std::vector<double> rmspe_per_trial, double q);

// Right-continuous ECDF as sorted (value, fraction <= value) points;
// duplicate values are merged.
std::vector<std::pair<double, double>> empirical_cdf(
    std::vector<double> values);

}  // namespace subdoa
