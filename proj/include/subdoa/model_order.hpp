// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "subdoa/estimators.hpp"
#include "subdoa/mlp.hpp"

namespace subdoa {

struct OrderSelectionResult {
  int selected = 0;
  Eigen::VectorXd scores;  // per order 0..L_max: IC value or posterior
  std::vector<std::optional<Estimate>> estimates;  // IC path only
  std::vector<std::string> diagnostics;
};

// argmax with ties resolved to the smaller order.
int select_order(const Eigen::VectorXd& scores);

// MDL penalty ((2l + 1)/2) ln(KN) for the uncorrelated-source model.
double mdl_penalty(int order, int num_subarrays, int num_snapshots);

struct MdlOptions {
  EstimatorKind estimator = EstimatorKind::HybridSsr;
  int ssr_oversampling = 32;
  int gls_oversampling = 8;
  int ssr_iterations = 10000;
  AscentOptions ascent;
  double penalty_scale = 1.0;  // 0 reduces selection to max likelihood
};

// Information-criterion selection: per order, the N-scaled log-likelihood at
// the plug-in estimate minus the MDL penalty. Order 0 uses the closed-form
// noise-only fit s2 = sum_k tr(Rhat)/(KW). Estimator failures score -inf and
// are recorded in diagnostics.
OrderSelectionResult mdl_select(const SampleCovSet& covs, int max_order,
                                const SubarrayScheme& scheme,
                                const ArrayGeometry& geom,
                                const MdlOptions& options = {});

// Wraps covnet_predict; the posterior vector becomes the score vector.
OrderSelectionResult covnet_select(const MlpModel& model,
                                   const SampleCovSet& covs);

}  // namespace subdoa
