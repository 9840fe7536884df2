// SPDX-License-Identifier: Apache-2.0
#include "subdoa/estimate.hpp"

namespace subdoa {

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Ssr: return "ssr";
    case EstimatorKind::HybridSsr: return "hybrid-ssr";
    case EstimatorKind::Gls: return "gls";
    case EstimatorKind::HybridGls: return "hybrid-gls";
    case EstimatorKind::Mvdr: return "mvdr";
    case EstimatorKind::HybridMvdr: return "hybrid-mvdr";
    case EstimatorKind::Mcenet: return "mcenet";
    case EstimatorKind::HybridMcenet: return "hybrid-mcenet";
    case EstimatorKind::GenieMl: return "genie-ml";
  }
  throw std::invalid_argument("unknown estimator kind");
}

EstimatorKind estimator_from_name(const std::string& name) {
  for (EstimatorKind kind :
       {EstimatorKind::Ssr, EstimatorKind::HybridSsr, EstimatorKind::Gls,
        EstimatorKind::HybridGls, EstimatorKind::Mvdr, EstimatorKind::HybridMvdr,
        EstimatorKind::Mcenet, EstimatorKind::HybridMcenet,
        EstimatorKind::GenieMl})
    if (estimator_name(kind) == name) return kind;
  throw std::invalid_argument("unknown estimator name: " + name);
}

}  // namespace subdoa
