// SPDX-License-Identifier: Apache-2.0
#include "subdoa/model_order.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "subdoa/train.hpp"

namespace subdoa {

int select_order(const Eigen::VectorXd& scores) {
  int best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i)
    if (scores(i) > scores(best)) best = static_cast<int>(i);
  return best;
}

double mdl_penalty(int order, int num_subarrays, int num_snapshots) {
  return 0.5 * (2.0 * order + 1.0) *
         std::log(static_cast<double>(num_subarrays) * num_snapshots);
}

namespace {

Estimate estimate_for_order(const SampleCovSet& covs, int order,
                            const SubarrayScheme& scheme,
                            const ArrayGeometry& geom,
                            const MdlOptions& options) {
  HybridOptions hybrid;
  hybrid.num_sources = order;
  hybrid.ssr_oversampling = options.ssr_oversampling;
  hybrid.gls_oversampling = options.gls_oversampling;
  hybrid.ssr_iterations = options.ssr_iterations;
  hybrid.ascent = options.ascent;
  switch (options.estimator) {
    case EstimatorKind::HybridSsr:
      hybrid.init = HybridInit::Ssr;
      return hybrid_estimate(covs, scheme, geom, hybrid);
    case EstimatorKind::HybridGls:
      hybrid.init = HybridInit::Gls;
      return hybrid_estimate(covs, scheme, geom, hybrid);
    case EstimatorKind::HybridMvdr:
      hybrid.init = HybridInit::Mvdr;
      return hybrid_estimate(covs, scheme, geom, hybrid);
    case EstimatorKind::Ssr: {
      const Dictionary dict = Dictionary::build(
          scheme, geom,
          GridSpec::make(geom.num_antennas, options.ssr_oversampling));
      return ssr_estimate(covs, order, dict, options.ssr_iterations);
    }
    case EstimatorKind::Gls:
      return gls_grid_search(
          covs, order,
          GridSpec::make(geom.num_antennas, options.gls_oversampling), scheme,
          geom);
    default:
      throw std::invalid_argument("mdl_select: unsupported plug-in estimator");
  }
}

}  // namespace

OrderSelectionResult mdl_select(const SampleCovSet& covs, int max_order,
                                const SubarrayScheme& scheme,
                                const ArrayGeometry& geom,
                                const MdlOptions& options) {
  if (max_order < 0)
    throw std::invalid_argument("mdl_select: max_order must be >= 0");
  OrderSelectionResult res;
  res.scores.resize(max_order + 1);
  res.estimates.resize(max_order + 1);

  for (int order = 0; order <= max_order; ++order) {
    double loglik;
    try {
      if (order == 0) {
        // Exact ML for the noise-only model R = s2 I.
        double trace_sum = 0.0;
        for (const auto& r : covs.covs) trace_sum += r.trace().real();
        ParamVector c;
        c.noise_var = trace_sum / (covs.num_subarrays() * covs.num_chains());
        loglik = log_likelihood(c, covs, scheme, geom);
        Estimate e;
        e.noise_var = c.noise_var;
        e.objective = loglik;
        res.estimates[order] = std::move(e);
      } else {
        Estimate e = estimate_for_order(covs, order, scheme, geom, options);
        loglik = log_likelihood(
            ParamVector{e.doas, e.source_cov, e.noise_var}, covs, scheme,
            geom);
        res.estimates[order] = std::move(e);
      }
    } catch (const std::exception& err) {
      loglik = -std::numeric_limits<double>::infinity();
      res.diagnostics.push_back("order " + std::to_string(order) +
                                " failed: " + err.what());
    }
    res.scores(order) =
        loglik - options.penalty_scale *
                     mdl_penalty(order, covs.num_subarrays(),
                                 covs.num_snapshots);
  }
  res.selected = select_order(res.scores);
  return res;
}

OrderSelectionResult covnet_select(const MlpModel& model,
                                   const SampleCovSet& covs) {
  auto [selected, posterior] = covnet_predict(model, covs);
  OrderSelectionResult res;
  res.selected = selected;
  res.scores = std::move(posterior);
  return res;
}

}  // namespace subdoa
