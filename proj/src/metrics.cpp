// SPDX-License-Identifier: Apache-2.0
#include "subdoa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "subdoa/linalg.hpp"

namespace subdoa {

PeriodicError periodic_error(const Eigen::VectorXd& truth,
                             const Eigen::VectorXd& estimate) {
  if (truth.size() != estimate.size())
    throw std::invalid_argument("periodic_error: length mismatch");
  const int l = static_cast<int>(truth.size());
  if (l > 6)
    throw std::invalid_argument("periodic_error: L > 6 not supported");

  std::vector<int> perm(l);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_sq = std::numeric_limits<double>::infinity();
  do {
    double sq = 0.0;
    for (int i = 0; i < l; ++i) {
      const double e = wrap_pi(truth(i) - estimate(perm[i]));
      sq += e * e;
    }
    if (sq < best_sq) {
      best_sq = sq;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  PeriodicError out;
  out.permutation = best;
  out.per_source.resize(l);
  for (int i = 0; i < l; ++i)
    out.per_source(i) = wrap_pi(truth(i) - estimate(best[i]));
  out.rmspe = l > 0 ? std::sqrt(best_sq / l) : 0.0;
  return out;
}

double top_quantile_rmspe(std::vector<double> rmspe_per_trial, double q) {
  if (rmspe_per_trial.empty())
    throw std::invalid_argument("top_quantile_rmspe: empty input");
  if (!(q > 0.0 && q <= 1.0))
    throw std::invalid_argument("top_quantile_rmspe: q outside (0, 1]");
  const auto keep = static_cast<std::size_t>(
      std::floor(q * static_cast<double>(rmspe_per_trial.size())));
  if (keep == 0)
    throw std::invalid_argument("top_quantile_rmspe: quantile keeps no trials");
  std::sort(rmspe_per_trial.begin(), rmspe_per_trial.end());
  double sq = 0.0;
  for (std::size_t i = 0; i < keep; ++i)
    sq += rmspe_per_trial[i] * rmspe_per_trial[i];
  return std::sqrt(sq / static_cast<double>(keep));
}

std::vector<std::pair<double, double>> empirical_cdf(
    std::vector<double> values) {
  if (values.empty())
    throw std::invalid_argument("empirical_cdf: empty input");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  std::vector<std::pair<double, double>> points;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double fraction = static_cast<double>(i + 1) / n;
    if (!points.empty() && points.back().first == values[i])
      points.back().second = fraction;
    else
      points.emplace_back(values[i], fraction);
  }
  return points;
}

}  // namespace subdoa
