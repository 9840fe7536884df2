// SPDX-License-Identifier: Apache-2.0
//
// Test-side oracles, independent of the library's implementation paths.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "subdoa/rng.hpp"
#include "subdoa/simulate.hpp"
#include "subdoa/sml.hpp"

namespace subdoa::testing {

// Random Hermitian PSD matrix with a diagonal offset.
inline Eigen::MatrixXcd random_psd(int n, Rng& rng, double ridge = 0.1) {
  Eigen::MatrixXcd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = rng.complex_normal();
  return b * b.adjoint() / n + ridge * Eigen::MatrixXcd::Identity(n, n);
}

// Random feasible SML parameter point.
inline ParamVector random_params(int num_sources, Rng& rng) {
  ParamVector c;
  c.doas.resize(num_sources);
  for (int i = 0; i < num_sources; ++i) c.doas(i) = rng.uniform(0.0, kTwoPi);
  c.source_cov = random_psd(num_sources, rng, 0.05);
  c.noise_var = rng.uniform(0.1, 3.0);
  return c;
}

// Random sample covariance set (PSD, not tied to any scenario).
inline SampleCovSet random_covs(int num_subarrays, int num_chains,
                                int num_snapshots, Rng& rng) {
  SampleCovSet covs;
  covs.num_snapshots = num_snapshots;
  for (int k = 0; k < num_subarrays; ++k)
    covs.covs.push_back(random_psd(num_chains, rng));
  return covs;
}

// Central finite differences of the log-likelihood for every real parameter
// of c; returns the flattened gradient in the order (theta, Rs diagonal,
// Rs upper Re, Rs upper Im, noise_var).
struct FlatGradient {
  Eigen::VectorXd values;
  std::vector<std::string> names;
};

template <typename Eval>
FlatGradient fd_gradient(const ParamVector& c, Eval&& eval, double step_doas,
                         double step_other) {
  const int l = c.num_sources();
  FlatGradient out;
  std::vector<double> values;

  auto central = [&](auto&& apply, double h) {
    ParamVector plus = c, minus = c;
    apply(plus, h);
    apply(minus, -h);
    return (eval(plus) - eval(minus)) / (2.0 * h);
  };

  for (int i = 0; i < l; ++i) {
    values.push_back(central(
        [i](ParamVector& p, double h) { p.doas(i) += h; }, step_doas));
    out.names.push_back("theta" + std::to_string(i));
  }
  for (int i = 0; i < l; ++i) {
    values.push_back(central(
        [i](ParamVector& p, double h) { p.source_cov(i, i) += h; },
        step_other));
    out.names.push_back("rs_diag" + std::to_string(i));
  }
  for (int i = 0; i < l; ++i)
    for (int j = i + 1; j < l; ++j) {
      values.push_back(central(
          [i, j](ParamVector& p, double h) {
            p.source_cov(i, j) += h;
            p.source_cov(j, i) += h;
          },
          step_other));
      out.names.push_back("rs_re");
      values.push_back(central(
          [i, j](ParamVector& p, double h) {
            p.source_cov(i, j) += std::complex<double>(0.0, h);
            p.source_cov(j, i) -= std::complex<double>(0.0, h);
          },
          step_other));
      out.names.push_back("rs_im");
    }
  values.push_back(central(
      [](ParamVector& p, double h) { p.noise_var += h; }, step_other));
  out.names.push_back("noise_var");

  out.values = Eigen::Map<Eigen::VectorXd>(values.data(), values.size());
  return out;
}

// The analytic gradient flattened in the same order as fd_gradient.
inline Eigen::VectorXd flatten_gradient(const SmlGradient& g) {
  const int l = static_cast<int>(g.doas.size());
  std::vector<double> values;
  for (int i = 0; i < l; ++i) values.push_back(g.doas(i));
  for (int i = 0; i < l; ++i) values.push_back(g.source_cov(i, i).real());
  for (int i = 0; i < l; ++i)
    for (int j = i + 1; j < l; ++j) {
      values.push_back(2.0 * g.source_cov(i, j).real());
      values.push_back(2.0 * g.source_cov(i, j).imag());
    }
  values.push_back(g.noise_var);
  return Eigen::Map<Eigen::VectorXd>(values.data(), values.size());
}

// Exact model covariances packaged as a SampleCovSet ("exact-covariance"
// trials with an effective snapshot count).
inline SampleCovSet exact_covs(const Scenario& sc, const SubarrayScheme& scheme,
                               const ArrayGeometry& geom, int effective_n) {
  ParamVector c{sc.doas, sc.source_cov, sc.noise_var};
  SampleCovSet covs;
  covs.num_snapshots = effective_n;
  covs.covs = model_covariances(c, scheme, geom).covs;
  return covs;
}

}  // namespace subdoa::testing
