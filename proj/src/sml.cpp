// SPDX-License-Identifier: Apache-2.0
#include "subdoa/sml.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "subdoa/linalg.hpp"

namespace subdoa {

namespace {

Eigen::MatrixXcd identity_c(int n) { return Eigen::MatrixXcd::Identity(n, n); }

}  // namespace

ModelCovSet model_covariances(const ParamVector& c,
                              const SubarrayScheme& scheme,
                              const ArrayGeometry& geom) {
  const int w = scheme.num_chains;
  const int k_count = scheme.num_subarrays();
  const Eigen::MatrixXcd a = steering_matrix(geom, c.doas);

  ModelCovSet out;
  out.covs.reserve(k_count);
  out.chol.reserve(k_count);
  for (int k = 0; k < k_count; ++k) {
    Eigen::MatrixXcd r = c.noise_var * identity_c(w);
    if (c.num_sources() > 0) {
      const Eigen::MatrixXcd sub_a = select_rows(scheme, k, a);
      r += sub_a * c.source_cov * sub_a.adjoint();
    }
    out.covs.push_back(hermitianize(r));
    out.chol.emplace_back(out.covs.back());
  }
  return out;
}

double log_likelihood(const ParamVector& c, const SampleCovSet& covs,
                      const SubarrayScheme& scheme, const ArrayGeometry& geom) {
  const ModelCovSet model = model_covariances(c, scheme, geom);
  const double n = static_cast<double>(covs.num_snapshots);
  double acc = 0.0;
  for (int k = 0; k < covs.num_subarrays(); ++k) {
    const auto& llt = model.chol[k];
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("log_likelihood: singular model covariance");
    double logdet = 0.0;
    const auto& factor = llt.matrixLLT();
    for (Eigen::Index i = 0; i < factor.rows(); ++i)
      logdet += 2.0 * std::log(factor(i, i).real());
    const double fit = llt.solve(covs.covs[k]).trace().real();
    acc += logdet + fit;
  }
  return -n * acc;
}

SmlGradient gradient(const ParamVector& c, const SampleCovSet& covs,
                     const SubarrayScheme& scheme, const ArrayGeometry& geom) {
  const int l = c.num_sources();
  const int w = scheme.num_chains;
  const double n = static_cast<double>(covs.num_snapshots);
  const ModelCovSet model = model_covariances(c, scheme, geom);

  const Eigen::MatrixXcd a = steering_matrix(geom, c.doas);
  Eigen::MatrixXcd deriv(geom.num_antennas, l);
  for (int i = 0; i < l; ++i)
    deriv.col(i) = steering_derivative(geom, c.doas(i));

  SmlGradient g;
  g.doas = Eigen::VectorXd::Zero(l);
  g.source_cov = Eigen::MatrixXcd::Zero(l, l);
  g.noise_var = 0.0;

  for (int k = 0; k < covs.num_subarrays(); ++k) {
    const auto& llt = model.chol[k];
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("gradient: singular model covariance");
    const Eigen::MatrixXcd rinv = llt.solve(identity_c(w));
    // dL/dR^(k) = -N (R^-1 - R^-1 Rhat R^-1), Hermitian.
    const Eigen::MatrixXcd m =
        hermitianize(-n * (rinv - rinv * covs.covs[k] * rinv));
    g.noise_var += m.trace().real();
    if (l == 0) continue;

    const Eigen::MatrixXcd sub_a = select_rows(scheme, k, a);  // W x L
    const Eigen::MatrixXcd sub_d = select_rows(scheme, k, deriv);
    // dR/dtheta_l = u v^H + v u^H with u = G A R_s e_l, v = G da/dtheta_l.
    const Eigen::MatrixXcd u = sub_a * c.source_cov;  // W x L, col l = u_l
    const Eigen::MatrixXcd mu = m * u;
    for (int i = 0; i < l; ++i)
      g.doas(i) += 2.0 * (sub_d.col(i).adjoint() * mu.col(i))(0, 0).real();
    // dL = tr(D dR_s) with D = sum_k (G A)^H M (G A).
    g.source_cov += sub_a.adjoint() * m * sub_a;
  }
  if (l > 0) g.source_cov = hermitianize(g.source_cov);
  return g;
}

ParamVector project_feasible(const ParamVector& c) {
  ParamVector out = c;
  for (Eigen::Index i = 0; i < out.doas.size(); ++i)
    out.doas(i) = wrap_2pi(out.doas(i));
  if (out.num_sources() > 0) out.source_cov = psd_project(out.source_cov);
  out.noise_var = std::max(out.noise_var, kNoiseVarFloor);
  return out;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_likelihood(const ParamVector& c, const SampleCovSet& covs,
                       const SubarrayScheme& scheme,
                       const ArrayGeometry& geom) {
  try {
    return log_likelihood(c, covs, scheme, geom);
  } catch (const std::runtime_error&) {
    return kNegInf;
  }
}

// One projected gradient step with backtracking: halves the step until the
// likelihood does not decrease. On clean (un-halved) acceptance the stored
// step doubles for the next iteration. The first proposal is clamped so the
// block moves at most max_move; the ascent should settle into the local
// maximum nearest the start, not hop basins on a steep gradient.
template <typename Apply>
void step_block(ParamVector& c, double& current, double& step, int max_halvings,
                double gradient_norm, double max_move, const SampleCovSet& covs,
                const SubarrayScheme& scheme, const ArrayGeometry& geom,
                Apply&& apply) {
  double s = step;
  bool clamped = false;
  if (gradient_norm * s > max_move) {
    s = max_move / gradient_norm;
    clamped = true;
  }
  for (int h = 0; h <= max_halvings; ++h, s *= 0.5) {
    ParamVector trial = c;
    apply(trial, s);
    trial = project_feasible(trial);
    const double value = safe_likelihood(trial, covs, scheme, geom);
    if (value >= current) {
      c = std::move(trial);
      current = value;
      step = (h == 0 && !clamped) ? 2.0 * s : s;
      return;
    }
  }
  // No acceptable step; leave the block unchanged this iteration.
}

}  // namespace

AscentResult block_coordinate_ascent(const ParamVector& start,
                                     const SampleCovSet& covs,
                                     const SubarrayScheme& scheme,
                                     const ArrayGeometry& geom,
                                     const AscentOptions& options) {
  AscentResult res;
  ParamVector c = project_feasible(start);
  double current = log_likelihood(c, covs, scheme, geom);
  res.trace.push_back(current);

  double step_doas = options.step_doas;
  double step_cov = options.step_source_cov;
  double step_noise = options.step_noise;
  const int l = c.num_sources();

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const double previous = current;
    if (l > 0) {
      const Eigen::VectorXd g = gradient(c, covs, scheme, geom).doas;
      step_block(c, current, step_doas, options.max_halvings,
                 g.lpNorm<Eigen::Infinity>(), 0.5, covs, scheme, geom,
                 [&](ParamVector& t, double s) { t.doas += s * g; });
      const Eigen::MatrixXcd d = gradient(c, covs, scheme, geom).source_cov;
      step_block(c, current, step_cov, options.max_halvings, d.norm(),
                 0.5 * (c.source_cov.norm() + 1e-3), covs, scheme, geom,
                 [&](ParamVector& t, double s) { t.source_cov += s * d; });
    }
    const double gn = gradient(c, covs, scheme, geom).noise_var;
    step_block(c, current, step_noise, options.max_halvings, std::abs(gn),
               0.5 * (c.noise_var + 1e-3), covs, scheme, geom,
               [&](ParamVector& t, double s) { t.noise_var += s * gn; });

    res.trace.push_back(current);
    res.iterations = iter;
    if (options.trace_out)
      *options.trace_out << iter << ',' << current << ',' << step_doas << ','
                         << step_cov << ',' << step_noise << '\n';
    if (current - previous < options.tolerance) break;
  }
  res.params = std::move(c);
  return res;
}

Estimate make_sorted_estimate(const ParamVector& c, double objective,
                              int iterations, double residual) {
  const int l = c.num_sources();
  Eigen::VectorXd wrapped(l);
  for (int i = 0; i < l; ++i) wrapped(i) = wrap_2pi(c.doas(i));
  std::vector<int> perm(l);
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(),
            [&](int i, int j) { return wrapped(i) < wrapped(j); });

  Estimate e;
  e.doas.resize(l);
  e.source_cov.resize(l, l);
  for (int i = 0; i < l; ++i) {
    e.doas(i) = wrapped(perm[i]);
    for (int j = 0; j < l; ++j)
      e.source_cov(i, j) = c.source_cov(perm[i], perm[j]);
  }
  e.noise_var = c.noise_var;
  e.objective = objective;
  e.iterations = iterations;
  e.residual = residual;
  return e;
}

Estimate genie_ml(const Scenario& truth, const SampleCovSet& covs,
                  const SubarrayScheme& scheme, const ArrayGeometry& geom,
                  const AscentOptions& options) {
  if (covs.num_chains() != scheme.num_chains ||
      covs.num_subarrays() != scheme.num_subarrays())
    throw std::invalid_argument("genie_ml: inconsistent dimensions");
  ParamVector c0{truth.doas, truth.source_cov, truth.noise_var};
  AscentResult res = block_coordinate_ascent(c0, covs, scheme, geom, options);
  return make_sorted_estimate(res.params, res.trace.back(), res.iterations);
}

}  // namespace subdoa
