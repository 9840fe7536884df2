// SPDX-License-Identifier: Apache-2.0
#include "subdoa/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "subdoa/linalg.hpp"
#include "subdoa/nnls.hpp"

namespace subdoa {

GridSpec GridSpec::make(int num_antennas, int oversampling) {
  if (num_antennas <= 0 || oversampling <= 0)
    throw std::invalid_argument("GridSpec: M and oversampling must be positive");
  GridSpec g;
  g.oversampling = oversampling;
  const int q = num_antennas * oversampling;
  g.angles.resize(q);
  for (int i = 0; i < q; ++i) g.angles(i) = kTwoPi * i / q;
  return g;
}

Dictionary Dictionary::build(const SubarrayScheme& scheme,
                             const ArrayGeometry& geom, const GridSpec& grid) {
  Dictionary d;
  d.angles = grid.angles;
  d.atoms.reserve(scheme.num_subarrays());
  for (int k = 0; k < scheme.num_subarrays(); ++k) {
    Eigen::MatrixXcd atoms(scheme.num_chains, grid.size());
    for (int g = 0; g < grid.size(); ++g)
      atoms.col(g) =
          select_rows(scheme, k, steering_vector(geom, grid.angles(g)));
    d.atoms.push_back(std::move(atoms));
  }
  return d;
}

namespace {

constexpr double kWhiteningFloor = 1e-10;

// Real vectorization of a Hermitian W x W matrix into 2 W^2 entries
// (real parts column-major, then imaginary parts); the Euclidean norm of the
// result equals the Frobenius norm of the matrix.
void vec_real_into(const Eigen::MatrixXcd& m, Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index sz = m.size();
  out.head(sz) = Eigen::Map<const Eigen::VectorXcd>(m.data(), sz).real();
  out.tail(sz) = Eigen::Map<const Eigen::VectorXcd>(m.data(), sz).imag();
}

struct WhitenedProblem {
  std::vector<Eigen::MatrixXcd> whitener;  // T^(k)
  Eigen::VectorXd target;                  // stacked vec of T Rhat T^H
  Eigen::VectorXd noise_column;            // stacked vec of T T^H
  int block = 0;                           // rows per subarray (2 W^2)
};

WhitenedProblem whitened_problem(const SampleCovSet& covs) {
  const int w = covs.num_chains();
  const int k_count = covs.num_subarrays();
  WhitenedProblem p;
  p.block = 2 * w * w;
  p.target.resize(static_cast<Eigen::Index>(k_count) * p.block);
  p.noise_column.resize(p.target.size());
  p.whitener.reserve(k_count);
  for (int k = 0; k < k_count; ++k) {
    Eigen::MatrixXcd t = inv_sqrt_floored(covs.covs[k], kWhiteningFloor);
    vec_real_into(t * covs.covs[k] * t.adjoint(),
                  p.target.segment(k * p.block, p.block));
    vec_real_into(t * t.adjoint(), p.noise_column.segment(k * p.block, p.block));
    p.whitener.push_back(std::move(t));
  }
  return p;
}

// Whitened rank-one basis column for one angle.
void source_column(const WhitenedProblem& p, const SampleCovSet& covs,
                   const SubarrayScheme& scheme, const ArrayGeometry& geom,
                   double angle, Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::VectorXcd a = steering_vector(geom, angle);
  for (int k = 0; k < covs.num_subarrays(); ++k) {
    const Eigen::VectorXcd ta = p.whitener[k] * select_rows(scheme, k, a);
    vec_real_into(ta * ta.adjoint(), out.segment(k * p.block, p.block));
  }
}

GlsFit fit_from_columns(const Eigen::MatrixXd& basis,
                        const Eigen::VectorXd& target, int num_sources) {
  const NnlsResult sol = nnls(basis, target);
  GlsFit fit;
  fit.powers = sol.x.head(num_sources);
  fit.noise_var = sol.x(num_sources);
  fit.residual = sol.residual;
  return fit;
}

}  // namespace

GlsFit gls_inner_fit(const Eigen::VectorXd& doas, const SampleCovSet& covs,
                     const SubarrayScheme& scheme, const ArrayGeometry& geom) {
  const int l = static_cast<int>(doas.size());
  const WhitenedProblem p = whitened_problem(covs);
  Eigen::MatrixXd basis(p.target.size(), l + 1);
  for (int i = 0; i < l; ++i)
    source_column(p, covs, scheme, geom, doas(i), basis.col(i));
  basis.col(l) = p.noise_column;
  return fit_from_columns(basis, p.target, l);
}

Estimate gls_grid_search(const SampleCovSet& covs, int num_sources,
                         const GridSpec& grid, const SubarrayScheme& scheme,
                         const ArrayGeometry& geom) {
  if (num_sources < 1)
    throw std::invalid_argument("gls_grid_search: L must be >= 1");
  const int q = grid.size();
  double combos = 1.0;
  for (int i = 0; i < num_sources; ++i)
    combos *= static_cast<double>(q - i) / (i + 1);
  if (combos > 1e6)
    throw std::invalid_argument(
        "gls_grid_search: combination budget exceeded, use a coarser grid");

  const WhitenedProblem p = whitened_problem(covs);
  Eigen::MatrixXd columns(p.target.size(), q);
  for (int g = 0; g < q; ++g)
    source_column(p, covs, scheme, geom, grid.angles(g), columns.col(g));

  std::vector<int> idx(num_sources);
  for (int i = 0; i < num_sources; ++i) idx[i] = i;

  Eigen::MatrixXd basis(p.target.size(), num_sources + 1);
  basis.col(num_sources) = p.noise_column;

  double best_residual = std::numeric_limits<double>::infinity();
  std::vector<int> best_idx;
  GlsFit best_fit;
  for (;;) {
    for (int i = 0; i < num_sources; ++i) basis.col(i) = columns.col(idx[i]);
    GlsFit fit = fit_from_columns(basis, p.target, num_sources);
    // Strict comparison keeps the lexicographically smallest tuple on ties.
    if (fit.residual < best_residual) {
      best_residual = fit.residual;
      best_idx = idx;
      best_fit = std::move(fit);
    }
    int i = num_sources - 1;
    while (i >= 0 && idx[i] == q - num_sources + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < num_sources; ++j) idx[j] = idx[j - 1] + 1;
  }

  Estimate e;
  e.doas.resize(num_sources);
  for (int i = 0; i < num_sources; ++i) e.doas(i) = grid.angles(best_idx[i]);
  e.source_cov = best_fit.powers.cast<std::complex<double>>().asDiagonal();
  e.noise_var = best_fit.noise_var;
  e.residual = best_residual;
  e.objective = best_residual;
  return e;
}

SsrWeights ssr_weights(const SampleCovSet& covs, const Dictionary& dict) {
  const int w = covs.num_chains();
  const int k_count = covs.num_subarrays();
  const double scale = 1.0 / (k_count * w);
  SsrWeights weights;
  weights.grid = Eigen::VectorXd::Zero(dict.size());
  weights.noise = 0.0;
  for (int k = 0; k < k_count; ++k) {
    const Eigen::MatrixXcd rinv = inv_floored(covs.covs[k], kWhiteningFloor);
    weights.grid +=
        (dict.atoms[k].conjugate().cwiseProduct(rinv * dict.atoms[k]))
            .colwise()
            .sum()
            .real()
            .transpose();
    weights.noise += rinv.trace().real();
  }
  weights.grid *= scale;
  weights.noise *= scale;
  if (weights.grid.minCoeff() <= 0.0 || weights.noise <= 0.0)
    throw std::runtime_error("ssr_weights: non-positive weight");
  return weights;
}

SsrResult ssr_alternating(const SampleCovSet& covs, const Dictionary& dict,
                          int iterations) {
  if (iterations < 1)
    throw std::invalid_argument("ssr_alternating: iterations must be >= 1");
  const int w = covs.num_chains();
  const int k_count = covs.num_subarrays();
  const int q = dict.size();
  const SsrWeights weights = ssr_weights(covs, dict);
  const Eigen::VectorXd w_sqrt = weights.grid.cwiseSqrt();
  const double wbar_sqrt = std::sqrt(weights.noise);

  std::vector<Eigen::MatrixXcd> cov_sqrt;
  cov_sqrt.reserve(k_count);
  for (int k = 0; k < k_count; ++k) cov_sqrt.push_back(psd_sqrt(covs.covs[k]));

  SsrResult res;
  // Constraint-feasible start: the noise term takes half the budget and the
  // grid powers split the other half uniformly.
  res.powers = Eigen::VectorXd::Constant(q, 0.5 / weights.grid.sum());
  res.noise_var = 0.5 / weights.noise;
  res.objective_trace.reserve(iterations);

  Eigen::VectorXd response_sq(q);
  for (int it = 0; it < iterations; ++it) {
    response_sq.setZero();
    double noise_response_sq = 0.0;
    double objective = 0.0;
    for (int k = 0; k < k_count; ++k) {
      const Eigen::MatrixXcd model =
          hermitianize((dict.atoms[k] * res.powers.asDiagonal()) *
                           dict.atoms[k].adjoint() +
                       res.noise_var * Eigen::MatrixXcd::Identity(w, w));
      const Eigen::LLT<Eigen::MatrixXcd> llt(model);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("ssr_alternating: singular model covariance");
      objective += llt.solve(covs.covs[k]).trace().real();
      const Eigen::MatrixXcd c = llt.solve(cov_sqrt[k]);  // Rcheck^-1 Rhat^1/2
      response_sq += (dict.atoms[k].adjoint() * c).rowwise().squaredNorm();
      noise_response_sq += c.squaredNorm();
    }
    const Eigen::VectorXd response = response_sq.cwiseSqrt();
    const double noise_response = std::sqrt(noise_response_sq);

    const double xi = (w_sqrt.cwiseProduct(res.powers.cwiseProduct(response)))
                          .sum() +
                      wbar_sqrt * res.noise_var * noise_response;
    if (!(xi > 0.0))
      throw std::runtime_error("ssr_alternating: degenerate normalizer");
    res.powers = res.powers.cwiseProduct(response.cwiseQuotient(w_sqrt)) / xi;
    res.noise_var *= noise_response / (wbar_sqrt * xi);
    res.objective_trace.push_back(objective);
    res.constraint_trace.push_back(weights.grid.dot(res.powers) +
                                   weights.noise * res.noise_var);
  }
  return res;
}

std::vector<int> ssr_peak_indices(const Eigen::VectorXd& powers,
                                  int num_sources) {
  const int q = static_cast<int>(powers.size());
  if (num_sources > q)
    throw std::invalid_argument("ssr_peak_indices: more sources than grid points");
  std::vector<int> peaks;
  for (int g = 0; g < q; ++g) {
    const double prev = powers((g + q - 1) % q);
    const double next = powers((g + 1) % q);
    if (powers(g) > prev && powers(g) > next) peaks.push_back(g);
  }
  auto by_height = [&](int a, int b) {
    return powers(a) != powers(b) ? powers(a) > powers(b) : a < b;
  };
  std::sort(peaks.begin(), peaks.end(), by_height);

  std::vector<int> chosen(peaks.begin(),
                          peaks.begin() + std::min<std::size_t>(
                                              peaks.size(), num_sources));
  if (static_cast<int>(chosen.size()) < num_sources) {
    std::vector<bool> used(q, false);
    for (int g : chosen) used[g] = true;
    std::vector<int> rest;
    for (int g = 0; g < q; ++g)
      if (!used[g]) rest.push_back(g);
    std::sort(rest.begin(), rest.end(), by_height);
    for (int g : rest) {
      if (static_cast<int>(chosen.size()) == num_sources) break;
      chosen.push_back(g);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

Eigen::VectorXd ssr_peak_pick(const Eigen::VectorXd& powers,
                              const Eigen::VectorXd& grid_angles,
                              int num_sources) {
  const std::vector<int> idx = ssr_peak_indices(powers, num_sources);
  Eigen::VectorXd doas(num_sources);
  for (int i = 0; i < num_sources; ++i) doas(i) = grid_angles(idx[i]);
  return doas;
}

Estimate ssr_estimate(const SampleCovSet& covs, int num_sources,
                      const Dictionary& dict, int iterations) {
  const SsrResult ssr = ssr_alternating(covs, dict, iterations);
  const std::vector<int> idx = ssr_peak_indices(ssr.powers, num_sources);
  Estimate e;
  e.doas.resize(num_sources);
  Eigen::VectorXd p(num_sources);
  for (int i = 0; i < num_sources; ++i) {
    e.doas(i) = dict.angles(idx[i]);
    p(i) = ssr.powers(idx[i]);
  }
  e.source_cov = p.cast<std::complex<double>>().asDiagonal();
  e.noise_var = ssr.noise_var;
  e.objective = ssr.objective_trace.back();
  e.iterations = iterations;
  return e;
}

Estimate mvdr_estimate(const SampleCovSet& covs, int num_sources,
                       const Dictionary& dict) {
  const int w = covs.num_chains();
  Eigen::VectorXd denominator = Eigen::VectorXd::Zero(dict.size());
  for (int k = 0; k < covs.num_subarrays(); ++k) {
    Eigen::MatrixXcd r = covs.covs[k];
    if (covs.num_snapshots < w)
      r += (1e-6 * r.trace().real() / w) *
           Eigen::MatrixXcd::Identity(w, w);
    const Eigen::MatrixXcd rinv = inv_floored(r, kWhiteningFloor);
    denominator += (dict.atoms[k].conjugate().cwiseProduct(rinv * dict.atoms[k]))
                       .colwise()
                       .sum()
                       .real()
                       .transpose();
  }
  const Eigen::VectorXd spectrum = denominator.cwiseInverse();
  Estimate e;
  e.doas = ssr_peak_pick(spectrum, dict.angles, num_sources);
  e.source_cov = Eigen::MatrixXcd::Zero(num_sources, num_sources);
  e.noise_var = 0.0;
  e.objective = spectrum.maxCoeff();
  return e;
}

Estimate hybrid_estimate(const SampleCovSet& covs, const SubarrayScheme& scheme,
                         const ArrayGeometry& geom,
                         const HybridOptions& options) {
  const int l = options.num_sources;
  ParamVector c0;
  double init_residual = 0.0;

  switch (options.init) {
    case HybridInit::Ssr: {
      const Dictionary dict = Dictionary::build(
          scheme, geom,
          GridSpec::make(geom.num_antennas, options.ssr_oversampling));
      const SsrResult ssr =
          ssr_alternating(covs, dict, options.ssr_iterations);
      const std::vector<int> idx = ssr_peak_indices(ssr.powers, l);
      c0.doas.resize(l);
      Eigen::VectorXd p(l);
      for (int i = 0; i < l; ++i) {
        c0.doas(i) = dict.angles(idx[i]);
        p(i) = ssr.powers(idx[i]);
      }
      c0.source_cov = p.cast<std::complex<double>>().asDiagonal();
      c0.noise_var = ssr.noise_var;
      break;
    }
    case HybridInit::Gls: {
      const Estimate init = gls_grid_search(
          covs, l, GridSpec::make(geom.num_antennas, options.gls_oversampling),
          scheme, geom);
      c0.doas = init.doas;
      c0.source_cov = init.source_cov;
      c0.noise_var = init.noise_var;
      init_residual = init.residual;
      break;
    }
    case HybridInit::Mvdr:
    case HybridInit::External: {
      Eigen::VectorXd doas;
      if (options.init == HybridInit::Mvdr) {
        const Dictionary dict = Dictionary::build(
            scheme, geom,
            GridSpec::make(geom.num_antennas, options.mvdr_oversampling));
        doas = mvdr_estimate(covs, l, dict).doas;
      } else {
        if (options.external_doas.size() != l)
          throw std::invalid_argument(
              "hybrid_estimate: external initializer has wrong length");
        doas = options.external_doas;
      }
      // The initializer yields angles only; nuisance parameters come from the
      // covariance fit at those angles.
      const GlsFit fit = gls_inner_fit(doas, covs, scheme, geom);
      c0.doas = doas;
      c0.source_cov = fit.powers.cast<std::complex<double>>().asDiagonal();
      c0.noise_var = fit.noise_var;
      init_residual = fit.residual;
      break;
    }
  }

  const AscentResult ascent =
      block_coordinate_ascent(c0, covs, scheme, geom, options.ascent);
  return make_sorted_estimate(ascent.params, ascent.trace.back(),
                              ascent.iterations, init_residual);
}

}  // namespace subdoa
