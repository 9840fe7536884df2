// SPDX-License-Identifier: Apache-2.0
#include "subdoa/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "subdoa/rng.hpp"

namespace subdoa {

double wrap_2pi(double angle) {
  double r = std::fmod(angle, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;  // fmod can land on 2*pi after the correction
  return r;
}

double wrap_pi(double delta) {
  double r = std::remainder(delta, kTwoPi);
  if (r >= kPi) r -= kTwoPi;
  return r;
}

Eigen::MatrixXcd hermitianize(const Eigen::MatrixXcd& a) {
  return 0.5 * (a + a.adjoint());
}

namespace {

// Shared eigenvalue-transform helper for the Hermitian functions below.
template <typename Fn>
Eigen::MatrixXcd eigen_transform(const Eigen::MatrixXcd& a, Fn&& fn) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitianize(a));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("Hermitian eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = fn(ev(i), ev);
  return hermitianize(es.eigenvectors() * ev.asDiagonal() *
                      es.eigenvectors().adjoint());
}

double floored(double lambda, const Eigen::VectorXd& ev, double rel_floor) {
  const double lambda_max = ev.maxCoeff();
  if (!(lambda_max > 0.0))
    throw std::runtime_error("matrix has no positive eigenvalue");
  return std::max(lambda, rel_floor * lambda_max);
}

}  // namespace

Eigen::MatrixXcd psd_project(const Eigen::MatrixXcd& a) {
  return eigen_transform(
      a, [](double l, const Eigen::VectorXd&) { return std::max(l, 0.0); });
}

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& a) {
  return eigen_transform(a, [](double l, const Eigen::VectorXd&) {
    return std::sqrt(std::max(l, 0.0));
  });
}

Eigen::MatrixXcd inv_floored(const Eigen::MatrixXcd& a, double rel_floor) {
  return eigen_transform(a, [rel_floor](double l, const Eigen::VectorXd& ev) {
    return 1.0 / floored(l, ev, rel_floor);
  });
}

Eigen::MatrixXcd inv_sqrt_floored(const Eigen::MatrixXcd& a, double rel_floor) {
  return eigen_transform(a, [rel_floor](double l, const Eigen::VectorXd& ev) {
    return 1.0 / std::sqrt(floored(l, ev, rel_floor));
  });
}

}  // namespace subdoa
