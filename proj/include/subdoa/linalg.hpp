// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace subdoa {

// Wraps an angle into [0, 2*pi).
double wrap_2pi(double angle);

// Wraps a difference into [-pi, pi).
double wrap_pi(double delta);

// (A + A^H) / 2.
Eigen::MatrixXcd hermitianize(const Eigen::MatrixXcd& a);

// Nearest (Frobenius) positive-semidefinite matrix: Hermitian part with
// negative eigenvalues clipped at zero.
Eigen::MatrixXcd psd_project(const Eigen::MatrixXcd& a);

// Hermitian square root A^{1/2} with eigenvalues clipped at zero.
Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& a);

// A^{-1} and A^{-1/2} for Hermitian A with eigenvalues floored at
// rel_floor * lambda_max. Throws std::runtime_error when lambda_max <= 0.
Eigen::MatrixXcd inv_floored(const Eigen::MatrixXcd& a, double rel_floor);
Eigen::MatrixXcd inv_sqrt_floored(const Eigen::MatrixXcd& a, double rel_floor);

}  // namespace subdoa
