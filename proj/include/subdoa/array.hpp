// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace subdoa {

// Planar antenna array described by per-antenna azimuth positions on a circle
// of radius R, in units of the carrier wavelength.
struct ArrayGeometry {
  int num_antennas = 0;             // M
  double radius_over_wavelength = 1.0;
  std::vector<double> azimuths;     // phi_m, radians

  // Uniform circular array: phi_m = 2*pi*(m-1)/M, clockwise numbering with
  // phi_1 = 0.
  static ArrayGeometry uca(int num_antennas, double radius_over_wavelength);
};

// K switching states, each connecting the W RF chains to a distinct subset of
// antennas. Antenna indices are stored 1-based as in scheme files.
struct SubarrayScheme {
  int num_chains = 0;                        // W
  std::vector<std::vector<int>> selections;  // K sets, each of W indices

  int num_subarrays() const { return static_cast<int>(selections.size()); }

  // Checks cardinality, index range (1..M) and per-subarray distinctness.
  void validate(int num_antennas) const;

  // Embedded default: the 4-subarray scheme for the 9-antenna UCA with 3 RF
  // chains ({1,2,9}, {1,3,8}, {1,4,7}, {1,5,6}).
  static SubarrayScheme default_uca9();

  // Text format: one line per subarray listing 1-based antenna indices,
  // whitespace separated. '#' starts a comment.
  static SubarrayScheme from_file(const std::string& path);
};

// Array response a(theta); entry m = exp(j*2*pi*(R/lambda)*cos(theta-phi_m)).
// The angle is wrapped into [0, 2*pi) before evaluation.
Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double theta);

// d a(theta) / d theta.
Eigen::VectorXcd steering_derivative(const ArrayGeometry& geom, double theta);

// M x L matrix with columns a(theta_l).
Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geom,
                                 const Eigen::VectorXd& doas);

// Binary W x M selection matrix G^(k); row w picks the w-th listed antenna of
// subarray k (0-based k). G * G^T = I_W.
Eigen::MatrixXd selection_matrix(const SubarrayScheme& scheme, int k,
                                 int num_antennas);

// Rows of a matrix restricted to subarray k: G^(k) * a without forming G.
Eigen::VectorXcd select_rows(const SubarrayScheme& scheme, int k,
                             const Eigen::VectorXcd& v);
Eigen::MatrixXcd select_rows(const SubarrayScheme& scheme, int k,
                             const Eigen::MatrixXcd& m);

// Co-array manifold: column q stacks, over subarrays k, the Khatri-Rao
// products (G^(k) a*(theta_q)) (x) (G^(k) a(theta_q)); size (K*W^2) x Q.
Eigen::MatrixXcd coarray_manifold(const SubarrayScheme& scheme,
                                  const ArrayGeometry& geom,
                                  const Eigen::VectorXd& grid);

// Largest r such that every r-subset of columns is linearly independent,
// by exhaustive subset enumeration. Rank uses a singular-value threshold of
// 1e-8 times the subset's largest singular value. Refuses matrices with more
// than max_cols columns (combinatorial blowup).
int kruskal_rank_smallscale(const Eigen::MatrixXcd& m, int max_cols = 20);

}  // namespace subdoa
