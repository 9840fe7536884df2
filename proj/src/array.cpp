// SPDX-License-Identifier: Apache-2.0
#include "subdoa/array.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "subdoa/linalg.hpp"
#include "subdoa/rng.hpp"

namespace subdoa {

ArrayGeometry ArrayGeometry::uca(int num_antennas,
                                 double radius_over_wavelength) {
  if (num_antennas <= 0) throw std::invalid_argument("uca: M must be positive");
  if (!(radius_over_wavelength > 0.0))
    throw std::invalid_argument("uca: R/lambda must be positive");
  ArrayGeometry g;
  g.num_antennas = num_antennas;
  g.radius_over_wavelength = radius_over_wavelength;
  g.azimuths.resize(num_antennas);
  for (int m = 0; m < num_antennas; ++m)
    g.azimuths[m] = kTwoPi * m / num_antennas;
  return g;
}

void SubarrayScheme::validate(int num_antennas) const {
  if (num_chains <= 0)
    throw std::invalid_argument("scheme: W must be positive");
  if (selections.empty())
    throw std::invalid_argument("scheme: no subarrays");
  for (const auto& sel : selections) {
    if (static_cast<int>(sel.size()) != num_chains)
      throw std::invalid_argument("scheme: subarray size differs from W");
    std::set<int> uniq(sel.begin(), sel.end());
    if (static_cast<int>(uniq.size()) != num_chains)
      throw std::invalid_argument("scheme: repeated antenna in subarray");
    for (int idx : sel)
      if (idx < 1 || idx > num_antennas)
        throw std::invalid_argument("scheme: antenna index out of range");
  }
}

SubarrayScheme SubarrayScheme::default_uca9() {
  SubarrayScheme s;
  s.num_chains = 3;
  s.selections = {{1, 2, 9}, {1, 3, 8}, {1, 4, 7}, {1, 5, 6}};
  return s;
}

SubarrayScheme SubarrayScheme::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scheme file: " + path);
  SubarrayScheme s;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::vector<int> sel;
    int idx;
    while (row >> idx) sel.push_back(idx);
    if (sel.empty()) continue;
    if (s.selections.empty()) s.num_chains = static_cast<int>(sel.size());
    s.selections.push_back(std::move(sel));
  }
  if (s.selections.empty())
    throw std::runtime_error("scheme file has no subarrays: " + path);
  for (const auto& sel : s.selections)
    if (static_cast<int>(sel.size()) != s.num_chains)
      throw std::runtime_error("scheme file rows have differing lengths");
  return s;
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double theta) {
  const double t = wrap_2pi(theta);
  const double scale = kTwoPi * geom.radius_over_wavelength;
  Eigen::VectorXcd a(geom.num_antennas);
  for (int m = 0; m < geom.num_antennas; ++m)
    a(m) = std::polar(1.0, scale * std::cos(t - geom.azimuths[m]));
  return a;
}

Eigen::VectorXcd steering_derivative(const ArrayGeometry& geom, double theta) {
  const double t = wrap_2pi(theta);
  const double scale = kTwoPi * geom.radius_over_wavelength;
  Eigen::VectorXcd d(geom.num_antennas);
  for (int m = 0; m < geom.num_antennas; ++m) {
    const std::complex<double> am =
        std::polar(1.0, scale * std::cos(t - geom.azimuths[m]));
    d(m) = std::complex<double>(0.0, -scale * std::sin(t - geom.azimuths[m])) *
           am;
  }
  return d;
}

Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geom,
                                 const Eigen::VectorXd& doas) {
  Eigen::MatrixXcd a(geom.num_antennas, doas.size());
  for (Eigen::Index l = 0; l < doas.size(); ++l)
    a.col(l) = steering_vector(geom, doas(l));
  return a;
}

Eigen::MatrixXd selection_matrix(const SubarrayScheme& scheme, int k,
                                 int num_antennas) {
  if (k < 0 || k >= scheme.num_subarrays())
    throw std::invalid_argument("selection_matrix: subarray index out of range");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(scheme.num_chains, num_antennas);
  for (int w = 0; w < scheme.num_chains; ++w) {
    const int antenna = scheme.selections[k][w];
    if (antenna < 1 || antenna > num_antennas)
      throw std::invalid_argument("selection_matrix: antenna index out of range");
    g(w, antenna - 1) = 1.0;
  }
  return g;
}

Eigen::VectorXcd select_rows(const SubarrayScheme& scheme, int k,
                             const Eigen::VectorXcd& v) {
  if (k < 0 || k >= scheme.num_subarrays())
    throw std::invalid_argument("select_rows: subarray index out of range");
  Eigen::VectorXcd out(scheme.num_chains);
  for (int w = 0; w < scheme.num_chains; ++w)
    out(w) = v(scheme.selections[k][w] - 1);
  return out;
}

Eigen::MatrixXcd select_rows(const SubarrayScheme& scheme, int k,
                             const Eigen::MatrixXcd& m) {
  if (k < 0 || k >= scheme.num_subarrays())
    throw std::invalid_argument("select_rows: subarray index out of range");
  Eigen::MatrixXcd out(scheme.num_chains, m.cols());
  for (int w = 0; w < scheme.num_chains; ++w)
    out.row(w) = m.row(scheme.selections[k][w] - 1);
  return out;
}

Eigen::MatrixXcd coarray_manifold(const SubarrayScheme& scheme,
                                  const ArrayGeometry& geom,
                                  const Eigen::VectorXd& grid) {
  const int k_count = scheme.num_subarrays();
  const int w = scheme.num_chains;
  Eigen::MatrixXcd v(k_count * w * w, grid.size());
  for (Eigen::Index q = 0; q < grid.size(); ++q) {
    const Eigen::VectorXcd a = steering_vector(geom, grid(q));
    for (int k = 0; k < k_count; ++k) {
      const Eigen::VectorXcd sub = select_rows(scheme, k, a);
      // Kronecker product conj(sub) (x) sub, entries (i*W + j) = sub_i^* sub_j.
      for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j)
          v(k * w * w + i * w + j, q) = std::conj(sub(i)) * sub(j);
    }
  }
  return v;
}

namespace {

int rank_by_svd(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-8 * sv(0)) ++r;
  return r;
}

// Visits all size-r index subsets of {0..n-1}; returns false if any visited
// subset fails the predicate.
template <typename Pred>
bool all_subsets(int n, int r, Pred&& pred) {
  std::vector<int> idx(r);
  for (int i = 0; i < r; ++i) idx[i] = i;
  while (true) {
    if (!pred(idx)) return false;
    int i = r - 1;
    while (i >= 0 && idx[i] == n - r + i) --i;
    if (i < 0) return true;
    ++idx[i];
    for (int j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

int kruskal_rank_smallscale(const Eigen::MatrixXcd& m, int max_cols) {
  const int q = static_cast<int>(m.cols());
  if (max_cols > 20) max_cols = 20;
  if (q > max_cols)
    throw std::invalid_argument(
        "kruskal_rank_smallscale: too many columns for exhaustive enumeration");
  const int rows = static_cast<int>(m.rows());
  int kr = 0;
  for (int r = 1; r <= std::min(q, rows); ++r) {
    const bool ok = all_subsets(q, r, [&](const std::vector<int>& idx) {
      Eigen::MatrixXcd sub(rows, r);
      for (int c = 0; c < r; ++c) sub.col(c) = m.col(idx[c]);
      return rank_by_svd(sub) == r;
    });
    if (!ok) break;
    kr = r;
  }
  return kr;
}

}  // namespace subdoa
