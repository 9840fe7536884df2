// SPDX-License-Identifier: Apache-2.0
#include "subdoa/nnls.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace subdoa {

namespace {

// Least squares on the passive columns via column-pivoted QR.
Eigen::VectorXd passive_solve(const Eigen::MatrixXd& a,
                              const Eigen::VectorXd& b,
                              const std::vector<int>& passive) {
  Eigen::MatrixXd sub(a.rows(), passive.size());
  for (std::size_t c = 0; c < passive.size(); ++c)
    sub.col(c) = a.col(passive[c]);
  return sub.colPivHouseholderQr().solve(b);
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index n = a.cols();
  if (a.norm() == 0.0)
    throw std::invalid_argument("nnls: all basis columns are zero");

  NnlsResult res;
  res.x = Eigen::VectorXd::Zero(n);
  std::vector<bool> in_passive(n, false);
  std::vector<int> passive;

  const double tol =
      10.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().maxCoeff() *
      static_cast<double>(std::max(a.rows(), a.cols()));
  const int max_iter = 3 * static_cast<int>(n) + 30;

  Eigen::VectorXd w = a.transpose() * (b - a * res.x);
  while (res.iterations < max_iter) {
    // Most positive gradient among active (zero) variables.
    int best = -1;
    double best_w = tol;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!in_passive[i] && w(i) > best_w) {
        best_w = w(i);
        best = static_cast<int>(i);
      }
    if (best < 0) break;
    in_passive[best] = true;
    passive.push_back(best);

    for (;;) {
      ++res.iterations;
      Eigen::VectorXd z = passive_solve(a, b, passive);
      bool feasible = true;
      for (Eigen::Index i = 0; i < z.size(); ++i)
        if (z(i) <= 0.0) feasible = false;
      if (feasible) {
        for (std::size_t c = 0; c < passive.size(); ++c)
          res.x(passive[c]) = z(c);
        break;
      }
      // Step toward z until the first passive variable hits zero.
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < passive.size(); ++c)
        if (z(c) <= 0.0) {
          const double xi = res.x(passive[c]);
          alpha = std::min(alpha, xi / (xi - z(c)));
        }
      for (std::size_t c = 0; c < passive.size(); ++c) {
        res.x(passive[c]) += alpha * (z(c) - res.x(passive[c]));
        if (z(c) <= 0.0 && res.x(passive[c]) < 1e-14) res.x(passive[c]) = 0.0;
      }
      std::vector<int> still;
      for (int idx : passive)
        if (res.x(idx) > 0.0)
          still.push_back(idx);
        else
          in_passive[idx] = false;
      passive = std::move(still);
      if (passive.empty()) break;
    }
    w = a.transpose() * (b - a * res.x);
  }

  res.residual = (a * res.x - b).squaredNorm();
  return res;
}

}  // namespace subdoa
