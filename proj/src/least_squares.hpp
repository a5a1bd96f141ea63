// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace handproof::detail {

struct LmResult {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
};

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt scaling).
/// `residual(x)` returns r, `jacobian(x)` returns dr/dx, `project(x)` clamps
/// x into its box. The cost is 0.5 |r|^2; a step is kept only if it lowers
/// the cost.
template <typename Residual, typename Jacobian, typename Project>
LmResult levenberg_marquardt(Eigen::VectorXd& x, Residual&& residual,
                             Jacobian&& jacobian, Project&& project,
                             int max_iterations) {
  project(x);
  Eigen::VectorXd r = residual(x);
  double cost = 0.5 * r.squaredNorm();
  LmResult result{cost, cost, 0};
  double lambda = 1e-3;
  for (int it = 0; it < max_iterations; ++it) {
    result.iterations = it + 1;
    const Eigen::MatrixXd J = jacobian(x);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() < 1e-14) break;
    bool improved = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * (JtJ.diagonal().array() + 1e-12).matrix();
      Eigen::VectorXd candidate = x - A.ldlt().solve(g);
      project(candidate);
      const Eigen::VectorXd r_new = residual(candidate);
      const double cost_new = 0.5 * r_new.squaredNorm();
      if (std::isfinite(cost_new) && cost_new < cost) {
        const double gain = (cost - cost_new) / std::max(cost, 1e-300);
        x = candidate;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (gain < 1e-10) it = max_iterations;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  result.final_cost = cost;
  return result;
}

/// Central-difference Jacobian of `residual` at x.
template <typename Residual>
Eigen::MatrixXd numeric_jacobian(const Eigen::VectorXd& x, Residual&& residual) {
  const Eigen::VectorXd r0 = residual(x);
  Eigen::MatrixXd J(r0.size(), x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    probe[j] = x[j] + h;
    const Eigen::VectorXd plus = residual(probe);
    probe[j] = x[j] - h;
    const Eigen::VectorXd minus = residual(probe);
    probe[j] = x[j];
    J.col(j) = (plus - minus) / (2.0 * h);
  }
  return J;
}

}  // namespace handproof::detail
