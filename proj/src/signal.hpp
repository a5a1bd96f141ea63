// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>

#include <Eigen/Core>

namespace handproof::detail {

/// Centered moving average with edge replication (zero phase).
inline Eigen::ArrayXd moving_average(const Eigen::ArrayXd& v, int window) {
  const Eigen::Index n = v.size();
  const int half = std::max(window, 1) / 2;
  Eigen::ArrayXd out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double sum = 0.0;
    for (int d = -half; d <= half; ++d) {
      sum += v[std::clamp<Eigen::Index>(k + d, 0, n - 1)];
    }
    out[k] = sum / static_cast<double>(2 * half + 1);
  }
  return out;
}

}  // namespace handproof::detail
