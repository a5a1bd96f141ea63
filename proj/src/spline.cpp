// SPDX-License-Identifier: Apache-2.0
#include "handproof/spline.hpp"

#include <algorithm>

#include "handproof/error.hpp"

namespace handproof {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> knots,
                                       std::span<const double> values)
    : knots_(knots.begin(), knots.end()),
      values_(values.begin(), values.end()),
      second_(knots.size(), 0.0) {
  const std::size_t n = knots_.size();
  if (n < 2 || values_.size() != n) {
    throw Error(ErrorCode::InvalidArgument,
                "spline needs at least two knots and matching values");
  }
  if (n == 2) return;

  // Thomas algorithm on the interior second derivatives.
  std::vector<double> diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = knots_[i] - knots_[i - 1];
    const double h1 = knots_[i + 1] - knots_[i];
    const double lower = h0 / 6.0;
    diag[i] = (h0 + h1) / 3.0;
    upper[i] = h1 / 6.0;
    rhs[i] = (values_[i + 1] - values_[i]) / h1 -
             (values_[i] - values_[i - 1]) / h0;
    if (i > 1) {
      const double m = lower / diag[i - 1];
      diag[i] -= m * upper[i - 1];
      rhs[i] -= m * rhs[i - 1];
    }
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    const double next = (i + 2 < n) ? second_[i + 1] : 0.0;
    second_[i] = (rhs[i] - upper[i] * next) / diag[i];
    if (i == 1) break;
  }
}

std::size_t NaturalCubicSpline::interval(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - knots_.begin());
  i = std::clamp<std::size_t>(i, 1, knots_.size() - 1);
  return i - 1;
}

double NaturalCubicSpline::value(double t) const {
  const std::size_t i = interval(t);
  // Exact at knots.
  if (t == knots_[i]) return values_[i];
  if (t == knots_[i + 1]) return values_[i + 1];
  const double h = knots_[i + 1] - knots_[i];
  const double a = (knots_[i + 1] - t) / h;
  const double b = (t - knots_[i]) / h;
  return a * values_[i] + b * values_[i + 1] +
         ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) *
             h * h / 6.0;
}

double NaturalCubicSpline::derivative(double t) const {
  const std::size_t i = interval(t);
  const double h = knots_[i + 1] - knots_[i];
  const double a = (knots_[i + 1] - t) / h;
  const double b = (t - knots_[i]) / h;
  return (values_[i + 1] - values_[i]) / h -
         (3.0 * a * a - 1.0) / 6.0 * h * second_[i] +
         (3.0 * b * b - 1.0) / 6.0 * h * second_[i + 1];
}

}  // namespace handproof
