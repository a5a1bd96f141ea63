// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace handproof {

/// Natural cubic spline (zero second derivative at both ends) through
/// (knots[i], values[i]). Knots must be strictly increasing.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline(std::span<const double> knots,
                     std::span<const double> values);

  double operator()(double t) const { return value(t); }
  double value(double t) const;
  double derivative(double t) const;

  double front() const { return knots_.front(); }
  double back() const { return knots_.back(); }

 private:
  std::size_t interval(double t) const;

  std::vector<double> knots_;
  std::vector<double> values_;
  std::vector<double> second_;  // second derivatives at the knots
};

}  // namespace handproof
