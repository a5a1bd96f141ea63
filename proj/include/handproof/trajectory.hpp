// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace handproof {

/// Pen-tip sample. Coordinates in device units, time in seconds.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Ordered pen-tip samples with finite values, at least two points and
/// strictly increasing timestamps. The constructor enforces these
/// invariants (it is validate() with repair off).
class Trajectory {
 public:
  explicit Trajectory(std::vector<Point> points);

  std::span<const Point> points() const { return points_; }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  std::size_t size() const { return points_.size(); }
  const Point& front() const { return points_.front(); }
  const Point& back() const { return points_.back(); }
  double duration() const { return points_.back().t - points_.front().t; }
  /// Points per second over the whole trajectory.
  double mean_rate() const {
    return static_cast<double>(points_.size() - 1) / duration();
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::vector<Point> points_;
};

/// Checks a raw point sequence. With `repair` on, points whose timestamp
/// does not exceed the last kept point are dropped (keep-first).
Trajectory validate(std::span<const Point> raw, bool repair);

Trajectory translate(const Trajectory& trajectory, double dx, double dy,
                     double dt);

enum class Representation { Velocity, Delta };

std::string_view to_string(Representation repr) noexcept;
Representation parse_representation(std::string_view name);
inline Eigen::Index feature_width(Representation repr) noexcept {
  return repr == Representation::Velocity ? 1 : 3;
}

/// Per-step classifier input; `values` holds one row per step.
struct FeatureSequence {
  Representation representation = Representation::Delta;
  Eigen::MatrixXd values;
  Eigen::Index mask_length = 0;

  Eigen::Index rows() const { return values.rows(); }
};

/// Row j = |p[j+1] - p[j]| / (t[j+1] - t[j]).
FeatureSequence to_velocity(const Trajectory& trajectory);
/// Row j = (dx, dy, dt) between consecutive points.
FeatureSequence to_deltas(const Trajectory& trajectory);
FeatureSequence to_features(const Trajectory& trajectory, Representation repr);

inline constexpr Eigen::Index kSequenceCapacity = 400;

/// Keeps the first `capacity` rows, zero-pads shorter sequences.
FeatureSequence pad_or_truncate(const FeatureSequence& seq,
                                Eigen::Index capacity = kSequenceCapacity);

/// Resamples x(t), y(t) with a natural cubic spline at `rate_hz`, starting
/// at the first timestamp. Timestamps are exactly t0 + k / rate_hz; the last
/// sample is evaluated at the original end time so the end point is kept.
Trajectory resample_uniform(const Trajectory& trajectory, double rate_hz);

/// Spline resampling into exactly `intervals` equal steps spanning the
/// original time range; both end points are reproduced.
Trajectory resample_intervals(const Trajectory& trajectory,
                              std::size_t intervals);

/// Per-channel standardization statistics.
struct ChannelStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  static ChannelStats identity(Eigen::Index width) {
    return {Eigen::VectorXd::Zero(width), Eigen::VectorXd::Ones(width)};
  }
};

inline constexpr double kStdFloor = 1e-8;

/// Mean / std over the real (unpadded) rows of all training sequences.
ChannelStats fit_standardizer(std::span<const FeatureSequence> train);
/// Standardizes the first mask_length rows; padding rows stay zero.
FeatureSequence apply_standardizer(const FeatureSequence& seq,
                                   const ChannelStats& stats);

}  // namespace handproof
