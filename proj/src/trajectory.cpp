// SPDX-License-Identifier: Apache-2.0
#include "handproof/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "handproof/error.hpp"
#include "handproof/spline.hpp"

namespace handproof {

namespace {

bool finite(const Point& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.t);
}

void check_invariants(std::span<const Point> points) {
  for (const Point& p : points) {
    if (!finite(p)) {
      throw Error(ErrorCode::NonFiniteValue, "trajectory has a non-finite value");
    }
  }
  if (points.size() < 2) {
    throw Error(ErrorCode::TooFewPoints, "trajectory needs at least 2 points, got " +
                                             std::to_string(points.size()));
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].t > points[i - 1].t)) {
      throw Error(ErrorCode::NonMonotonicTime,
                  "timestamp at index " + std::to_string(i) +
                      " does not exceed its predecessor");
    }
  }
}

struct SplinePair {
  NaturalCubicSpline x;
  NaturalCubicSpline y;
};

SplinePair fit_splines(const Trajectory& trajectory) {
  std::vector<double> ts, xs, ys;
  ts.reserve(trajectory.size());
  xs.reserve(trajectory.size());
  ys.reserve(trajectory.size());
  for (const Point& p : trajectory.points()) {
    ts.push_back(p.t);
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  return {NaturalCubicSpline(ts, xs), NaturalCubicSpline(ts, ys)};
}

}  // namespace

Trajectory::Trajectory(std::vector<Point> points) : points_(std::move(points)) {
  check_invariants(points_);
}

Trajectory validate(std::span<const Point> raw, bool repair) {
  if (raw.empty()) {
    throw Error(ErrorCode::TooFewPoints, "empty point sequence");
  }
  for (const Point& p : raw) {
    if (!finite(p)) {
      throw Error(ErrorCode::NonFiniteValue, "trajectory has a non-finite value");
    }
  }
  if (!repair) return Trajectory(std::vector<Point>(raw.begin(), raw.end()));

  std::vector<Point> kept;
  kept.reserve(raw.size());
  for (const Point& p : raw) {
    if (kept.empty() || p.t > kept.back().t) kept.push_back(p);
  }
  return Trajectory(std::move(kept));
}

Trajectory translate(const Trajectory& trajectory, double dx, double dy,
                     double dt) {
  std::vector<Point> out(trajectory.points().begin(), trajectory.points().end());
  for (Point& p : out) {
    p.x += dx;
    p.y += dy;
    p.t += dt;
  }
  return Trajectory(std::move(out));
}

std::string_view to_string(Representation repr) noexcept {
  return repr == Representation::Velocity ? "velocity" : "delta";
}

Representation parse_representation(std::string_view name) {
  if (name == "velocity") return Representation::Velocity;
  if (name == "delta") return Representation::Delta;
  throw Error(ErrorCode::InvalidArgument,
              "unknown representation '" + std::string(name) + "'");
}

FeatureSequence to_velocity(const Trajectory& trajectory) {
  const auto n = static_cast<Eigen::Index>(trajectory.size()) - 1;
  FeatureSequence seq{Representation::Velocity, Eigen::MatrixXd(n, 1), n};
  for (Eigen::Index j = 0; j < n; ++j) {
    const Point& a = trajectory[static_cast<std::size_t>(j)];
    const Point& b = trajectory[static_cast<std::size_t>(j + 1)];
    seq.values(j, 0) = std::hypot(b.x - a.x, b.y - a.y) / (b.t - a.t);
  }
  return seq;
}

FeatureSequence to_deltas(const Trajectory& trajectory) {
  const auto n = static_cast<Eigen::Index>(trajectory.size()) - 1;
  FeatureSequence seq{Representation::Delta, Eigen::MatrixXd(n, 3), n};
  for (Eigen::Index j = 0; j < n; ++j) {
    const Point& a = trajectory[static_cast<std::size_t>(j)];
    const Point& b = trajectory[static_cast<std::size_t>(j + 1)];
    seq.values(j, 0) = b.x - a.x;
    seq.values(j, 1) = b.y - a.y;
    seq.values(j, 2) = b.t - a.t;
  }
  return seq;
}

FeatureSequence to_features(const Trajectory& trajectory, Representation repr) {
  return repr == Representation::Velocity ? to_velocity(trajectory)
                                          : to_deltas(trajectory);
}

FeatureSequence pad_or_truncate(const FeatureSequence& seq,
                                Eigen::Index capacity) {
  const Eigen::Index real = std::min(seq.mask_length, capacity);
  FeatureSequence out{seq.representation,
                      Eigen::MatrixXd::Zero(capacity, seq.values.cols()), real};
  out.values.topRows(real) = seq.values.topRows(real);
  return out;
}

Trajectory resample_uniform(const Trajectory& trajectory, double rate_hz) {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) {
    throw Error(ErrorCode::InvalidArgument, "rate must be positive");
  }
  const double t0 = trajectory.front().t;
  const double t_end = trajectory.back().t;
  const double duration = t_end - t0;
  if (duration < 2.0 / rate_hz) {
    throw Error(ErrorCode::DegenerateDuration,
                "duration shorter than two sample periods");
  }
  const auto [sx, sy] = fit_splines(trajectory);
  const auto intervals =
      static_cast<std::size_t>(std::ceil(duration * rate_hz - 1e-9));
  std::vector<Point> out;
  out.reserve(intervals + 1);
  for (std::size_t k = 0; k <= intervals; ++k) {
    const double t = t0 + static_cast<double>(k) / rate_hz;
    const double at = std::min(t, t_end);
    out.push_back({sx(at), sy(at), t});
  }
  return Trajectory(std::move(out));
}

Trajectory resample_intervals(const Trajectory& trajectory,
                              std::size_t intervals) {
  if (intervals < 1) {
    throw Error(ErrorCode::InvalidArgument, "need at least one interval");
  }
  const double t0 = trajectory.front().t;
  const double duration = trajectory.duration();
  const auto [sx, sy] = fit_splines(trajectory);
  std::vector<Point> out;
  out.reserve(intervals + 1);
  for (std::size_t k = 0; k <= intervals; ++k) {
    const double t = k == intervals
                         ? trajectory.back().t
                         : t0 + duration * static_cast<double>(k) /
                                    static_cast<double>(intervals);
    out.push_back({sx(t), sy(t), t});
  }
  return Trajectory(std::move(out));
}

ChannelStats fit_standardizer(std::span<const FeatureSequence> train) {
  if (train.empty()) {
    throw Error(ErrorCode::EmptyTrainingSet, "no training sequences");
  }
  const Eigen::Index width = train.front().values.cols();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(width);
  Eigen::Index count = 0;
  for (const FeatureSequence& seq : train) {
    sum += seq.values.topRows(seq.mask_length).colwise().sum().transpose();
    count += seq.mask_length;
  }
  if (count < 2) {
    throw Error(ErrorCode::EmptyTrainingSet,
                "standardizer needs at least two real rows");
  }
  ChannelStats stats;
  stats.mean = sum / static_cast<double>(count);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(width);
  for (const FeatureSequence& seq : train) {
    sq += (seq.values.topRows(seq.mask_length).rowwise() -
           stats.mean.transpose())
              .array()
              .square()
              .matrix()
              .colwise()
              .sum()
              .transpose();
  }
  stats.stddev = (sq / static_cast<double>(count)).cwiseSqrt().cwiseMax(kStdFloor);
  return stats;
}

FeatureSequence apply_standardizer(const FeatureSequence& seq,
                                   const ChannelStats& stats) {
  if (stats.mean.size() != seq.values.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "standardizer width does not match the sequence");
  }
  FeatureSequence out = seq;
  auto real = out.values.topRows(seq.mask_length);
  real = ((real.rowwise() - stats.mean.transpose()).array().rowwise() /
          stats.stddev.transpose().array())
             .matrix();
  return out;
}

}  // namespace handproof
