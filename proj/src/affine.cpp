// SPDX-License-Identifier: Apache-2.0
#include "handproof/affine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "handproof/error.hpp"
#include "signal.hpp"

namespace handproof {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double bbox_diagonal(std::span<const Point> points) {
  double min_x = points.front().x, max_x = min_x;
  double min_y = points.front().y, max_y = min_y;
  for (const Point& p : points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  return std::hypot(max_x - min_x, max_y - min_y);
}

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

}  // namespace

void check(const AffineParams& p) {
  for (double f : {p.sin_amplitude, p.duration_jitter, p.displacement_frac, p.split_speed_frac}) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "affine fractions must lie in [0, 1]");
    }
  }
  for (double a : {p.slant_deg, p.skew_deg}) {
    if (!(a >= 0.0 && a <= 30.0)) {
      throw Error(ErrorCode::InvalidArgument, "affine angles must lie in [0, 30] degrees");
    }
  }
  if (!(p.sin_periods >= 0.0) || !std::isfinite(p.sin_periods)) {
    throw Error(ErrorCode::InvalidArgument, "sin_periods must be non-negative");
  }
  if (!(p.rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "rate_hz must be positive");
}

AffineParams affine_params_from_json(const nlohmann::json& doc) {
  AffineParams p;
  try {
    p.sin_amplitude = doc.value("sin_amplitude", p.sin_amplitude);
    p.sin_periods = doc.value("sin_periods", p.sin_periods);
    p.duration_jitter = doc.value("duration_jitter", p.duration_jitter);
    p.displacement_frac = doc.value("displacement_frac", p.displacement_frac);
    p.slant_deg = doc.value("slant_deg", p.slant_deg);
    p.skew_deg = doc.value("skew_deg", p.skew_deg);
    p.split_speed_frac = doc.value("split_speed_frac", p.split_speed_frac);
    p.rate_hz = doc.value("rate_hz", p.rate_hz);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad affine params: ") + e.what());
  }
  check(p);
  return p;
}

nlohmann::json to_json(const AffineParams& p) {
  return {{"sin_amplitude", p.sin_amplitude},     {"sin_periods", p.sin_periods},
          {"duration_jitter", p.duration_jitter}, {"displacement_frac", p.displacement_frac},
          {"slant_deg", p.slant_deg},             {"skew_deg", p.skew_deg},
          {"split_speed_frac", p.split_speed_frac}, {"rate_hz", p.rate_hz}};
}

std::vector<IndexRange> segment_components(const Trajectory& trajectory,
                                           double split_speed_frac) {
  const std::size_t n = trajectory.size();
  if (n < 4) return {{0, n}};
  const auto speed = to_velocity(trajectory).values.col(0).array().eval();
  const Eigen::ArrayXd smooth = detail::moving_average(speed, 7);
  const double threshold = split_speed_frac * speed.mean();

  std::vector<IndexRange> ranges;
  std::size_t begin = 0;
  for (Eigen::Index j = 1; j + 1 < smooth.size(); ++j) {
    const bool minimum = smooth[j] < smooth[j - 1] && smooth[j] <= smooth[j + 1];
    if (!minimum || !(smooth[j] < threshold)) continue;
    // Segment j joins points j and j + 1; the next component starts at j + 1.
    const auto split = static_cast<std::size_t>(j) + 1;
    if (split - begin >= 2 && n - split >= 2) {
      ranges.push_back({begin, split});
      begin = split;
    }
  }
  ranges.push_back({begin, n});
  return ranges;
}

std::vector<Point> sinusoidal_warp(std::span<const Point> points, double amplitude,
                                   double periods, double phase) {
  std::vector<Point> out(points.begin(), points.end());
  const std::size_t n = points.size();
  if (amplitude == 0.0 || n < 2) return out;

  std::vector<double> arc(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    arc[i] = arc[i - 1] + std::hypot(points[i].x - points[i - 1].x,
                                     points[i].y - points[i - 1].y);
  }
  const double length = arc.back();
  if (length == 0.0) return out;
  const double scale = amplitude * bbox_diagonal(points);

  double nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = points[i == 0 ? 0 : i - 1];
    const Point& b = points[std::min(i + 1, n - 1)];
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double norm = std::hypot(dx, dy);
    if (norm > 0.0) {
      nx = -dy / norm;
      ny = dx / norm;
    }
    const double offset = scale * std::sin(kTwoPi * periods * arc[i] / length + phase);
    out[i].x += offset * nx;
    out[i].y += offset * ny;
  }
  return out;
}

std::vector<Point> sinusoidal_warp(std::span<const Point> points,
                                   const AffineParams& params, Rng& rng) {
  const double phase = kTwoPi * rng.uniform();
  return sinusoidal_warp(points, params.sin_amplitude, params.sin_periods, phase);
}

Trajectory slant_skew(const Trajectory& trajectory, double slant_rad, double skew_rad) {
  double cx = 0.0, cy = 0.0;
  for (const Point& p : trajectory.points()) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(trajectory.size());
  cy /= static_cast<double>(trajectory.size());
  const double shear_x = std::tan(slant_rad);
  const double shear_y = std::tan(skew_rad);
  std::vector<Point> out;
  out.reserve(trajectory.size());
  for (const Point& p : trajectory.points()) {
    out.push_back({p.x + shear_x * (p.y - cy), p.y + shear_y * (p.x - cx), p.t});
  }
  return Trajectory(std::move(out));
}

Trajectory affine_synthesize(const Trajectory& trajectory, const AffineParams& params,
                             Rng& rng) {
  check(params);
  const double rate = params.rate_hz;
  const double duration = trajectory.duration();
  if (duration < 2.0 / rate) {
    throw Error(ErrorCode::DegenerateDuration, "duration shorter than two sample periods");
  }
  const auto ranges = segment_components(trajectory, params.split_speed_frac);
  const auto original = trajectory.points();

  // Warp every component, then re-join them: each component starts at the
  // previous merged end plus the original step between the two components.
  std::vector<Point> merged;
  merged.reserve(trajectory.size());
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    const auto piece = original.subspan(ranges[k].begin, ranges[k].size());
    const std::vector<Point> warped = sinusoidal_warp(piece, params, rng);
    double ox = 0.0, oy = 0.0;
    if (k > 0) {
      const Point& prev_orig = original[ranges[k].begin - 1];
      ox = (merged.back().x - prev_orig.x) + (piece.front().x - warped.front().x);
      oy = (merged.back().y - prev_orig.y) + (piece.front().y - warped.front().y);
    }
    for (const Point& p : warped) merged.push_back({p.x + ox, p.y + oy, p.t});
  }
  const Trajectory joined(std::move(merged));

  // Resample at the output rate with the duration scaled by u in [1-j, 1+j].
  const double jitter = params.duration_jitter;
  const double scale = rng.uniform(1.0 - jitter, 1.0 + jitter);
  Trajectory resampled = joined;
  std::vector<double> source_time;
  if (jitter == 0.0) {
    resampled = resample_uniform(joined, rate);
    for (const Point& p : resampled.points()) source_time.push_back(p.t);
  } else {
    const double exact = duration * rate;
    auto intervals = static_cast<long>(std::llround(scale * exact));
    const auto lo = static_cast<long>(std::ceil((1.0 - jitter) * exact - 1e-9));
    const auto hi = static_cast<long>(std::floor((1.0 + jitter) * exact + 1e-9));
    if (lo <= hi) intervals = std::clamp(intervals, lo, hi);
    intervals = std::max(intervals, 1L);
    resampled = resample_intervals(joined, static_cast<std::size_t>(intervals));
    for (const Point& p : resampled.points()) source_time.push_back(p.t);
  }

  // Rigid per-component displacement, carried forward so each component
  // still starts where the previous one ended before its own shift.
  std::vector<Point> shifted(resampled.points().begin(), resampled.points().end());
  double carry_x = 0.0, carry_y = 0.0;
  std::size_t sample = 0;
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    const auto piece = original.subspan(ranges[k].begin, ranges[k].size());
    const double radius = params.displacement_frac * bbox_diagonal(piece) * rng.uniform();
    const double angle = kTwoPi * rng.uniform();
    carry_x += radius * std::cos(angle);
    carry_y += radius * std::sin(angle);
    const double next_start = k + 1 < ranges.size()
                                  ? original[ranges[k + 1].begin].t
                                  : std::numeric_limits<double>::infinity();
    for (; sample < shifted.size() && source_time[sample] < next_start; ++sample) {
      shifted[sample].x += carry_x;
      shifted[sample].y += carry_y;
    }
  }
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    shifted[i].t = static_cast<double>(i) / rate;
  }

  const double slant = radians(rng.uniform(-params.slant_deg, params.slant_deg));
  const double skew = radians(rng.uniform(-params.skew_deg, params.skew_deg));
  return slant_skew(Trajectory(std::move(shifted)), slant, skew);
}

LabeledSample affine_synthesize(const LabeledSample& human, const AffineParams& params,
                                Rng& rng) {
  return {human.id + "/affine", affine_synthesize(human.trajectory, params, rng),
          Label::Synthetic, "affine"};
}

}  // namespace handproof
