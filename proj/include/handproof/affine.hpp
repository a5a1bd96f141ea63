// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "handproof/random.hpp"
#include "handproof/sample.hpp"
#include "handproof/trajectory.hpp"

namespace handproof {

struct AffineParams {
  double sin_amplitude = 0.02;      // fraction of the component bbox diagonal
  double sin_periods = 1.0;         // cycles per component
  double duration_jitter = 0.10;    // max relative duration change
  double displacement_frac = 0.10;  // max component shift, fraction of diagonal
  double slant_deg = 6.0;           // max |horizontal shear| angle
  double skew_deg = 3.0;            // max |vertical shear| angle
  double split_speed_frac = 0.25;   // split at speed minima below this x mean
  double rate_hz = 100.0;

  /// All distortions collapsed: the pipeline reduces to resampling.
  static AffineParams zero() { return {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25, 100.0}; }
};

/// Throws InvalidArgument when a field is out of range.
void check(const AffineParams& params);
AffineParams affine_params_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const AffineParams& params);

/// Half-open point index range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Splits at local minima of the smoothed segment-speed profile that fall
/// below `split_speed_frac` of the mean speed. Ranges are contiguous,
/// cover every point and hold at least two points each.
std::vector<IndexRange> segment_components(const Trajectory& trajectory,
                                           double split_speed_frac = 0.25);

/// Offsets each point along the local path normal by
/// amplitude * diag * sin(2 pi periods s + phase), s the arc-length fraction.
std::vector<Point> sinusoidal_warp(std::span<const Point> points, double amplitude,
                                   double periods, double phase);
/// Same, with the phase drawn uniformly from [0, 2 pi).
std::vector<Point> sinusoidal_warp(std::span<const Point> points,
                                   const AffineParams& params, Rng& rng);

/// Horizontal shear by slant and vertical shear by skew about the centroid.
Trajectory slant_skew(const Trajectory& trajectory, double slant_rad, double skew_rad);

/// Full affine distortion pipeline: segment, warp each component, merge
/// with continuity, spline-resample at 100 Hz with a jittered duration,
/// displace components, shear. Output timestamps start at 0.
LabeledSample affine_synthesize(const LabeledSample& human, const AffineParams& params,
                                Rng& rng);
Trajectory affine_synthesize(const Trajectory& trajectory, const AffineParams& params,
                             Rng& rng);

}  // namespace handproof
