// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "handproof/random.hpp"
#include "handproof/sample.hpp"
#include "handproof/trajectory.hpp"

namespace handproof {

/// One stroke primitive of the sigma-lognormal model.
/// Control parameters: onset t0 (s), amplitude D, log-time delay mu and
/// log-response time sigma. Peripheral parameters: start / end direction.
struct LognormalComponent {
  double t0 = 0.0;
  double D = 1.0;
  double mu = -1.5;
  double sigma = 0.25;
  double theta_s = 0.0;
  double theta_e = 0.0;

  friend bool operator==(const LognormalComponent&,
                         const LognormalComponent&) = default;
};

struct ActionPlan {
  std::vector<LognormalComponent> components;  // sorted by t0
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double sample_rate = 100.0;
};

/// Lognormal speed profile; zero for t <= t0.
double component_speed(const LognormalComponent& c, double t);
/// Direction interpolated along the lognormal CDF between theta_s and theta_e.
double component_angle(const LognormalComponent& c, double t);
/// Lognormal CDF of the component's time support.
double component_progress(const LognormalComponent& c, double t);

/// Time at which the speed profile peaks.
inline double component_peak_time(const LognormalComponent& c) {
  return c.t0 + std::exp(c.mu - c.sigma * c.sigma);
}
/// End of the synthesis support, about four log-sigmas past the onset.
inline double component_support_end(const LognormalComponent& c) {
  return c.t0 + std::exp(c.mu + 4.0 * c.sigma);
}

/// Planar velocity of the superposed plan.
Eigen::Vector2d plan_velocity(const ActionPlan& plan, double t);
double plan_speed(const ActionPlan& plan, double t);

/// Integrates the plan velocity with the trapezoid rule at `rate_hz` from
/// the earliest onset to the latest support end.
Trajectory synthesize_trajectory(const ActionPlan& plan, double rate_hz);

/// Integrates the plan velocity on the uniform grid t_begin + k / rate_hz,
/// k = 0..n, starting at the plan origin.
Trajectory synthesize_window(const ActionPlan& plan, double rate_hz,
                             double t_begin, std::size_t intervals);

struct ExtractionOptions {
  /// Stop once the unexplained speed energy falls below this fraction.
  double residual_energy_fraction = 0.05;
  std::size_t max_components = 64;
  /// Zero-phase moving-average length used for peak finding.
  int smoothing_window = 7;
  /// Floor on the resampling rate used for analysis (Hz).
  double min_rate = 100.0;
  /// After joint refinement, keep adding components from residual peaks
  /// while the speed SNR is below this (dB) and each addition helps.
  double min_snr_db = 25.0;
  std::size_t max_augment_failures = 3;
};

struct Extraction {
  ActionPlan plan;
  double snr_db = 0.0;
};

/// Estimates a sigma-lognormal plan from a trajectory, stroke by stroke:
/// seed each component from the characteristic points of the largest
/// remaining speed peak, refine by bounded Levenberg-Marquardt on the
/// velocity segment, subtract and repeat. A final joint refinement fits all
/// components to the whole velocity profile.
Extraction extract_plan(const Trajectory& trajectory,
                        const ExtractionOptions& options = {});

/// Analytic re-synthesis of the input over its own time span and mean rate.
Trajectory reconstruct(const Trajectory& trajectory,
                       const ExtractionOptions& options = {});

/// Relative half-widths of the perturbation draws.
struct PerturbationRanges {
  double duration = 0.10;   // time-support scale u in [1 - d, 1 + d]
  double onset = 0.10;      // |t0' - t0| <= onset * |t0|
  double amplitude = 0.10;  // D' = D (1 + U[-a, a])
  double angle = 0.10;      // theta' = theta (1 + U[-a, a])

  static PerturbationRanges none() { return {0.0, 0.0, 0.0, 0.0}; }
};

ActionPlan perturb_plan(const ActionPlan& plan, Rng& rng,
                        const PerturbationRanges& ranges = {});

/// Kinematic synthesis: extract, perturb and re-synthesize at the input's
/// mean rate.
LabeledSample kinematic_synthesize(const LabeledSample& human, Rng& rng,
                                   const PerturbationRanges& ranges = {},
                                   const ExtractionOptions& options = {});

inline constexpr double kSnrCapDb = 120.0;

/// 10 log10(sum ref^2 / sum (ref - approx)^2), capped at 120 dB.
double compute_snr(std::span<const double> reference,
                   std::span<const double> approx);

/// Number of components per second of signal.
double nblog_rate(const ActionPlan& plan, double duration);

/// Speed magnitude at each sample, from the derivative of the natural
/// spline through the points.
std::vector<double> speed_profile(const Trajectory& trajectory);

nlohmann::json to_json(const ActionPlan& plan);
ActionPlan plan_from_json(const nlohmann::json& doc);

}  // namespace handproof
