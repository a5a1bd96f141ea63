// SPDX-License-Identifier: Apache-2.0
#include "handproof/lognormal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "handproof/error.hpp"
#include "handproof/spline.hpp"
#include "least_squares.hpp"
#include "signal.hpp"

namespace handproof {

namespace {

constexpr double kPi = std::numbers::pi;
// Half-height half-width of a lognormal peak in log-time units of sigma:
// v / v_peak = exp(-w^2 / (2 sigma^2)) with w the log-time offset from the mode.
const double kHalfWidth = std::sqrt(2.0 * std::numbers::ln2);

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Component parameters as an unconstrained-ish vector:
// (t0, ln D, mu, ln sigma, theta_s, theta_e).
constexpr int kParams = 6;
const double kMinLogSigma = std::log(0.02);
const double kMaxLogSigma = std::log(3.0);

void pack(const LognormalComponent& c, Eigen::Ref<Eigen::VectorXd> p) {
  p << c.t0, std::log(c.D), c.mu, std::log(c.sigma), c.theta_s, c.theta_e;
}

LognormalComponent unpack(const Eigen::Ref<const Eigen::VectorXd>& p) {
  return {p[0], std::exp(p[1]), p[2], std::exp(p[3]), p[4], p[5]};
}

// Onsets may precede the window (the tail of an earlier stroke) but only
// by a bounded amount; angles stay within a few turns.
struct Window {
  double t_begin = 0.0;
  double t_end = 0.0;
};

constexpr double kMaxAngle = 8.0 * std::numbers::pi;

void project_component(Eigen::Ref<Eigen::VectorXd> p, const Window& w) {
  const double span = w.t_end - w.t_begin;
  p[0] = std::clamp(p[0], w.t_begin - 1.0 - span, w.t_end);
  p[1] = std::clamp(p[1], -40.0, 40.0);
  p[2] = std::clamp(p[2], -8.0, 3.0);
  p[3] = std::clamp(p[3], kMinLogSigma, kMaxLogSigma);
  p[4] = std::clamp(p[4], -kMaxAngle, kMaxAngle);
  p[5] = std::clamp(p[5], -kMaxAngle, kMaxAngle);
}

/// Velocity of one component on a time grid, added with weight `scale`.
void accumulate_velocity(const LognormalComponent& c, const Eigen::ArrayXd& t,
                         double scale, Eigen::ArrayXd& vx, Eigen::ArrayXd& vy) {
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    const double speed = component_speed(c, t[k]);
    if (speed == 0.0) continue;
    const double phi = component_angle(c, t[k]);
    vx[k] += scale * speed * std::cos(phi);
    vy[k] += scale * speed * std::sin(phi);
  }
}

/// Uniformly sampled velocity of a trajectory, taken from the derivative of
/// the natural spline through its points.
struct VelocityGrid {
  Eigen::ArrayXd t;
  Eigen::ArrayXd vx;
  Eigen::ArrayXd vy;
};

VelocityGrid velocity_grid(const Trajectory& trajectory, double rate) {
  std::vector<double> ts, xs, ys;
  for (const Point& p : trajectory.points()) {
    ts.push_back(p.t);
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  const NaturalCubicSpline sx(ts, xs), sy(ts, ys);
  const double t0 = trajectory.front().t;
  const double t_end = trajectory.back().t;
  const auto n = static_cast<Eigen::Index>(
                     std::ceil(trajectory.duration() * rate - 1e-9)) + 1;
  VelocityGrid grid{Eigen::ArrayXd(n), Eigen::ArrayXd(n), Eigen::ArrayXd(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = std::min(t0 + static_cast<double>(k) / rate, t_end);
    grid.t[k] = t;
    grid.vx[k] = sx.derivative(t);
    grid.vy[k] = sy.derivative(t);
  }
  return grid;
}

std::optional<Eigen::Index> largest_interior_peak(const Eigen::ArrayXd& s,
                                                  const std::vector<bool>& skip) {
  std::optional<Eigen::Index> best;
  for (Eigen::Index k = 1; k + 1 < s.size(); ++k) {
    if (skip[static_cast<std::size_t>(k)]) continue;
    if (s[k] > s[k - 1] && s[k] >= s[k + 1] && (!best || s[k] > s[*best])) {
      best = k;
    }
  }
  return best;
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

/// Seeds a component from the characteristic points of the peak at `k`:
/// the mode and the two half-height crossings. For a lognormal, the ratio of
/// the right and left crossing distances from the mode is exp(sigma * w).
LognormalComponent initial_component(const Eigen::ArrayXd& t,
                                     const Eigen::ArrayXd& smooth,
                                     const Eigen::ArrayXd& rx,
                                     const Eigen::ArrayXd& ry, Eigen::Index k,
                                     Eigen::Index left_min,
                                     Eigen::Index right_min) {
  double t_peak = t[k];
  if (k > 0 && k + 1 < t.size()) {
    const double a = smooth[k - 1], b = smooth[k], c = smooth[k + 1];
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) {
      const double offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
      t_peak += offset * (t[k + 1] - t[k]);
    }
  }
  const double v_peak = smooth[k];
  const double half = 0.5 * v_peak;

  std::optional<double> t_left, t_right;
  for (Eigen::Index j = k; j > left_min; --j) {
    if (smooth[j - 1] < half) {
      const double f = (half - smooth[j - 1]) / (smooth[j] - smooth[j - 1]);
      t_left = t[j - 1] + f * (t[j] - t[j - 1]);
      break;
    }
  }
  for (Eigen::Index j = k; j < right_min; ++j) {
    if (smooth[j + 1] < half) {
      const double f = (smooth[j] - half) / (smooth[j] - smooth[j + 1]);
      t_right = t[j] + f * (t[j + 1] - t[j]);
      break;
    }
  }

  double sigma = 0.3;
  double mode_offset = 0.0;  // exp(mu - sigma^2)
  if (t_left && t_right && t_peak > *t_left && *t_right > t_peak) {
    const double ratio = (*t_right - t_peak) / (t_peak - *t_left);
    sigma = std::clamp(std::log(std::max(ratio, 1.0 + 1e-6)) / kHalfWidth, 0.05, 1.5);
    mode_offset = (*t_right - t_peak) / std::expm1(sigma * kHalfWidth);
  } else if (t_right && *t_right > t_peak) {
    mode_offset = (*t_right - t_peak) / std::expm1(sigma * kHalfWidth);
  } else if (t_left && t_peak > *t_left) {
    mode_offset = (t_peak - *t_left) / -std::expm1(-sigma * kHalfWidth);
  } else {
    mode_offset = std::max(0.25 * (t[right_min] - t[left_min]), 1e-3);
  }

  LognormalComponent c;
  c.sigma = sigma;
  c.t0 = t_peak - mode_offset;
  c.mu = std::log(mode_offset) + sigma * sigma;
  c.D = v_peak * sigma * std::sqrt(2.0 * kPi) * std::exp(c.mu - 0.5 * sigma * sigma);

  auto direction = [&](double at) {
    const Eigen::Index i = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::lower_bound(t.begin(), t.end(), at) - t.begin()),
        0, t.size() - 1);
    return std::atan2(ry[i], rx[i]);
  };
  const double phi_peak = direction(t_peak);
  c.theta_s = c.theta_e = phi_peak;
  if (t_left && t_right) {
    const double phi_l = direction(*t_left);
    const double phi_r = phi_l + wrap_angle(direction(*t_right) - phi_l);
    // Angular progress at the two crossings: Phi(-w - sigma), Phi(w - sigma).
    const double cdf_l = normal_cdf(-kHalfWidth - sigma);
    const double cdf_r = normal_cdf(kHalfWidth - sigma);
    const double sweep = (phi_r - phi_l) / (cdf_r - cdf_l);
    if (std::abs(sweep) < 2.0 * kPi) {
      c.theta_s = phi_l - sweep * cdf_l;
      c.theta_e = c.theta_s + sweep;
    }
  }
  return c;
}

/// Fits a single component to the residual velocity on samples [lo, hi].
LognormalComponent refine_component(const LognormalComponent& seed,
                                    const Eigen::ArrayXd& t,
                                    const Eigen::ArrayXd& rx,
                                    const Eigen::ArrayXd& ry, Eigen::Index lo,
                                    Eigen::Index hi, const Window& window) {
  const Eigen::Index m = hi - lo + 1;
  const Eigen::ArrayXd tw = t.segment(lo, m);
  const Eigen::ArrayXd wx = rx.segment(lo, m);
  const Eigen::ArrayXd wy = ry.segment(lo, m);
  auto residual = [&](const Eigen::VectorXd& p) {
    Eigen::ArrayXd vx = wx, vy = wy;
    accumulate_velocity(unpack(p), tw, -1.0, vx, vy);
    Eigen::VectorXd r(2 * m);
    r << vx.matrix(), vy.matrix();
    return r;
  };
  Eigen::VectorXd p(kParams);
  pack(seed, p);
  detail::levenberg_marquardt(
      p, residual,
      [&](const Eigen::VectorXd& x) { return detail::numeric_jacobian(x, residual); },
      [&](Eigen::VectorXd& x) { project_component(x, window); }, 60);
  return unpack(p);
}

/// Joint refinement of every component against the full velocity profile.
void refine_plan(std::vector<LognormalComponent>& components,
                 const VelocityGrid& grid, const Window& window) {
  const auto count = static_cast<Eigen::Index>(components.size());
  const Eigen::Index n = grid.t.size();
  auto residual = [&](const Eigen::VectorXd& p) {
    Eigen::ArrayXd vx = grid.vx, vy = grid.vy;
    for (Eigen::Index i = 0; i < count; ++i) {
      accumulate_velocity(unpack(p.segment(i * kParams, kParams)), grid.t, -1.0,
                          vx, vy);
    }
    Eigen::VectorXd r(2 * n);
    r << vx.matrix(), vy.matrix();
    return r;
  };
  // Each column only involves its own component.
  auto jacobian = [&](const Eigen::VectorXd& p) {
    Eigen::MatrixXd J(2 * n, p.size());
    Eigen::VectorXd probe = p;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const Eigen::Index base = (j / kParams) * kParams;
      const double h = 1e-6 * std::max(1.0, std::abs(p[j]));
      Eigen::ArrayXd px = Eigen::ArrayXd::Zero(n), py = Eigen::ArrayXd::Zero(n);
      probe[j] = p[j] + h;
      accumulate_velocity(unpack(probe.segment(base, kParams)), grid.t, -1.0, px, py);
      probe[j] = p[j] - h;
      accumulate_velocity(unpack(probe.segment(base, kParams)), grid.t, 1.0, px, py);
      probe[j] = p[j];
      J.col(j) << px.matrix() / (2.0 * h), py.matrix() / (2.0 * h);
    }
    return J;
  };
  Eigen::VectorXd p(count * kParams);
  for (Eigen::Index i = 0; i < count; ++i) {
    pack(components[static_cast<std::size_t>(i)], p.segment(i * kParams, kParams));
  }
  detail::levenberg_marquardt(
      p, residual, jacobian,
      [&](Eigen::VectorXd& x) {
        for (Eigen::Index i = 0; i < count; ++i) {
          project_component(x.segment(i * kParams, kParams), window);
        }
      },
      40);
  for (Eigen::Index i = 0; i < count; ++i) {
    components[static_cast<std::size_t>(i)] = unpack(p.segment(i * kParams, kParams));
  }
}

void sort_by_onset(std::vector<LognormalComponent>& components) {
  std::stable_sort(components.begin(), components.end(),
                   [](const auto& a, const auto& b) { return a.t0 < b.t0; });
}

}  // namespace

double component_speed(const LognormalComponent& c, double t) {
  const double dt = t - c.t0;
  if (!(dt > 0.0)) return 0.0;
  const double z = std::log(dt) - c.mu;
  return c.D / (c.sigma * std::sqrt(2.0 * kPi) * dt) *
         std::exp(-z * z / (2.0 * c.sigma * c.sigma));
}

double component_progress(const LognormalComponent& c, double t) {
  const double dt = t - c.t0;
  if (!(dt > 0.0)) return 0.0;
  return normal_cdf((std::log(dt) - c.mu) / c.sigma);
}

double component_angle(const LognormalComponent& c, double t) {
  return c.theta_s + (c.theta_e - c.theta_s) * component_progress(c, t);
}

Eigen::Vector2d plan_velocity(const ActionPlan& plan, double t) {
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  for (const LognormalComponent& c : plan.components) {
    const double speed = component_speed(c, t);
    if (speed == 0.0) continue;
    const double phi = component_angle(c, t);
    v += speed * Eigen::Vector2d(std::cos(phi), std::sin(phi));
  }
  return v;
}

double plan_speed(const ActionPlan& plan, double t) {
  return plan_velocity(plan, t).norm();
}

Trajectory synthesize_window(const ActionPlan& plan, double rate_hz,
                             double t_begin, std::size_t intervals) {
  if (plan.components.empty()) throw Error(ErrorCode::EmptyPlan, "plan has no components");
  if (!(rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "rate must be positive");
  if (intervals < 1) throw Error(ErrorCode::InvalidArgument, "need at least one interval");
  std::vector<Point> out;
  out.reserve(intervals + 1);
  Eigen::Vector2d position = plan.origin;
  Eigen::Vector2d v_prev = plan_velocity(plan, t_begin);
  const double h = 1.0 / rate_hz;
  out.push_back({position.x(), position.y(), t_begin});
  for (std::size_t k = 1; k <= intervals; ++k) {
    const double t = t_begin + static_cast<double>(k) * h;
    const Eigen::Vector2d v = plan_velocity(plan, t);
    position += 0.5 * h * (v_prev + v);
    v_prev = v;
    out.push_back({position.x(), position.y(), t});
  }
  return Trajectory(std::move(out));
}

Trajectory synthesize_trajectory(const ActionPlan& plan, double rate_hz) {
  if (plan.components.empty()) throw Error(ErrorCode::EmptyPlan, "plan has no components");
  double t_begin = plan.components.front().t0;
  double t_end = t_begin;
  for (const LognormalComponent& c : plan.components) {
    t_begin = std::min(t_begin, c.t0);
    t_end = std::max(t_end, component_support_end(c));
  }
  const auto intervals = static_cast<std::size_t>(
      std::max(1.0, std::ceil((t_end - t_begin) * rate_hz - 1e-9)));
  return synthesize_window(plan, rate_hz, t_begin, intervals);
}

Extraction extract_plan(const Trajectory& trajectory,
                        const ExtractionOptions& options) {
  if (trajectory.size() < 4) {
    throw Error(ErrorCode::ExtractionFailed, "extraction needs at least 4 points");
  }
  const double rate = std::max(trajectory.mean_rate(), options.min_rate);
  const VelocityGrid grid = velocity_grid(trajectory, rate);
  const Eigen::ArrayXd reference = (grid.vx.square() + grid.vy.square()).sqrt();
  const double energy = (grid.vx.square() + grid.vy.square()).sum();
  if (!(energy > 0.0) || reference.maxCoeff() < 1e-12) {
    throw Error(ErrorCode::ExtractionFailed, "speed is zero everywhere");
  }

  const Window window{trajectory.front().t, trajectory.back().t};
  Eigen::ArrayXd rx = grid.vx, ry = grid.vy;
  std::vector<LognormalComponent> components;
  double residual_energy = energy;
  // Peaks whose fit did not lower the residual; cleared after every success.
  std::vector<bool> rejected(static_cast<std::size_t>(reference.size()), false);
  std::size_t failures = 0;
  while (components.size() < options.max_components &&
         failures < options.max_components &&
         residual_energy > options.residual_energy_fraction * energy) {
    const Eigen::ArrayXd smooth =
        detail::moving_average((rx.square() + ry.square()).sqrt(), options.smoothing_window);
    const auto peak = largest_interior_peak(smooth, rejected);
    if (!peak || smooth[*peak] < 1e-9 * reference.maxCoeff()) break;

    Eigen::Index lo = *peak, hi = *peak;
    while (lo > 0 && smooth[lo - 1] <= smooth[lo]) --lo;
    while (hi + 1 < smooth.size() && smooth[hi + 1] <= smooth[hi]) ++hi;

    const LognormalComponent seed = initial_component(grid.t, smooth, rx, ry, *peak, lo, hi);
    const LognormalComponent fitted = refine_component(seed, grid.t, rx, ry, lo, hi, window);

    Eigen::ArrayXd nx = rx, ny = ry;
    accumulate_velocity(fitted, grid.t, -1.0, nx, ny);
    const double next_energy = (nx.square() + ny.square()).sum();
    if (!(next_energy < residual_energy - 1e-9 * energy)) {
      ++failures;
      std::fill(rejected.begin() + lo, rejected.begin() + hi + 1, true);
      continue;
    }
    std::fill(rejected.begin(), rejected.end(), false);
    rx = std::move(nx);
    ry = std::move(ny);
    residual_energy = next_energy;
    components.push_back(fitted);
  }
  if (components.empty()) {
    throw Error(ErrorCode::ExtractionFailed, "no speed peak could be modelled");
  }

  auto finish = [&](std::vector<LognormalComponent> found) {
    refine_plan(found, grid, window);
    double largest = 0.0;
    for (const auto& c : found) largest = std::max(largest, c.D);
    std::erase_if(found, [&](const LognormalComponent& c) { return c.D < 1e-9 * largest; });
    sort_by_onset(found);
    Extraction out;
    out.plan.components = std::move(found);
    out.plan.origin = {trajectory.front().x, trajectory.front().y};
    out.plan.sample_rate = trajectory.mean_rate();
    std::vector<double> approx(static_cast<std::size_t>(grid.t.size()));
    for (Eigen::Index k = 0; k < grid.t.size(); ++k) {
      approx[static_cast<std::size_t>(k)] = plan_speed(out.plan, grid.t[k]);
    }
    out.snr_db = compute_snr(std::span<const double>(reference.data(), reference.size()),
                             approx);
    return out;
  };
  Extraction result = finish(std::move(components));

  // Augmentation: seed from the refined residual while below the SNR floor.
  std::fill(rejected.begin(), rejected.end(), false);
  failures = 0;
  while (result.snr_db < options.min_snr_db &&
         result.plan.components.size() < options.max_components &&
         failures < options.max_augment_failures) {
    Eigen::ArrayXd ax = grid.vx, ay = grid.vy;
    for (const auto& c : result.plan.components) accumulate_velocity(c, grid.t, -1.0, ax, ay);
    const Eigen::ArrayXd smooth =
        detail::moving_average((ax.square() + ay.square()).sqrt(), options.smoothing_window);
    const auto peak = largest_interior_peak(smooth, rejected);
    if (!peak || smooth[*peak] < 1e-9 * reference.maxCoeff()) break;
    Eigen::Index lo = *peak, hi = *peak;
    while (lo > 0 && smooth[lo - 1] <= smooth[lo]) --lo;
    while (hi + 1 < smooth.size() && smooth[hi + 1] <= smooth[hi]) ++hi;
    std::fill(rejected.begin() + lo, rejected.begin() + hi + 1, true);

    const LognormalComponent seed = initial_component(grid.t, smooth, ax, ay, *peak, lo, hi);
    auto candidate = result.plan.components;
    candidate.push_back(refine_component(seed, grid.t, ax, ay, lo, hi, window));
    Extraction next = finish(std::move(candidate));
    if (next.snr_db > result.snr_db + 0.1) {
      result = std::move(next);
      std::fill(rejected.begin(), rejected.end(), false);
      failures = 0;
    } else {
      ++failures;
    }
  }
  return result;
}

Trajectory reconstruct(const Trajectory& trajectory, const ExtractionOptions& options) {
  const Extraction extraction = extract_plan(trajectory, options);
  const double rate = trajectory.mean_rate();
  const auto intervals = static_cast<std::size_t>(
      std::max(1.0, std::round(trajectory.duration() * rate)));
  return synthesize_window(extraction.plan, rate, trajectory.front().t, intervals);
}

ActionPlan perturb_plan(const ActionPlan& plan, Rng& rng,
                        const PerturbationRanges& ranges) {
  ActionPlan out = plan;
  for (LognormalComponent& c : out.components) {
    const double scale = rng.uniform(1.0 - ranges.duration, 1.0 + ranges.duration);
    c.mu += std::log(scale);
    c.t0 += rng.uniform(-ranges.onset, ranges.onset) * c.t0;
    c.D *= 1.0 + rng.uniform(-ranges.amplitude, ranges.amplitude);
    c.theta_s *= 1.0 + rng.uniform(-ranges.angle, ranges.angle);
    c.theta_e *= 1.0 + rng.uniform(-ranges.angle, ranges.angle);
  }
  sort_by_onset(out.components);
  return out;
}

LabeledSample kinematic_synthesize(const LabeledSample& human, Rng& rng,
                                   const PerturbationRanges& ranges,
                                   const ExtractionOptions& options) {
  // Onset jitter is relative to t0, so work on a clock starting at zero.
  const Trajectory rebased = translate(human.trajectory, 0.0, 0.0, -human.trajectory.front().t);
  const Extraction extraction = extract_plan(rebased, options);
  const ActionPlan perturbed = perturb_plan(extraction.plan, rng, ranges);
  const double rate = rebased.mean_rate();
  const auto intervals = static_cast<std::size_t>(
      std::max(1.0, std::round(rebased.duration() * rate)));
  return {human.id + "/kinematic", synthesize_window(perturbed, rate, 0.0, intervals),
          Label::Synthetic, "kinematic"};
}

double compute_snr(std::span<const double> reference, std::span<const double> approx) {
  if (reference.size() != approx.size()) {
    throw Error(ErrorCode::LengthMismatch, "profiles differ in length");
  }
  if (reference.size() < 2) {
    throw Error(ErrorCode::LengthMismatch, "profiles need at least two samples");
  }
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    signal += reference[i] * reference[i];
    const double d = reference[i] - approx[i];
    noise += d * d;
  }
  if (noise <= 1e-12 * signal) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(signal / noise));
}

double nblog_rate(const ActionPlan& plan, double duration) {
  if (!(duration > 0.0)) {
    throw Error(ErrorCode::NonPositiveDuration, "duration must be positive");
  }
  return static_cast<double>(plan.components.size()) / duration;
}

std::vector<double> speed_profile(const Trajectory& trajectory) {
  std::vector<double> ts, xs, ys;
  for (const Point& p : trajectory.points()) {
    ts.push_back(p.t);
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  const NaturalCubicSpline sx(ts, xs), sy(ts, ys);
  std::vector<double> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back(std::hypot(sx.derivative(t), sy.derivative(t)));
  return out;
}

nlohmann::json to_json(const ActionPlan& plan) {
  nlohmann::json components = nlohmann::json::array();
  for (const LognormalComponent& c : plan.components) {
    components.push_back({{"t0", c.t0},
                          {"D", c.D},
                          {"mu", c.mu},
                          {"sigma", c.sigma},
                          {"theta_s", c.theta_s},
                          {"theta_e", c.theta_e}});
  }
  return {{"origin", {plan.origin.x(), plan.origin.y()}},
          {"rate", plan.sample_rate},
          {"components", components}};
}

ActionPlan plan_from_json(const nlohmann::json& doc) {
  try {
    ActionPlan plan;
    plan.origin = {doc.at("origin").at(0).get<double>(), doc.at("origin").at(1).get<double>()};
    plan.sample_rate = doc.at("rate").get<double>();
    for (const auto& c : doc.at("components")) {
      LognormalComponent comp{c.at("t0").get<double>(),    c.at("D").get<double>(),
                              c.at("mu").get<double>(),    c.at("sigma").get<double>(),
                              c.at("theta_s").get<double>(), c.at("theta_e").get<double>()};
      if (!(comp.D > 0.0) || !(comp.sigma > 0.0)) {
        throw Error(ErrorCode::ParseError, "component needs D > 0 and sigma > 0");
      }
      plan.components.push_back(comp);
    }
    if (plan.components.empty()) throw Error(ErrorCode::EmptyPlan, "plan has no components");
    sort_by_onset(plan.components);
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad action plan: ") + e.what());
  }
}

}  // namespace handproof
