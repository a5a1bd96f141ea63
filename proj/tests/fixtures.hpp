// SPDX-License-Identifier: Apache-2.0
// Shared generators for tests and the acceptance suite.
#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "handproof/lognormal.hpp"
#include "handproof/random.hpp"
#include "handproof/sample.hpp"

namespace handproof::testing {

/// Handwriting-like plan: strokes 80-250 ms apart, lognormal shapes in the
/// range typical of pen movements.
inline ActionPlan random_plan(Rng& rng, int components) {
  ActionPlan plan;
  plan.origin = {rng.uniform(-50, 50), rng.uniform(-50, 50)};
  plan.sample_rate = 100.0;
  double t0 = rng.uniform(0.0, 0.05);
  for (int i = 0; i < components; ++i) {
    LognormalComponent c;
    c.t0 = t0;
    c.D = rng.uniform(20.0, 80.0);
    c.mu = rng.uniform(-1.9, -1.4);
    c.sigma = rng.uniform(0.15, 0.35);
    c.theta_s = rng.uniform(-std::numbers::pi, std::numbers::pi);
    c.theta_e = c.theta_s + rng.uniform(-1.0, 1.0);
    plan.components.push_back(c);
    t0 += rng.uniform(0.08, 0.25);
  }
  return plan;
}

/// Human stand-in: a random plan rendered at a jittery digitizer clock with
/// small positional noise. Timestamps are irregular like a real event stream.
inline LabeledSample pseudo_human(Rng& rng, const std::string& id) {
  const int n = 2 + static_cast<int>(rng.below(4));
  const ActionPlan plan = random_plan(rng, n);
  const double rate = rng.uniform(80.0, 200.0);
  const Trajectory clean = synthesize_trajectory(plan, rate);
  std::vector<Point> pts;
  const double period = 1.0 / rate;
  double t = 0.0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    const Point& p = clean[k];
    pts.push_back({p.x + 0.15 * rng.normal(), p.y + 0.15 * rng.normal(), t});
    t += period * rng.uniform(0.5, 1.5);
  }
  return {id, Trajectory(std::move(pts)), Label::Human, "pseudo-human"};
}

}  // namespace handproof::testing
