// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "handproof/error.hpp"
#include "handproof/lognormal.hpp"

using namespace handproof;

namespace {

const LognormalComponent kStroke{0.0, 10.0, -1.8, 0.3, 0.0, 0.0};

double trapezoid_speed(const LognormalComponent& c, double a, double b, double rate) {
  const auto n = static_cast<int>(std::round((b - a) * rate));
  const double h = (b - a) / n;
  double sum = 0.5 * (component_speed(c, a) + component_speed(c, b));
  for (int k = 1; k < n; ++k) sum += component_speed(c, a + k * h);
  return sum * h;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

std::vector<double> analytic_speed(const ActionPlan& plan, const Trajectory& grid) {
  std::vector<double> out;
  for (const Point& p : grid.points()) out.push_back(plan_speed(plan, p.t));
  return out;
}

}  // namespace

TEST_CASE("component_speed") {
  CHECK(component_speed(kStroke, 0.0) == 0.0);
  CHECK(component_speed(kStroke, -1.0) == 0.0);

  // Dense grid search for the peak.
  double best_t = 0.0, best_v = 0.0;
  for (int i = 1; i <= 1'000'000; ++i) {
    const double t = i * 1e-6;
    const double v = component_speed(kStroke, t);
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  }
  CHECK(best_t == doctest::Approx(0.1511).epsilon(1e-3));
  CHECK(std::abs(best_t - component_peak_time(kStroke)) < 2e-6);

  CHECK(trapezoid_speed(kStroke, 0.0, 5.0, 10'000.0) == doctest::Approx(10.0).epsilon(1e-3));
}

TEST_CASE("component_angle") {
  LognormalComponent straight = kStroke;
  straight.theta_s = straight.theta_e = 0.7;
  for (double t : {-1.0, 0.0, 0.05, 0.2, 3.0}) CHECK(component_angle(straight, t) == 0.7);

  LognormalComponent turn = kStroke;
  turn.theta_e = std::numbers::pi / 2;
  CHECK(component_angle(turn, 1e6) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  // Oracle: Phi_N(-0.3) via erf.
  const double cdf = 0.5 * (1.0 + std::erf(-0.3 / std::numbers::sqrt2));
  CHECK(cdf == doctest::Approx(0.3821).epsilon(1e-4));
  CHECK(component_angle(turn, 0.1511) == doctest::Approx(0.600).epsilon(1e-3));
  CHECK(component_angle(turn, component_peak_time(turn)) ==
        doctest::Approx(std::numbers::pi / 2 * cdf).epsilon(1e-12));
}

TEST_CASE("angle is monotone and bounded; speed integrates to D") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const LognormalComponent c = testing::random_plan(rng, 1).components.front();
    const double lo = std::min(c.theta_s, c.theta_e), hi = std::max(c.theta_s, c.theta_e);
    const bool increasing = c.theta_e >= c.theta_s;
    double prev = component_angle(c, c.t0);
    for (double t = c.t0; t < c.t0 + 3.0; t += 0.002) {
      const double a = component_angle(c, t);
      CHECK(a >= lo - 1e-15);
      CHECK(a <= hi + 1e-15);
      CHECK((increasing ? a >= prev : a <= prev));
      prev = a;
    }
    CHECK(trapezoid_speed(c, c.t0, c.t0 + 10.0, 10'000.0) == doctest::Approx(c.D).epsilon(1e-3));
  }
}

TEST_CASE("synthesize_trajectory") {
  ActionPlan plan;
  plan.origin = {3.0, -2.0};
  plan.components = {kStroke};
  const Trajectory one = synthesize_trajectory(plan, 100.0);
  CHECK(one.back().x - 3.0 == doctest::Approx(10.0).epsilon(1e-4));
  CHECK(std::abs(one.back().y + 2.0) < 1e-3);
  CHECK(one.front().x == 3.0);

  const Trajectory fine = synthesize_trajectory(plan, 200.0);
  CHECK(std::abs(fine.back().x - one.back().x) < 1e-4);
  CHECK(std::abs(fine.back().y - one.back().y) < 1e-4);

  ActionPlan twice = plan;
  LognormalComponent second = kStroke;
  second.t0 = component_support_end(kStroke) + 0.1;
  twice.components.push_back(second);
  const Trajectory two = synthesize_trajectory(twice, 100.0);
  CHECK(two.back().x - 3.0 == doctest::Approx(20.0).epsilon(1e-3));

  CHECK(code_of([] { synthesize_trajectory(ActionPlan{}, 100.0); }) == ErrorCode::EmptyPlan);
}

TEST_CASE("superposition is linear over a shared window") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    ActionPlan a = testing::random_plan(rng, 2);
    ActionPlan b = testing::random_plan(rng, 2);
    for (auto& c : b.components) c.t0 += 2.0;
    a.origin = b.origin = Eigen::Vector2d::Zero();
    ActionPlan both = a;
    both.components.insert(both.components.end(), b.components.begin(), b.components.end());
    const auto end_of = [](const ActionPlan& p) {
      const Trajectory t = synthesize_window(p, 100.0, 0.0, 400);
      return Eigen::Vector2d(t.back().x, t.back().y);
    };
    const Eigen::Vector2d sum = end_of(a) + end_of(b);
    CHECK((end_of(both) - sum).norm() <= 1e-6 * sum.norm());
  }
}

TEST_CASE("extract_plan on a single noiseless stroke") {
  ActionPlan plan;
  plan.origin = {0.0, 0.0};
  plan.components = {{0.05, 40.0, -1.6, 0.25, 0.3, 1.2}};
  const Trajectory traj = synthesize_trajectory(plan, 100.0);
  const Extraction ex = extract_plan(traj);
  REQUIRE(ex.plan.components.size() == 1);
  CHECK(ex.snr_db >= 25.0);
  const LognormalComponent& c = ex.plan.components.front();
  CHECK(c.D == doctest::Approx(40.0).epsilon(0.02));
  CHECK(c.sigma == doctest::Approx(0.25).epsilon(0.05));
  CHECK(c.mu == doctest::Approx(-1.6).epsilon(0.05));
  CHECK(std::abs(c.t0 - 0.05) < 0.01);
  CHECK(std::abs(c.theta_s - 0.3) < 0.05);
  CHECK(std::abs(c.theta_e - 1.2) < 0.05);

  // Independent check of the SNR against the generating plan.
  const auto reference = analytic_speed(plan, traj);
  const auto approx = analytic_speed(ex.plan, traj);
  CHECK(compute_snr(reference, approx) >= 25.0);
}

TEST_CASE("extract_plan separates two strokes") {
  ActionPlan plan;
  plan.components = {{0.0, 30.0, -1.7, 0.2, 0.0, 0.2}, {0.6, 25.0, -1.7, 0.2, 2.0, 2.4}};
  const Extraction ex = extract_plan(synthesize_trajectory(plan, 100.0));
  CHECK(ex.plan.components.size() == 2);
  CHECK(ex.snr_db >= 25.0);
}

TEST_CASE("extract_plan failures") {
  std::vector<Point> still;
  for (int k = 0; k < 20; ++k) still.push_back({1.0, 1.0, k * 0.01});
  CHECK(code_of([&] { extract_plan(Trajectory(still)); }) == ErrorCode::ExtractionFailed);
  CHECK(code_of([] { extract_plan(Trajectory({{0, 0, 0}, {1, 0, 0.1}})); }) ==
        ErrorCode::ExtractionFailed);
}

TEST_CASE("extract -> synthesize round trip on random plans") {
  Rng rng(2024);
  int passed = 0;
  const int trials = 12;
  for (int trial = 0; trial < trials; ++trial) {
    const ActionPlan plan = testing::random_plan(rng, 2 + trial % 3);
    const Trajectory traj = synthesize_trajectory(plan, 100.0);
    const Extraction ex = extract_plan(traj);
    const double snr = compute_snr(analytic_speed(plan, traj), analytic_speed(ex.plan, traj));
    if (snr >= 25.0) ++passed;
  }
  CHECK(passed >= trials * 9 / 10);
}

TEST_CASE("reconstruct") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const ActionPlan plan = testing::random_plan(rng, 3);
    const Trajectory traj = synthesize_trajectory(plan, 100.0);
    const Trajectory rec = reconstruct(traj);
    CHECK(std::abs(rec.duration() - traj.duration()) <= 1.0 / 100.0 + 1e-12);
    CHECK(rec.front().x == traj.front().x);
    CHECK(rec.front().y == traj.front().y);
    double path = 0.0;
    for (std::size_t k = 1; k < traj.size(); ++k) {
      path += std::hypot(traj[k].x - traj[k - 1].x, traj[k].y - traj[k - 1].y);
    }
    CHECK(std::hypot(rec.back().x - traj.back().x, rec.back().y - traj.back().y) < 0.05 * path);
  }
}

TEST_CASE("perturb_plan") {
  Rng seed_rng(1);
  const ActionPlan plan = testing::random_plan(seed_rng, 4);

  Rng a(42), b(42);
  const ActionPlan pa = perturb_plan(plan, a), pb = perturb_plan(plan, b);
  CHECK(pa.components == pb.components);

  Rng z(42);
  CHECK(perturb_plan(plan, z, PerturbationRanges::none()).components == plan.components);

  for (std::uint64_t s = 0; s < 2000; ++s) {
    Rng rng(s);
    const ActionPlan p = perturb_plan(plan, rng);
    REQUIRE(p.components.size() == plan.components.size());
    for (std::size_t i = 0; i < p.components.size(); ++i) {
      // Components are re-sorted; pair them by amplitude order of draws.
      const auto& orig = plan.components[i];
      const auto& it = std::find_if(p.components.begin(), p.components.end(), [&](const auto& c) {
        return std::abs(c.t0 - orig.t0) <= 0.1 * std::abs(orig.t0) + 1e-15 &&
               std::abs(std::exp(c.mu - orig.mu) - 1.0) <= 0.1 + 1e-12;
      });
      CHECK(it != p.components.end());
    }
    for (std::size_t i = 1; i < p.components.size(); ++i) {
      CHECK(p.components[i - 1].t0 <= p.components[i].t0);
    }
  }
}

TEST_CASE("compute_snr") {
  const std::vector<double> ref{1, 1, 1, 1};
  CHECK(compute_snr(ref, ref) == kSnrCapDb);
  CHECK(compute_snr(ref, std::vector<double>{0, 0, 0, 0}) == doctest::Approx(0.0));
  CHECK(compute_snr(ref, std::vector<double>{1, 1, 1, 0}) ==
        doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-12));
  CHECK(compute_snr(ref, std::vector<double>{1, 1, 1, 0}) == doctest::Approx(6.02).epsilon(1e-3));
  CHECK(code_of([&] { compute_snr(ref, std::vector<double>{1, 1}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("nblog_rate") {
  ActionPlan six;
  six.components.assign(6, kStroke);
  CHECK(nblog_rate(six, 1.2) == doctest::Approx(5.0).epsilon(1e-12));
  ActionPlan one;
  one.components = {kStroke};
  CHECK(nblog_rate(one, 1.0) == 1.0);
  CHECK(code_of([&] { nblog_rate(one, 0.0); }) == ErrorCode::NonPositiveDuration);

  // Support of exactly 0.5 s: exp(mu + 4 sigma) = 0.5.
  LognormalComponent half{0.0, 30.0, std::log(0.5) - 1.0, 0.25, 0.5, 0.9};
  ActionPlan stroke;
  stroke.components = {half};
  const Trajectory traj = synthesize_trajectory(stroke, 100.0);
  CHECK(traj.duration() == doctest::Approx(0.5).epsilon(1e-9));
  const Extraction ex = extract_plan(traj);
  CHECK(nblog_rate(ex.plan, traj.duration()) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("plan json round trip") {
  Rng rng(8);
  const ActionPlan plan = testing::random_plan(rng, 3);
  const ActionPlan back = plan_from_json(nlohmann::json::parse(to_json(plan).dump()));
  CHECK(back.components == plan.components);
  CHECK(back.origin == plan.origin);
  CHECK(back.sample_rate == plan.sample_rate);
}
