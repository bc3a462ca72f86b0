#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>

#include "sasim/rng.hpp"
#include "sasim/vehicle.hpp"

using namespace sasim;

namespace {

// Forward integration of a plan's pure profile (no interference): time to
// cover `dist` from speed v0, stepped at 1 ms.
double profile_arrival_time(const TrajectoryPlan& plan, double v0, double dist,
                            double a_max = 2.5, double b_comfort = 4.5) {
  double t = 0.0, x = 0.0, v = v0;
  const double dt = 0.001;
  while (x < dist) {
    v = detail::plan_profile_speed(plan, v, dt, a_max, dist - x, b_comfort);
    x += v * dt;
    t += dt;
    if (t > 3600.0) break;
  }
  return t;
}

}  // namespace

TEST_CASE("krauss step") {
  KraussParams p;
  SECTION("free flow clamps to the speed limit") {
    CHECK(krauss_step(14.0, std::nullopt, 0.0, p, 1.0, 15.0, 2.5) == Catch::Approx(15.0));
  }
  SECTION("standing start behind a stopped leader") {
    // v_safe = 2 / (0 + 1) = 2; new speed = min(2.5, 2, 15) = 2.
    CHECK(krauss_step(0.0, 2.0, 0.0, p, 1.0, 15.0, 2.5) == Catch::Approx(2.0));
  }
  SECTION("zero gap blocks") {
    CHECK(krauss_step(0.0, 0.0, 0.0, p, 1.0, 15.0, 2.5) == Catch::Approx(0.0));
  }
  SECTION("never negative, never above the envelope") {
    CounterRng rng(3, "krauss");
    for (int i = 0; i < 500; ++i) {
      double v = rng.next() * 20.0;
      double gap = rng.next() * 50.0;
      double lv = rng.next() * 15.0;
      double out = krauss_step(v, gap, lv, p, 0.1, 15.0, 2.5);
      CHECK(out >= 0.0);
      CHECK(out <= std::min(v + 0.25, 15.0) + kEps);
      CHECK(out <= std::max(0.0, krauss_safe_speed(gap, lv, v, p)) + kEps);
    }
  }
}

TEST_CASE("plan selection") {
  SECTION("pass always accelerates to the limit") {
    auto plan = plan_sas(430, 12, 15, 2.5, Label::Pass);
    CHECK(plan.kind == PlanKind::AccelerateCruise);
    CHECK(plan.cruise_speed == Catch::Approx(15.0));
  }
  SECTION("glide-cruise root and timing") {
    auto plan = plan_sas(430, 12, 15, 2.5, Label::Wait, 40);
    REQUIRE(plan.kind == PlanKind::GlideCruise);
    CHECK(plan.cruise_speed == Catch::Approx(10.583).margin(1e-3));
    // Glide segment: (12 - u) / 0.15 = about 9.45 s.
    CHECK((12.0 - plan.cruise_speed) / kGlideDecel == Catch::Approx(9.45).margin(0.01));
    CHECK(profile_arrival_time(plan, 12, 430) == Catch::Approx(40.0).margin(0.05));
  }
  SECTION("infeasible glide falls back to constant braking") {
    auto plan = plan_sas(300, 12, 15, 2.5, Label::Wait, 40);
    REQUIRE(plan.kind == PlanKind::BrakeConstant);
    CHECK(plan.brake_rate == Catch::Approx(0.225));
    CHECK(plan.cruise_speed == Catch::Approx(3.0));  // terminal speed
    CHECK(profile_arrival_time(plan, 12, 300) == Catch::Approx(40.0).margin(0.05));
  }
  SECTION("negative terminal speed means stop and wait") {
    auto plan = plan_sas(160, 15, 15, 2.5, Label::Wait, 40);
    CHECK(plan.kind == PlanKind::StopAndWait);
  }
  SECTION("a horizon too short to matter proceeds at the limit") {
    // d > v * t_res: the vehicle cannot reach the line before the green.
    auto plan = plan_sas(160, 12, 15, 2.5, std::nullopt, 10);
    CHECK(plan.kind == PlanKind::AccelerateCruise);
  }
  SECTION("non-positive horizon is rejected") {
    CHECK_THROWS_AS(plan_sas(100, 12, 15, 2.5, Label::Wait, 0.0), NonPositiveHorizon);
    CHECK_THROWS_AS(plan_sas(100, 12, 15, 2.5, std::nullopt, -3.0), NonPositiveHorizon);
  }
}

TEST_CASE("glide and brake plans meet the arrival deadline") {
  CounterRng rng(17, "plans");
  int feasible = 0;
  for (int i = 0; i < 300; ++i) {
    double v = 5.0 + rng.next() * 10.0;
    double d = 100.0 + rng.next() * 500.0;
    double t = 10.0 + rng.next() * 80.0;
    TrajectoryPlan plan;
    try {
      plan = plan_sas(d, v, 15.0, 2.5, Label::Wait, t);
    } catch (const DomainError&) {
      continue;
    }
    if (plan.kind == PlanKind::GlideCruise || plan.kind == PlanKind::BrakeConstant) {
      ++feasible;
      CHECK(profile_arrival_time(plan, v, d) == Catch::Approx(t).margin(0.5));
      CHECK(plan.cruise_speed >= 0.0);
      CHECK(plan.cruise_speed <= 15.0 + kEps);
    }
  }
  CHECK(feasible > 50);
}

TEST_CASE("plan execution") {
  SafetyEnvelope env;
  env.speed_limit = 15.0;
  SECTION("accelerate-cruise clamps at the cruise speed") {
    VehicleState s;
    s.speed = 14.9;
    s.mode = DriveMode::SasPlan;
    TrajectoryPlan plan{PlanKind::AccelerateCruise, 15.0, 0.0, 0.0};
    s = follow_plan(std::move(s), plan, 0.1, env);
    CHECK(s.speed == Catch::Approx(15.0));
  }
  SECTION("one glide step") {
    VehicleState s;
    s.speed = 12.0;
    s.mode = DriveMode::SasPlan;
    TrajectoryPlan plan{PlanKind::GlideCruise, 10.583, 0.0, 40.0};
    s = follow_plan(std::move(s), plan, 0.1, env);
    CHECK(s.speed == Catch::Approx(11.985));
  }
  SECTION("a binding safety override flips to car-following after the dwell") {
    VehicleState s;
    s.speed = 15.0;
    s.mode = DriveMode::SasPlan;
    s.plan = TrajectoryPlan{PlanKind::AccelerateCruise, 15.0, 0.0, 0.0};
    SafetyEnvelope queue = env;
    queue.leader_gap = 8.0;  // slow queue tail ahead
    queue.leader_speed = 4.0;
    int steps_until_switch = 0;
    while (s.mode == DriveMode::SasPlan && steps_until_switch < 200) {
      s = follow_plan(std::move(s), *s.plan, 0.1, queue);
      ++steps_until_switch;
    }
    CHECK(s.mode == DriveMode::Krauss);
    CHECK_FALSE(s.plan.has_value());
    // The dwell is 3 s at dt = 0.1: the switch lands just past 30 steps.
    CHECK(steps_until_switch > 30);
    CHECK(steps_until_switch < 40);
  }
  SECTION("a transient override does not switch modes") {
    VehicleState s;
    s.speed = 15.0;
    s.mode = DriveMode::SasPlan;
    TrajectoryPlan plan{PlanKind::AccelerateCruise, 15.0, 0.0, 0.0};
    SafetyEnvelope queue = env;
    queue.leader_gap = 10.0;
    queue.leader_speed = 5.0;
    for (int i = 0; i < 20; ++i) s = follow_plan(std::move(s), plan, 0.1, queue);
    CHECK(s.mode == DriveMode::SasPlan);  // 2 s < dwell
    s.override_dwell = 0.0;
  }
  SECTION("stop-and-wait comes to rest near the line") {
    VehicleState s;
    s.speed = 12.0;
    s.mode = DriveMode::SasPlan;
    TrajectoryPlan plan{PlanKind::StopAndWait, 0.0, 0.0, 60.0};
    double x = 0.0, d = 160.0;
    for (int i = 0; i < 4000 && s.speed > 0.01; ++i) {
      SafetyEnvelope e = env;
      e.dist_to_stopline = d - x;
      s = follow_plan(std::move(s), plan, 0.1, e);
      x += s.speed * 0.1;
    }
    CHECK(s.speed < 0.01);
    CHECK(x <= 160.0);
    CHECK(x > 150.0);
  }
}
