#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "sasim/core.hpp"

namespace sasim {

struct KraussParams {
  double tau = 1.0;        // reaction time, s
  double b_comfort = 4.5;  // comfortable deceleration, m/s^2
  double sigma = 0.0;      // driver imperfection in [0,1]; 0 keeps runs deterministic
};

struct TrajectoryPlan {
  PlanKind kind = PlanKind::AccelerateCruise;
  double cruise_speed = 0.0;  // target speed (terminal speed for BrakeConstant)
  double brake_rate = 0.0;    // BrakeConstant only, > 0
  double target_time = 0.0;   // planning horizon to the stop line, seconds
};

struct VehicleState {
  int id = 0;
  int route = 0;               // demand index
  double position = 0.0;       // meters along the route
  double speed = 0.0;          // m/s
  double a_max = kDefaultAccel;
  double length = kVehicleLength;
  DriveMode mode = DriveMode::Krauss;
  bool sas_equipped = false;
  std::optional<Label> label;
  std::optional<TrajectoryPlan> plan;
  double override_dwell = 0.0;  // seconds the safety bound has been binding
};

inline double krauss_safe_speed(double gap, double leader_speed, double follower_speed,
                                const KraussParams& p) {
  gap = std::max(0.0, gap);
  return leader_speed +
         (gap - leader_speed * p.tau) /
             ((leader_speed + follower_speed) / (2.0 * p.b_comfort) + p.tau);
}

// One Krauss update: accelerate toward the limit, bounded by the safe speed.
// `rand01` feeds the sigma imperfection; pass 0 for deterministic motion.
inline double krauss_step(double follower_speed, std::optional<double> leader_gap,
                          double leader_speed, const KraussParams& p, double dt,
                          double speed_limit, double a_max, double rand01 = 0.0) {
  double v = follower_speed + a_max * dt;
  if (leader_gap)
    v = std::min(v, krauss_safe_speed(*leader_gap, leader_speed, follower_speed, p));
  v = std::min(v, speed_limit);
  if (p.sigma > 0.0) v -= p.sigma * a_max * dt * rand01;
  return std::max(0.0, v);
}

// Near-optimal speed trajectory selection. PASS vehicles proceed as fast as
// possible. Otherwise the vehicle aims to reach the stop line exactly when
// the next green begins (t_res from now): first try gliding at the engine-off
// rate to a cruise speed, then a minimal constant braking over the whole
// horizon, and as a last resort stop at the line and wait.
inline TrajectoryPlan plan_sas(double dist_to_stopline, double speed, double speed_limit,
                               double a_max, std::optional<Label> label, double t_res = 0.0) {
  (void)a_max;
  if (label && *label == Label::Pass)
    return {PlanKind::AccelerateCruise, speed_limit, 0.0, 0.0};
  if (t_res <= 0.0) throw NonPositiveHorizon("plan_sas: t_res must be > 0");
  if (dist_to_stopline <= 0.0) throw DomainError("plan_sas: non-positive distance");

  const double g = kGlideDecel;
  const double v = std::min(speed, speed_limit);
  const double d = dist_to_stopline;
  const double t = t_res;

  // Glide from v to u, cruise at u, arrive at t:
  //   (v^2 - u^2)/(2g) + u * (t - (v - u)/g) = d
  //   => u^2 + 2*(g*t - v)*u + (v^2 - 2*g*d) = 0, take the larger root.
  const double half_b = g * t - v;
  const double c = v * v - 2.0 * g * d;
  const double disc = half_b * half_b - c;
  if (disc >= 0.0) {
    double u = -half_b + std::sqrt(disc);
    if (u > kEps && u <= v + kEps)
      return {PlanKind::GlideCruise, std::min(u, v), 0.0, t};
  }

  // Minimal constant braking that still meets the boundary conditions: the
  // cruise segment degenerates and the vehicle brakes over the full horizon.
  const double beta = 2.0 * (v * t - d) / (t * t);
  if (beta <= kEps) {
    // Cannot reach the line by t even without slowing down; the green will
    // already be on when the vehicle arrives, so proceed at the limit.
    return {PlanKind::AccelerateCruise, speed_limit, 0.0, 0.0};
  }
  const double terminal = 2.0 * d / t - v;
  if (terminal < -kEps) return {PlanKind::StopAndWait, 0.0, 0.0, t};
  return {PlanKind::BrakeConstant, std::max(terminal, 0.0), beta, t};
}

// Everything follow_plan needs to know about the outside world for one step.
struct SafetyEnvelope {
  std::optional<double> leader_gap;
  double leader_speed = 0.0;
  double speed_limit = 0.0;
  double dist_to_stopline = std::numeric_limits<double>::infinity();
  KraussParams krauss;
};

namespace detail {

inline double plan_profile_speed(const TrajectoryPlan& plan, double v, double dt, double a_max,
                                 double dist_to_stopline, double b_comfort) {
  switch (plan.kind) {
    case PlanKind::AccelerateCruise:
      if (v < plan.cruise_speed) return std::min(v + a_max * dt, plan.cruise_speed);
      return std::max(v - kGlideDecel * dt, plan.cruise_speed);
    case PlanKind::GlideCruise:
      if (v > plan.cruise_speed) return std::max(v - kGlideDecel * dt, plan.cruise_speed);
      return std::min(v + a_max * dt, plan.cruise_speed);
    case PlanKind::BrakeConstant:
      if (v > plan.cruise_speed) return std::max(v - plan.brake_rate * dt, plan.cruise_speed);
      return v;
    case PlanKind::StopAndWait: {
      // Glide, bounded by the comfortable stopping curve anchored at the line.
      double glide = std::max(v - kGlideDecel * dt, 0.0);
      double curve = std::sqrt(2.0 * b_comfort * std::max(dist_to_stopline - 1.0, 0.0));
      return std::min(glide, curve);
    }
  }
  return v;
}

}  // namespace detail

// Execute one step of the plan. The Krauss safe speed w.r.t. the leader is an
// upper bound at every step; when it binds for longer than `switch_dwell`
// seconds the vehicle gives up on the plan and falls back to car-following.
inline VehicleState follow_plan(VehicleState s, const TrajectoryPlan& plan, double dt,
                                const SafetyEnvelope& env, double switch_dwell = 3.0) {
  double v_plan = detail::plan_profile_speed(plan, s.speed, dt, s.a_max, env.dist_to_stopline,
                                             env.krauss.b_comfort);
  v_plan = std::min(v_plan, env.speed_limit);
  double v = v_plan;
  bool bound = false;
  if (env.leader_gap) {
    double v_safe = krauss_safe_speed(*env.leader_gap, env.leader_speed, s.speed, env.krauss);
    if (v_safe < v_plan - kEps) {
      v = std::max(0.0, v_safe);
      bound = true;
    }
  }
  s.speed = std::max(0.0, v);
  s.override_dwell = bound ? s.override_dwell + dt : 0.0;
  if (s.override_dwell > switch_dwell + kEps) {
    s.mode = DriveMode::Krauss;
    s.plan.reset();
    s.override_dwell = 0.0;
  }
  return s;
}

}  // namespace sasim
