#pragma once

// Test-only helpers: independent oracles and scenario loading. These stay
// deliberately separate from the library implementation paths they check.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sasim/predictor.hpp"
#include "sasim/scenario.hpp"
#include "sasim/signal_control.hpp"

namespace testsupport {

inline std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline sasim::NetworkSpec load_scenario(const char* name) {
  return sasim::parse_scenario(read_file(std::string(SASIM_SCENARIO_DIR) + "/" + name));
}

// Brute-force oracle: simulate the time-gap actuation machine over point
// arrivals at the actuator (continuous time, no dt grid) and read off which
// vehicles clear the stop line before the green ends.
struct PointArrivalOutcome {
  double green_end = 0.0;
  std::vector<bool> passes;  // aligned with the sorted arrival list
};

inline PointArrivalOutcome simulate_point_arrivals(std::vector<double> arrivals,
                                                   const sasim::PredictorConfig& cfg) {
  std::sort(arrivals.begin(), arrivals.end());
  const double eps = 1e-9;
  double green_end = cfg.min_duration;
  bool any = false;
  double last = 0.0;
  for (double e : arrivals) {
    if (e > green_end + eps) continue;           // phase already over
    if (e < cfg.t_th - eps) continue;            // actuation not yet enabled
    if (e >= cfg.max_duration - eps) continue;   // maximum reached
    bool ok = any ? (e - last <= cfg.min_gap + eps)
                  : (e - cfg.t_th <= cfg.min_gap + eps);
    if (!ok) continue;
    any = true;
    last = e;
    green_end = std::min(std::max(green_end, e + cfg.t_a_i), cfg.max_duration);
  }
  PointArrivalOutcome out;
  out.green_end = green_end;
  out.passes.reserve(arrivals.size());
  for (double e : arrivals) out.passes.push_back(e + cfg.t_a_i <= green_end + eps);
  return out;
}

// Same machine realized through the dt-stepped controller: arrivals snapped
// to the 0.1 s grid actuate a live SignalController.
inline double realized_green_duration(const std::vector<double>& arrivals_sorted,
                                      const sasim::SignalSpec& sig,
                                      const sasim::ActuationParams& ap) {
  sasim::SignalController ctrl(sig, ap);
  std::size_t next = 0;
  long long steps = std::llround(sig.cycle_length / sasim::kDt);
  for (long long k = 0; k <= steps; ++k) {
    double now = k * sasim::kDt;
    ctrl.tick(now);
    while (next < arrivals_sorted.size() && now >= arrivals_sorted[next] - 1e-9) {
      ctrl.actuate(now);
      ++next;
    }
    if (!ctrl.terminations().empty()) break;
  }
  return ctrl.terminations().empty() ? -1.0 : ctrl.terminations()[0].green_duration;
}

// Kinematic forward integration of accelerate-then-cruise travel.
inline double integrate_travel_time(double v, double d, double sl, double a,
                                    double dt = 0.001) {
  double x = 0.0, t = 0.0;
  while (x < d) {
    v = std::min(sl, v + a * dt);
    x += v * dt;
    t += dt;
    if (t > 1e5) break;
  }
  return t;
}

}  // namespace testsupport
