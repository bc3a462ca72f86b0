#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "sasim/core.hpp"
#include "sasim/scenario.hpp"
#include "sasim/signal_control.hpp"

namespace sasim {

struct PredictorConfig {
  double assumed_accel = 2.75;  // substituted in RandomUnknown mode
  double t_a_i = 0.0;
  double t_th = 0.0;
  double min_gap = 3.0;
  double min_duration = 0.0;
  double max_duration = 0.0;
  double cycle_length = 0.0;

  static PredictorConfig derive(const SignalSpec& sig, const ActuationParams& ap,
                                double assumed_accel = 2.75) {
    PredictorConfig c;
    const PhaseSpec& act = sig.phases[sig.actuated_phase_index()];
    c.assumed_accel = assumed_accel;
    c.t_a_i = ap.t_a_i;
    c.t_th = ap.t_th;
    c.min_gap = sig.min_gap;
    c.min_duration = act.min_duration;
    c.max_duration = act.max_duration;
    c.cycle_length = sig.cycle_length;
    return c;
  }
};

// One counter crossing mapped into the phase clock. Records live for one
// cycle and are erased on rollover.
struct CounterRecord {
  int vehicle = 0;
  double crossing_speed = 0.0;
  double t_count = 0.0;  // phase clock at the counter
  double t_est = 0.0;    // phase clock of the estimated actuator arrival
  std::optional<Label> label;
};

// Counter-to-actuator travel time: accelerate to the speed limit, cruise the
// rest. Falls back to the pure-acceleration root when the link is too short
// to reach the limit.
inline double estimate_travel_time(double v, double d, double sl, double a) {
  if (v > sl + kEps) throw DomainError("estimate_travel_time: speed above the limit");
  if (d <= 0.0) throw DomainError("estimate_travel_time: non-positive distance");
  if (a <= 0.0) throw DomainError("estimate_travel_time: non-positive acceleration");
  v = std::min(v, sl);
  double accel_dist = (sl * sl - v * v) / (2.0 * a);
  if (accel_dist <= d + kEps) return (sl - v) / a + (d - accel_dist) / sl;
  return (-v + std::sqrt(v * v + 2.0 * a * d)) / a;
}

// PASS/WAIT decision for an estimated arrival e_i against the store. Scans
// estimates in ascending order: the first one inside [t_th, t_th + min_gap]
// anchors the actuation chain; each later estimate keeps the chain alive if
// it follows within min_gap (inclusive) and stays below max_duration. The
// vehicle passes iff it arrives before the threshold, or the chain reaches it
// unbroken and it can still clear the stop line by max_duration.
inline Label label_vehicle(const std::vector<CounterRecord>& sorted_records, double t_est_i,
                           const PredictorConfig& cfg) {
  const double w_lo = cfg.t_th;
  const double w_hi = cfg.t_th + cfg.min_gap;
  if (t_est_i < w_lo - kEps) return Label::Pass;

  bool anchored = false;
  double last = 0.0;
  for (const auto& r : sorted_records) {
    const double e = r.t_est;
    if (e > t_est_i + kEps) break;  // sorted: later estimates cannot matter
    if (!anchored) {
      if (e >= w_lo - kEps && e <= w_hi + kEps) {
        anchored = true;
        last = e;
      }
      continue;
    }
    if (e - last > cfg.min_gap + kEps) return Label::Wait;
    if (e >= cfg.max_duration - kEps) return Label::Wait;
    last = e;
  }
  if (!anchored) {
    if (t_est_i > w_hi + kEps) return Label::Wait;  // window passed without actuation
    last = t_est_i;                                 // the vehicle is the anchor itself
  }
  if (t_est_i - last > cfg.min_gap + kEps) return Label::Wait;
  if (t_est_i >= cfg.max_duration - kEps) return Label::Wait;
  return (t_est_i + cfg.t_a_i <= cfg.max_duration + kEps) ? Label::Pass : Label::Wait;
}

// Green length estimate from the store: walk the same actuation chain the
// controller would grant and hold the green until the last admitted vehicle
// clears the stop line, clamped to [min_duration, max_duration].
inline double estimate_green(const std::vector<CounterRecord>& sorted_records,
                             const PredictorConfig& cfg) {
  const double w_lo = cfg.t_th;
  const double w_hi = cfg.t_th + cfg.min_gap;
  bool anchored = false;
  double last = 0.0;
  for (const auto& r : sorted_records) {
    const double e = r.t_est;
    if (!anchored) {
      if (e >= w_lo - kEps && e <= w_hi + kEps) {
        anchored = true;
        last = e;
      }
      continue;
    }
    if (e - last > cfg.min_gap + kEps) break;
    if (e >= cfg.max_duration - kEps) break;
    last = e;
  }
  if (!anchored) return cfg.min_duration;
  return std::min(std::max(last + cfg.t_a_i, cfg.min_duration), cfg.max_duration);
}

// Per-intersection working set of counter records for the current cycle.
class CounterStore {
 public:
  explicit CounterStore(PredictorConfig cfg) : cfg_(cfg) {}

  const PredictorConfig& config() const { return cfg_; }

  // Insert a crossing; returns the stored record with its arrival estimate.
  // `accel` is what the predictor believes the vehicle accelerates at.
  const CounterRecord& record_crossing(int vehicle, double speed, double t_count, double accel,
                                       double counter_to_actuator, double speed_limit) {
    CounterRecord rec;
    rec.vehicle = vehicle;
    rec.crossing_speed = speed;
    rec.t_count = t_count;
    rec.t_est = t_count + estimate_travel_time(std::min(speed, speed_limit),
                                               counter_to_actuator, speed_limit, accel);
    auto it = std::upper_bound(records_.begin(), records_.end(), rec.t_est,
                               [](double v, const CounterRecord& r) { return v < r.t_est; });
    return *records_.insert(it, rec);
  }

  // Cycle rollover erases the working set.
  void on_cycle(int cycle_index) {
    if (cycle_index != cycle_) {
      records_.clear();
      cycle_ = cycle_index;
    }
  }

  void set_label(int vehicle, Label label) {
    for (auto& r : records_)
      if (r.vehicle == vehicle) r.label = label;
  }

  const std::vector<CounterRecord>& records() const { return records_; }
  int cycle_index() const { return cycle_; }

 private:
  PredictorConfig cfg_;
  std::vector<CounterRecord> records_;
  int cycle_ = 0;
};

// Statistical baseline (Algorithm B): the green-length prediction is the
// empirical eta-quantile of past realized durations, interpolated linearly
// between order statistics.
class QuantileHistory {
 public:
  explicit QuantileHistory(double eta, double min_red_duration = 0.0)
      : eta_(eta), c_r_(min_red_duration) {}

  void push(double green_duration) {
    auto it = std::upper_bound(samples_.begin(), samples_.end(), green_duration);
    samples_.insert(it, green_duration);
  }

  double quantile_predict() const {
    if (samples_.empty()) throw EmptyHistory("quantile_predict: no samples");
    double h = (static_cast<double>(samples_.size()) - 1.0) * std::clamp(eta_, 0.0, 1.0);
    std::size_t i = static_cast<std::size_t>(h);
    double frac = h - static_cast<double>(i);
    if (i + 1 >= samples_.size()) return samples_.back();
    return samples_[i] + frac * (samples_[i + 1] - samples_[i]);
  }

  double eta() const { return eta_; }
  double min_red_duration() const { return c_r_; }
  std::size_t size() const { return samples_.size(); }
  const std::vector<double>& samples() const { return samples_; }

 private:
  std::vector<double> samples_;  // kept sorted
  double eta_;
  double c_r_;  // minimal red-phase duration of the signal, kept for context
};

}  // namespace sasim
