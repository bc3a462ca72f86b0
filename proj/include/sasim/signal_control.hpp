#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sasim/core.hpp"
#include "sasim/scenario.hpp"

namespace sasim {

// Derived actuation timing of one signal: t_a_i is the actuator-to-stopline
// travel time at the speed limit, t_th the phase clock after which actuations
// are enabled.
struct ActuationParams {
  double t_a_i = 0.0;
  double t_th = 0.0;

  static ActuationParams derive(double min_duration, double actuator_distance,
                                double speed_limit) {
    ActuationParams p;
    p.t_a_i = std::ceil(actuator_distance / speed_limit);
    p.t_th = std::max(0.0, min_duration - p.t_a_i);  // clamped for short links
    return p;
  }
};

struct TerminationRecord {
  int cycle_index = 0;
  TerminationReason reason = TerminationReason::Omit;
  double green_duration = 0.0;
};

struct TerminationCounts {
  int omit = 0;
  int gap_out = 0;
  int max_out = 0;
  int total() const { return omit + gap_out + max_out; }
};

inline TerminationCounts classify_termination(const std::vector<TerminationRecord>& history) {
  TerminationCounts c;
  for (const auto& r : history) {
    switch (r.reason) {
      case TerminationReason::Omit: ++c.omit; break;
      case TerminationReason::GapOut: ++c.gap_out; break;
      case TerminationReason::MaxOut: ++c.max_out; break;
    }
  }
  return c;
}

// One actuated traffic light. Fixed cycle length, one actuated green whose
// extension is absorbed second-for-second by the complementary green, so
// every cycle lasts exactly cycle_length.
class SignalController {
 public:
  struct TickEvents {
    bool phase_changed = false;
    bool cycle_wrapped = false;
    bool actuated_green_started = false;
    bool actuated_green_ended = false;
    double ended_green_duration = 0.0;
  };

  SignalController(SignalSpec spec, ActuationParams actuation, double start_time = 0.0)
      : spec_(std::move(spec)),
        actuation_(actuation),
        phase_start_(start_time),
        cycle_start_(start_time) {
    actuated_index_ = spec_.actuated_phase_index();
    committed_green_end_ = actuated_min();
    comp_duration_ = spec_.phases[spec_.complementary_phase_index].max_duration;
  }

  // Advance the machine to absolute time `now` (monotone, dt-stepped).
  TickEvents tick(double now) {
    TickEvents ev;
    while (now - phase_start_ >= current_phase_duration() - kEps) {
      advance_phase(ev);
    }
    return ev;
  }

  // Vehicle crossed the actuator at absolute time `now`. Returns true iff the
  // extension is granted: actuated green is on, the clock passed t_th, the
  // actuation chain is intact (first grant inside [t_th, t_th + min_gap],
  // later grants within min_gap of the previous one, bounds inclusive) and
  // the maximum duration is not yet reached. A grant commits the green to end
  // at min(clock + t_a_i, max_duration), long enough for the granting vehicle
  // to reach the stop line at the speed limit.
  bool actuate(double now) {
    if (phase_index_ != actuated_index_) return false;
    double clock = now - phase_start_;
    const PhaseSpec& ph = spec_.phases[actuated_index_];
    if (clock < actuation_.t_th - kEps) return false;
    if (clock >= ph.max_duration - kEps) return false;
    if (!actuated_this_cycle_) {
      if (clock > actuation_.t_th + spec_.min_gap + kEps) return false;
    } else {
      if (clock - *last_actuation_ > spec_.min_gap + kEps) return false;
    }
    last_actuation_ = clock;
    actuated_this_cycle_ = true;
    committed_green_end_ =
        std::min(std::max(committed_green_end_, clock + actuation_.t_a_i), ph.max_duration);
    return true;
  }

  // Seconds until the next actuated-green onset. Exact: extensions are
  // absorbed within the cycle, so the next green always starts at
  // cycle_start + cycle_length. At the onset instant itself this is 0.
  double residual_to_next_green(double now) const {
    double cc = now - cycle_start_;
    if (cc <= kEps) return 0.0;
    return spec_.cycle_length - cc;
  }

  const std::string& state() const { return spec_.phases[phase_index_].state_string; }
  char approach_state(int approach_pos) const {
    return spec_.phases[phase_index_].state_string[approach_pos];
  }

  bool in_actuated_green() const { return phase_index_ == actuated_index_; }
  int phase_index() const { return phase_index_; }
  int cycle_index() const { return cycle_index_; }
  double cycle_start() const { return cycle_start_; }
  double phase_clock(double now) const { return now - phase_start_; }
  double cycle_clock(double now) const { return now - cycle_start_; }
  double committed_green_end() const { return committed_green_end_; }
  bool actuated_this_cycle() const { return actuated_this_cycle_; }
  std::optional<double> last_actuation() const { return last_actuation_; }

  const SignalSpec& spec() const { return spec_; }
  const ActuationParams& actuation() const { return actuation_; }
  const std::vector<TerminationRecord>& terminations() const { return terminations_; }

 private:
  double actuated_min() const { return spec_.phases[actuated_index_].min_duration; }

  double current_phase_duration() const {
    if (phase_index_ == actuated_index_) return committed_green_end_;
    if (phase_index_ == spec_.complementary_phase_index) return comp_duration_;
    return spec_.phases[phase_index_].min_duration;
  }

  void advance_phase(TickEvents& ev) {
    if (phase_index_ == actuated_index_) {
      double green = committed_green_end_;
      TerminationReason reason;
      if (!actuated_this_cycle_)
        reason = TerminationReason::Omit;
      else if (green >= spec_.phases[actuated_index_].max_duration - kEps)
        reason = TerminationReason::MaxOut;
      else
        reason = TerminationReason::GapOut;
      terminations_.push_back({cycle_index_, reason, green});
      comp_duration_ = spec_.phases[spec_.complementary_phase_index].max_duration -
                       (green - actuated_min());
      ev.actuated_green_ended = true;
      ev.ended_green_duration = green;
    }
    phase_start_ += current_phase_duration();
    ++phase_index_;
    ev.phase_changed = true;
    if (phase_index_ == static_cast<int>(spec_.phases.size())) {
      phase_index_ = 0;
      ++cycle_index_;
      cycle_start_ += spec_.cycle_length;
      phase_start_ = cycle_start_;  // anchor on the cycle grid, no float drift
      actuated_this_cycle_ = false;
      last_actuation_.reset();
      committed_green_end_ = actuated_min();
      ev.cycle_wrapped = true;
    }
    if (phase_index_ == actuated_index_) ev.actuated_green_started = true;
  }

  SignalSpec spec_;
  ActuationParams actuation_;
  int actuated_index_ = 0;
  int phase_index_ = 0;
  int cycle_index_ = 0;
  double phase_start_ = 0.0;
  double cycle_start_ = 0.0;
  std::optional<double> last_actuation_;
  bool actuated_this_cycle_ = false;
  double committed_green_end_ = 0.0;
  double comp_duration_ = 0.0;
  std::vector<TerminationRecord> terminations_;
};

}  // namespace sasim
