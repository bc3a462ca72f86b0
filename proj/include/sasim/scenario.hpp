#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sasim/core.hpp"

namespace sasim {

// ---------------------------------------------------------------------------
// Static world description. Immutable after parse; safe to share read-only
// across concurrent replications.
// ---------------------------------------------------------------------------

struct LinkSpec {
  std::string id;
  double length = 0.0;           // meters
  double speed_limit = 0.0;      // m/s
  std::string downstream;        // intersection id, empty for exit links
  Heading heading = Heading::E;
};

struct DetectorSpec {
  DetectorKind kind = DetectorKind::Counter;
  std::string link;
  double distance_to_stopline = 0.0;  // meters upstream of the link end
};

struct PhaseSpec {
  std::string state_string;   // one of r/y/G per approach, in approach order
  double min_duration = 0.0;  // seconds
  double max_duration = 0.0;  // seconds
  bool actuated = false;
};

struct SignalSpec {
  std::string intersection;
  double cycle_length = 0.0;  // seconds, fixed for the whole run
  std::vector<PhaseSpec> phases;
  double min_gap = 3.0;                 // seconds
  int complementary_phase_index = -1;   // green that absorbs extensions

  int actuated_phase_index() const {
    for (std::size_t i = 0; i < phases.size(); ++i)
      if (phases[i].actuated) return static_cast<int>(i);
    return -1;
  }
};

struct DemandSpec {
  std::vector<std::string> route;  // ordered link ids
  double arrival_rate = 0.0;       // vehicles per second
  double sas_penetration = 0.0;    // fraction in [0,1]
  AccelMode accel_mode = AccelMode::FixedKnown;
  double accel_min = 2.0;          // m/s^2
  double accel_max = 3.5;
  double assumed_accel = 2.75;     // predictor substitute in RandomUnknown mode
  std::uint64_t seed = 0;
};

struct NetworkSpec {
  std::string name;
  std::vector<LinkSpec> links;
  std::vector<DetectorSpec> detectors;
  std::vector<SignalSpec> signals;
  std::vector<DemandSpec> demands;

  int link_index(std::string_view id) const {
    for (std::size_t i = 0; i < links.size(); ++i)
      if (links[i].id == id) return static_cast<int>(i);
    return -1;
  }

  int signal_index(std::string_view intersection) const {
    for (std::size_t i = 0; i < signals.size(); ++i)
      if (signals[i].intersection == intersection) return static_cast<int>(i);
    return -1;
  }

  // Incoming links of an intersection, in declaration order. Phase state
  // strings are indexed by position in this list.
  std::vector<int> approach_links(std::string_view intersection) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < links.size(); ++i)
      if (links[i].downstream == intersection) out.push_back(static_cast<int>(i));
    return out;
  }

  const DetectorSpec* detector_on(std::string_view link, DetectorKind kind) const {
    for (const auto& d : detectors)
      if (d.link == link && d.kind == kind) return &d;
    return nullptr;
  }
};

struct Violation {
  std::string rule;
  std::string message;
  bool warning = false;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace detail

inline std::vector<Violation> validate(const NetworkSpec& net) {
  std::vector<Violation> out;
  auto err = [&out](std::string rule, std::string msg) {
    out.push_back({std::move(rule), std::move(msg), false});
  };
  auto warn = [&out](std::string rule, std::string msg) {
    out.push_back({std::move(rule), std::move(msg), true});
  };

  for (std::size_t i = 0; i < net.links.size(); ++i) {
    const auto& l = net.links[i];
    if (l.length <= 0) err("LinkLength", "link " + l.id + ": length must be > 0");
    if (l.speed_limit <= 0) err("SpeedLimit", "link " + l.id + ": speed_limit must be > 0");
    for (std::size_t j = i + 1; j < net.links.size(); ++j)
      if (net.links[j].id == l.id) err("DuplicateLink", "duplicate link id " + l.id);
    if (!l.downstream.empty() && net.signal_index(l.downstream) < 0)
      err("DanglingReference", "link " + l.id + ": unknown intersection " + l.downstream);
  }

  for (const auto& d : net.detectors) {
    int li = net.link_index(d.link);
    if (li < 0) {
      err("DanglingReference", "detector on unknown link " + d.link);
      continue;
    }
    if (d.distance_to_stopline < 0 || d.distance_to_stopline > net.links[li].length)
      err("DetectorRange", "detector on " + d.link + " at " +
                               detail::fmt_num(d.distance_to_stopline) + " m is outside the link");
  }

  for (const auto& sig : net.signals) {
    const std::string where = "signal " + sig.intersection + ": ";
    auto approaches = net.approach_links(sig.intersection);
    if (approaches.empty()) err("NoApproaches", where + "no incoming links");
    if (sig.cycle_length <= 0) err("CycleLength", where + "cycle_length must be > 0");
    if (sig.phases.empty()) {
      err("NoPhases", where + "no phases");
      continue;
    }

    int actuated_count = 0;
    for (std::size_t p = 0; p < sig.phases.size(); ++p) {
      const auto& ph = sig.phases[p];
      const std::string pwhere = where + "phase " + std::to_string(p) + ": ";
      if (ph.min_duration > ph.max_duration)
        err("InvariantViolation", pwhere + "min_duration > max_duration");
      if (ph.min_duration < 0) err("InvariantViolation", pwhere + "negative min_duration");
      if (ph.state_string.size() != approaches.size())
        err("StateLength", pwhere + "state string length " +
                               std::to_string(ph.state_string.size()) + " != " +
                               std::to_string(approaches.size()) + " approaches");
      for (char c : ph.state_string)
        if (c != 'r' && c != 'y' && c != 'G')
          err("StateChars", pwhere + "invalid state char '" + std::string(1, c) + "'");
      bool has_yellow = ph.state_string.find('y') != std::string::npos;
      bool has_green = ph.state_string.find('G') != std::string::npos;
      if (has_yellow && ph.min_duration != ph.max_duration)
        err("YellowFixed", pwhere + "yellow phases must have min == max");
      if (ph.actuated) {
        ++actuated_count;
        if (!has_green) err("ActuatedGreen", pwhere + "actuated phase has no green state");
      }
    }
    if (actuated_count != 1) {
      err("ActuatedCount", where + "exactly one phase must be actuated (found " +
                               std::to_string(actuated_count) + ")");
      continue;
    }
    int act = sig.actuated_phase_index();
    if (act != 0)
      err("ActuatedFirst", where + "the actuated green must be phase 0 (cycles start with it)");

    int comp = sig.complementary_phase_index;
    if (comp < 0 || comp >= static_cast<int>(sig.phases.size()) || comp == act) {
      err("ComplementaryIndex", where + "complementary_phase index invalid");
      continue;
    }
    const auto& actp = sig.phases[act];
    const auto& compp = sig.phases[comp];
    if (compp.actuated || compp.state_string.find('G') == std::string::npos)
      err("ComplementaryIndex", where + "complementary phase must be a non-actuated green");

    // Budget: the complementary green runs at its maximum when the actuated
    // green runs at its minimum, shrinking one second per second of extension.
    double ext_act = actp.max_duration - actp.min_duration;
    double ext_comp = compp.max_duration - compp.min_duration;
    if (std::abs(ext_act - ext_comp) > kEps)
      err("CycleBudget", where + "actuated extension range (" + detail::fmt_num(ext_act) +
                             ") != complementary range (" + detail::fmt_num(ext_comp) + ")");
    double fixed_sum = 0.0;
    for (std::size_t p = 0; p < sig.phases.size(); ++p)
      fixed_sum += (static_cast<int>(p) == comp) ? sig.phases[p].max_duration
                                                 : sig.phases[p].min_duration;
    if (std::abs(fixed_sum - sig.cycle_length) > kEps)
      err("CycleBudget", where + "phase minimums plus complementary maximum sum to " +
                             detail::fmt_num(fixed_sum) + ", expected cycle_length " +
                             detail::fmt_num(sig.cycle_length));
    if (sig.min_gap <= 0) err("MinGap", where + "min_gap must be > 0");

    // Detector coverage and ordering on actuated approaches; all actuated
    // approaches of one signal must share the same actuator travel time.
    double shared_t_a_i = -1.0;
    for (std::size_t a = 0; a < approaches.size(); ++a) {
      if (act >= 0 && a < sig.phases[act].state_string.size() &&
          sig.phases[act].state_string[a] != 'G')
        continue;  // not an actuated approach
      const auto& link = net.links[approaches[a]];
      const DetectorSpec* counter = net.detector_on(link.id, DetectorKind::Counter);
      const DetectorSpec* actuator = net.detector_on(link.id, DetectorKind::Actuator);
      int n_counters = 0, n_actuators = 0;
      for (const auto& d : net.detectors) {
        if (d.link != link.id) continue;
        n_counters += d.kind == DetectorKind::Counter;
        n_actuators += d.kind == DetectorKind::Actuator;
      }
      if (n_counters != 1 || n_actuators != 1) {
        err("DetectorCoverage", where + "actuated approach " + link.id +
                                    " needs exactly one counter and one actuator");
        continue;
      }
      if (counter->distance_to_stopline <= actuator->distance_to_stopline)
        err("DetectorOrdering", where + "counter on " + link.id +
                                    " must be strictly upstream of the actuator");
      else if (counter->distance_to_stopline - actuator->distance_to_stopline < 50.0)
        err("CounterSpacing", where + "counter on " + link.id +
                                  " must be at least 50 m upstream of the actuator");
      if (actuator->distance_to_stopline < 40.0 || actuator->distance_to_stopline > 100.0)
        warn("ActuatorPlacement", where + "actuator on " + link.id + " at " +
                                      detail::fmt_num(actuator->distance_to_stopline) +
                                      " m is outside the default 40-100 m band");
      if (link.speed_limit > 0) {
        double t_a_i = std::ceil(actuator->distance_to_stopline / link.speed_limit);
        if (shared_t_a_i < 0)
          shared_t_a_i = t_a_i;
        else if (std::abs(shared_t_a_i - t_a_i) > kEps)
          err("ActuationSymmetry", where + "actuated approaches have differing "
                                       "actuator travel times");
        if (act >= 0 && sig.phases[act].min_duration - t_a_i < 0)
          warn("ActuationThreshold", where + "short approach " + link.id +
                                         ": actuation threshold clamped to 0");
        if (t_a_i < sig.min_gap - kEps)
          warn("MinGapVsTravel", where + "min_gap exceeds the actuator travel time on " +
                                     link.id + "; labels may diverge from the controller");
      }
    }
  }

  for (std::size_t di = 0; di < net.demands.size(); ++di) {
    const auto& d = net.demands[di];
    const std::string where = "demand " + std::to_string(di) + ": ";
    if (d.route.empty()) err("EmptyRoute", where + "route has no links");
    for (const auto& lid : d.route)
      if (net.link_index(lid) < 0) err("DanglingReference", where + "unknown link " + lid);
    if (d.arrival_rate <= 0) err("ArrivalRate", where + "arrival_rate must be > 0");
    if (d.sas_penetration < 0 || d.sas_penetration > 1)
      err("Penetration", where + "sas_penetration must be in [0,1]");
    if (d.accel_min > d.accel_max)
      err("AccelRange", where + "accel_range min > max");
    if (d.accel_min <= 0) err("AccelRange", where + "accel_range must be positive");
  }

  return out;
}

// ---------------------------------------------------------------------------
// Scenario file parsing. Structured text: [section] headers and key = value
// pairs; '#' starts a comment; distances in meters, times in seconds,
// speeds in m/s.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view v, int line) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ScenarioError("invalid number '" + std::string(v) + "'", line);
  return out;
}

inline std::uint64_t parse_u64(std::string_view v, int line) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ScenarioError("invalid integer '" + std::string(v) + "'", line);
  return out;
}

inline bool parse_bool(std::string_view v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ScenarioError("invalid boolean '" + std::string(v) + "'", line);
}

inline std::vector<std::string> parse_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    std::size_t comma = v.find(',', start);
    std::string_view item =
        trim(v.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline Heading parse_heading(std::string_view v, int line) {
  if (v == "N") return Heading::N;
  if (v == "S") return Heading::S;
  if (v == "E") return Heading::E;
  if (v == "W") return Heading::W;
  throw ScenarioError("invalid heading '" + std::string(v) + "'", line);
}

inline DetectorKind parse_detector_kind(std::string_view v, int line) {
  if (v == "counter") return DetectorKind::Counter;
  if (v == "actuator") return DetectorKind::Actuator;
  if (v == "stopbar") return DetectorKind::StopBar;
  throw ScenarioError("invalid detector kind '" + std::string(v) + "'", line);
}

inline AccelMode parse_accel_mode(std::string_view v, int line) {
  if (v == "fixed") return AccelMode::FixedKnown;
  if (v == "random_known") return AccelMode::RandomKnown;
  if (v == "random_unknown") return AccelMode::RandomUnknown;
  throw ScenarioError("invalid accel_mode '" + std::string(v) + "'", line);
}

}  // namespace detail

inline NetworkSpec parse_scenario(std::string_view text) {
  using namespace detail;
  NetworkSpec net;
  enum class Section { None, Scenario, Link, Detector, Signal, Phase, Demand };
  Section section = Section::None;
  int line_no = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view raw =
        text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    std::size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ScenarioError("malformed section header", line_no);
      std::string_view name = line.substr(1, line.size() - 2);
      if (name == "scenario") section = Section::Scenario;
      else if (name == "link") { section = Section::Link; net.links.emplace_back(); }
      else if (name == "detector") { section = Section::Detector; net.detectors.emplace_back(); }
      else if (name == "signal") { section = Section::Signal; net.signals.emplace_back(); }
      else if (name == "phase") {
        if (net.signals.empty())
          throw ScenarioError("[phase] must follow a [signal] section", line_no);
        section = Section::Phase;
        net.signals.back().phases.emplace_back();
      } else if (name == "demand") { section = Section::Demand; net.demands.emplace_back(); }
      else throw ScenarioError("unknown section [" + std::string(name) + "]", line_no);
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ScenarioError("expected key = value", line_no);
    std::string_view key = trim(line.substr(0, eq));
    std::string_view val = trim(line.substr(eq + 1));
    if (key.empty()) throw ScenarioError("empty key", line_no);

    auto bad_key = [&]() -> ScenarioError {
      return ScenarioError("unknown key '" + std::string(key) + "'", line_no);
    };

    switch (section) {
      case Section::None:
        throw ScenarioError("key outside of any section", line_no);
      case Section::Scenario:
        if (key == "name") net.name = std::string(val);
        else throw bad_key();
        break;
      case Section::Link: {
        auto& l = net.links.back();
        if (key == "id") l.id = std::string(val);
        else if (key == "length") l.length = parse_double(val, line_no);
        else if (key == "speed_limit") l.speed_limit = parse_double(val, line_no);
        else if (key == "downstream") l.downstream = (val == "none") ? "" : std::string(val);
        else if (key == "heading") l.heading = parse_heading(val, line_no);
        else throw bad_key();
        break;
      }
      case Section::Detector: {
        auto& d = net.detectors.back();
        if (key == "kind") d.kind = parse_detector_kind(val, line_no);
        else if (key == "link") d.link = std::string(val);
        else if (key == "distance") d.distance_to_stopline = parse_double(val, line_no);
        else throw bad_key();
        break;
      }
      case Section::Signal: {
        auto& s = net.signals.back();
        if (key == "intersection") s.intersection = std::string(val);
        else if (key == "cycle_length") s.cycle_length = parse_double(val, line_no);
        else if (key == "min_gap") s.min_gap = parse_double(val, line_no);
        else if (key == "complementary_phase")
          s.complementary_phase_index = static_cast<int>(parse_double(val, line_no));
        else throw bad_key();
        break;
      }
      case Section::Phase: {
        auto& p = net.signals.back().phases.back();
        if (key == "state") p.state_string = std::string(val);
        else if (key == "min") p.min_duration = parse_double(val, line_no);
        else if (key == "max") p.max_duration = parse_double(val, line_no);
        else if (key == "actuated") p.actuated = parse_bool(val, line_no);
        else throw bad_key();
        break;
      }
      case Section::Demand: {
        auto& d = net.demands.back();
        if (key == "route") d.route = parse_list(val);
        else if (key == "rate") d.arrival_rate = parse_double(val, line_no);
        else if (key == "sas_penetration") d.sas_penetration = parse_double(val, line_no);
        else if (key == "accel_mode") d.accel_mode = parse_accel_mode(val, line_no);
        else if (key == "accel_range") {
          auto parts = parse_list(val);
          if (parts.size() != 2) throw ScenarioError("accel_range needs two values", line_no);
          d.accel_min = parse_double(parts[0], line_no);
          d.accel_max = parse_double(parts[1], line_no);
        } else if (key == "assumed_accel") d.assumed_accel = parse_double(val, line_no);
        else if (key == "seed") d.seed = parse_u64(val, line_no);
        else throw bad_key();
        break;
      }
    }
  }

  for (const auto& l : net.links)
    if (l.id.empty()) throw ScenarioError("[link] without id");
  for (const auto& s : net.signals)
    if (s.intersection.empty()) throw ScenarioError("[signal] without intersection");

  auto violations = validate(net);
  for (const auto& v : violations) {
    if (!v.warning)
      throw ScenarioError(v.rule + ": " + v.message);
  }
  return net;
}

inline std::string serialize_scenario(const NetworkSpec& net) {
  using detail::fmt_num;
  std::ostringstream os;
  if (!net.name.empty()) os << "[scenario]\nname = " << net.name << "\n\n";
  for (const auto& l : net.links) {
    os << "[link]\n"
       << "id = " << l.id << "\n"
       << "length = " << fmt_num(l.length) << "\n"
       << "speed_limit = " << fmt_num(l.speed_limit) << "\n"
       << "downstream = " << (l.downstream.empty() ? "none" : l.downstream) << "\n"
       << "heading = " << to_string(l.heading) << "\n\n";
  }
  for (const auto& d : net.detectors) {
    os << "[detector]\n"
       << "kind = " << to_string(d.kind) << "\n"
       << "link = " << d.link << "\n"
       << "distance = " << fmt_num(d.distance_to_stopline) << "\n\n";
  }
  for (const auto& s : net.signals) {
    os << "[signal]\n"
       << "intersection = " << s.intersection << "\n"
       << "cycle_length = " << fmt_num(s.cycle_length) << "\n"
       << "min_gap = " << fmt_num(s.min_gap) << "\n"
       << "complementary_phase = " << s.complementary_phase_index << "\n\n";
    for (const auto& p : s.phases) {
      os << "[phase]\n"
         << "state = " << p.state_string << "\n"
         << "min = " << fmt_num(p.min_duration) << "\n"
         << "max = " << fmt_num(p.max_duration) << "\n"
         << "actuated = " << (p.actuated ? "true" : "false") << "\n\n";
    }
  }
  for (const auto& d : net.demands) {
    os << "[demand]\nroute = ";
    for (std::size_t i = 0; i < d.route.size(); ++i)
      os << (i ? ", " : "") << d.route[i];
    os << "\nrate = " << fmt_num(d.arrival_rate) << "\n"
       << "sas_penetration = " << fmt_num(d.sas_penetration) << "\n"
       << "accel_mode = " << to_string(d.accel_mode) << "\n"
       << "accel_range = " << fmt_num(d.accel_min) << ", " << fmt_num(d.accel_max) << "\n"
       << "assumed_accel = " << fmt_num(d.assumed_accel) << "\n"
       << "seed = " << d.seed << "\n\n";
  }
  return os.str();
}

}  // namespace sasim
