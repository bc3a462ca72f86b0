#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sasim/core.hpp"

namespace sasim {

enum class EventKind {
  Spawn,
  CounterCross,
  ActuatorCross,
  StopBarCross,
  PhaseChange,
  Label,
  ModeSwitch,
  Exit
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Spawn: return "spawn";
    case EventKind::CounterCross: return "counter_cross";
    case EventKind::ActuatorCross: return "actuator_cross";
    case EventKind::StopBarCross: return "stopbar_cross";
    case EventKind::PhaseChange: return "phase_change";
    case EventKind::Label: return "label";
    case EventKind::ModeSwitch: return "mode_switch";
    case EventKind::Exit: return "exit";
  }
  return "?";
}

struct EventRecord {
  double time = 0.0;
  EventKind kind = EventKind::Spawn;
  int vehicle = -1;  // -1 for signal events
  std::string intersection;
  std::string detail;
};

struct SignalLogRow {
  std::string intersection;
  int cycle = 0;
  double green_duration = 0.0;
  TerminationReason reason = TerminationReason::Omit;
  double cycle_start = 0.0;
};

struct PredictionLogRow {
  std::string intersection;
  int cycle = 0;
  std::string algorithm;  // "A", "B@0.8", ...
  double predicted = 0.0;
  double actual = 0.0;
  double error() const { return predicted - actual; }
};

// One stop-line crossing. `state` is the approach color at the instant of
// crossing; `first_arrival_state` the color when the vehicle first reached
// the approach front (stopped or crossed), kept for progression analysis.
struct CrossingRow {
  int vehicle = 0;
  std::string intersection;
  int cycle = 0;
  double time = 0.0;
  char state = 'r';
  bool actuated_approach = false;
  bool sas_equipped = false;
  DriveMode mode = DriveMode::Krauss;
};

struct VehicleRow {
  int id = 0;
  int route = 0;
  bool sas_equipped = false;
  bool traverses_actuated = false;
  double spawn_time = 0.0;
  bool exited = false;
  double exit_time = 0.0;
  double fuel_ml = 0.0;
  double distance_m = 0.0;
  int stops = 0;
};

struct TracePoint {
  double time = 0.0;
  int vehicle = 0;
  std::string link;
  double position = 0.0;  // along the route
  double speed = 0.0;
  double accel = 0.0;
  DriveMode mode = DriveMode::Krauss;
  char label = '-';
};

// ---------------------------------------------------------------------------
// CSV serialization. First line carries the schema version; comma delimiter,
// '.' decimal point, no locale dependence.
// ---------------------------------------------------------------------------

namespace csv {

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline void write_events(std::ostream& os, const std::vector<EventRecord>& rows) {
  os << "# schema: sasim.events.v1\n";
  os << "time,kind,vehicle,intersection,detail\n";
  for (const auto& r : rows)
    os << num(r.time) << ',' << to_string(r.kind) << ',' << r.vehicle << ',' << r.intersection
       << ',' << r.detail << '\n';
}

inline void write_signal(std::ostream& os, const std::vector<SignalLogRow>& rows) {
  os << "# schema: sasim.signal.v1\n";
  os << "intersection,cycle_index,green_duration,reason,cycle_start\n";
  for (const auto& r : rows)
    os << r.intersection << ',' << r.cycle << ',' << num(r.green_duration) << ','
       << to_string(r.reason) << ',' << num(r.cycle_start) << '\n';
}

inline void write_predictions(std::ostream& os, const std::vector<PredictionLogRow>& rows) {
  os << "# schema: sasim.predictions.v1\n";
  os << "intersection,cycle_index,algorithm,predicted_green,actual_green,error_seconds\n";
  for (const auto& r : rows)
    os << r.intersection << ',' << r.cycle << ',' << r.algorithm << ',' << num(r.predicted)
       << ',' << num(r.actual) << ',' << num(r.error()) << '\n';
}

inline void write_crossings(std::ostream& os, const std::vector<CrossingRow>& rows) {
  os << "# schema: sasim.crossings.v1\n";
  os << "vehicle,intersection,cycle,time,state,actuated_approach,sas,mode\n";
  for (const auto& r : rows)
    os << r.vehicle << ',' << r.intersection << ',' << r.cycle << ',' << num(r.time) << ','
       << r.state << ',' << (r.actuated_approach ? 1 : 0) << ',' << (r.sas_equipped ? 1 : 0)
       << ',' << to_string(r.mode) << '\n';
}

inline void write_vehicles(std::ostream& os, const std::vector<VehicleRow>& rows) {
  os << "# schema: sasim.vehicles.v1\n";
  os << "id,route,sas,traverses_actuated,spawn_time,exited,exit_time,fuel_ml,distance_m,stops\n";
  for (const auto& r : rows)
    os << r.id << ',' << r.route << ',' << (r.sas_equipped ? 1 : 0) << ','
       << (r.traverses_actuated ? 1 : 0) << ',' << num(r.spawn_time) << ','
       << (r.exited ? 1 : 0) << ',' << num(r.exit_time) << ',' << num(r.fuel_ml) << ','
       << num(r.distance_m) << ',' << r.stops << '\n';
}

inline void write_trace(std::ostream& os, const std::vector<TracePoint>& rows) {
  os << "# schema: sasim.trace.v1\n";
  os << "time,id,link,position,speed,accel,mode,label\n";
  for (const auto& r : rows)
    os << num(r.time) << ',' << r.vehicle << ',' << r.link << ',' << num(r.position) << ','
       << num(r.speed) << ',' << num(r.accel) << ',' << to_string(r.mode) << ',' << r.label
       << '\n';
}

// --- readers (for regenerating reports from stored logs) -------------------

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

inline double to_num(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc()) throw DomainError("csv: invalid number '" + s + "'");
  return v;
}

inline TerminationReason to_reason(const std::string& s) {
  if (s == "omit") return TerminationReason::Omit;
  if (s == "gap_out") return TerminationReason::GapOut;
  if (s == "max_out") return TerminationReason::MaxOut;
  throw DomainError("csv: invalid termination reason '" + s + "'");
}

// Apply `fn` to each data row (schema and header lines skipped).
template <typename Fn>
inline void for_each_row(std::istream& is, Fn fn) {
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    fn(split(line));
  }
}

inline std::vector<SignalLogRow> read_signal(std::istream& is) {
  std::vector<SignalLogRow> out;
  for_each_row(is, [&](const std::vector<std::string>& f) {
    if (f.size() != 5) throw DomainError("csv: bad signal row");
    out.push_back({f[0], static_cast<int>(to_num(f[1])), to_num(f[2]), to_reason(f[3]),
                   to_num(f[4])});
  });
  return out;
}

inline std::vector<PredictionLogRow> read_predictions(std::istream& is) {
  std::vector<PredictionLogRow> out;
  for_each_row(is, [&](const std::vector<std::string>& f) {
    if (f.size() != 6) throw DomainError("csv: bad prediction row");
    out.push_back({f[0], static_cast<int>(to_num(f[1])), f[2], to_num(f[3]), to_num(f[4])});
  });
  return out;
}

inline std::vector<CrossingRow> read_crossings(std::istream& is) {
  std::vector<CrossingRow> out;
  for_each_row(is, [&](const std::vector<std::string>& f) {
    if (f.size() != 8) throw DomainError("csv: bad crossing row");
    CrossingRow r;
    r.vehicle = static_cast<int>(to_num(f[0]));
    r.intersection = f[1];
    r.cycle = static_cast<int>(to_num(f[2]));
    r.time = to_num(f[3]);
    r.state = f[4].empty() ? 'r' : f[4][0];
    r.actuated_approach = f[5] == "1";
    r.sas_equipped = f[6] == "1";
    r.mode = f[7] == "sas" ? DriveMode::SasPlan : DriveMode::Krauss;
    out.push_back(std::move(r));
  });
  return out;
}

inline std::vector<VehicleRow> read_vehicles(std::istream& is) {
  std::vector<VehicleRow> out;
  for_each_row(is, [&](const std::vector<std::string>& f) {
    if (f.size() != 10) throw DomainError("csv: bad vehicle row");
    VehicleRow r;
    r.id = static_cast<int>(to_num(f[0]));
    r.route = static_cast<int>(to_num(f[1]));
    r.sas_equipped = f[2] == "1";
    r.traverses_actuated = f[3] == "1";
    r.spawn_time = to_num(f[4]);
    r.exited = f[5] == "1";
    r.exit_time = to_num(f[6]);
    r.fuel_ml = to_num(f[7]);
    r.distance_m = to_num(f[8]);
    r.stops = static_cast<int>(to_num(f[9]));
    out.push_back(std::move(r));
  });
  return out;
}

}  // namespace csv
}  // namespace sasim
