#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sasim {

// Global integration step (seconds). All phase clocks are quantized to this.
inline constexpr double kDt = 0.1;

// Engine-off glide deceleration, m/s^2.
inline constexpr double kGlideDecel = 0.15;

// Default maximal comfortable acceleration, m/s^2.
inline constexpr double kDefaultAccel = 2.5;

// Default vehicle length, meters.
inline constexpr double kVehicleLength = 5.0;

// Tolerance for clock/ordering comparisons on the dt grid.
inline constexpr double kEps = 1e-9;

enum class Heading { N, S, E, W };
enum class DetectorKind { Counter, Actuator, StopBar };
enum class AccelMode { FixedKnown, RandomKnown, RandomUnknown };
enum class Label { Pass, Wait };
enum class TerminationReason { Omit, GapOut, MaxOut };
enum class DriveMode { Krauss, SasPlan };
enum class PlanKind { AccelerateCruise, GlideCruise, BrakeConstant, StopAndWait };

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// plan_sas horizon must be strictly positive.
class NonPositiveHorizon : public DomainError {
 public:
  explicit NonPositiveHorizon(const std::string& msg) : DomainError(msg) {}
};

// quantile_predict requires at least one sample.
class EmptyHistory : public DomainError {
 public:
  explicit EmptyHistory(const std::string& msg) : DomainError(msg) {}
};

inline const char* to_string(Heading h) {
  switch (h) {
    case Heading::N: return "N";
    case Heading::S: return "S";
    case Heading::E: return "E";
    case Heading::W: return "W";
  }
  return "?";
}

inline const char* to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::Counter: return "counter";
    case DetectorKind::Actuator: return "actuator";
    case DetectorKind::StopBar: return "stopbar";
  }
  return "?";
}

inline const char* to_string(AccelMode m) {
  switch (m) {
    case AccelMode::FixedKnown: return "fixed";
    case AccelMode::RandomKnown: return "random_known";
    case AccelMode::RandomUnknown: return "random_unknown";
  }
  return "?";
}

inline const char* to_string(Label l) { return l == Label::Pass ? "PASS" : "WAIT"; }

inline const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::Omit: return "omit";
    case TerminationReason::GapOut: return "gap_out";
    case TerminationReason::MaxOut: return "max_out";
  }
  return "?";
}

inline const char* to_string(DriveMode m) { return m == DriveMode::Krauss ? "krauss" : "sas"; }

inline const char* to_string(PlanKind k) {
  switch (k) {
    case PlanKind::AccelerateCruise: return "accelerate_cruise";
    case PlanKind::GlideCruise: return "glide_cruise";
    case PlanKind::BrakeConstant: return "brake_constant";
    case PlanKind::StopAndWait: return "stop_and_wait";
  }
  return "?";
}

}  // namespace sasim
