#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sasim/core.hpp"
#include "sasim/logs.hpp"
#include "sasim/signal_control.hpp"

namespace sasim {

// Surrogate fuel model: cubic in speed with an acceleration-coupled term,
// floored at the idle rate. Configuration, not ground truth; all fuel
// results are therefore relative to a same-model baseline.
struct FuelParams {
  double idle_rate = 0.40;  // mL/s
  double b0 = 0.20;
  double b1 = 0.025;
  double b2 = 0.0009;
  double b3 = 0.00004;
  double c0 = 0.09;
  double c1 = 0.004;

  double rate(double v, double a) const {
    double r = b0 + b1 * v + b2 * v * v + b3 * v * v * v +
               std::max(a, 0.0) * v * (c0 + c1 * v);
    return std::max(idle_rate, r);
  }
};

// Trapezoidal integral of rate(v, a) over one vehicle's trace.
inline double fuel_consumed(const std::vector<TracePoint>& trace, const FuelParams& params) {
  double total = 0.0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    double dt = trace[i].time - trace[i - 1].time;
    double r0 = params.rate(trace[i - 1].speed, trace[i - 1].accel);
    double r1 = params.rate(trace[i].speed, trace[i].accel);
    total += 0.5 * (r0 + r1) * dt;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Cycle mismatches between a paired baseline and SAS run: a mismatch is a
// vehicle that crossed an intersection in a strictly later cycle with SAS
// active than without. Measured on actuated approaches (the ones the
// algorithm predicts). Vehicles seen in only one run are reported and
// excluded.
// ---------------------------------------------------------------------------

struct MismatchPair {
  int vehicle = 0;
  std::string intersection;
  int baseline_cycle = 0;
  int sas_cycle = 0;
};

struct MismatchResult {
  int compared = 0;
  int mismatches = 0;
  int unmatched = 0;
  std::vector<MismatchPair> pairs;  // the mismatching vehicles
  // intersection -> {mismatches, compared}
  std::map<std::string, std::pair<int, int>> per_intersection;

  double rate() const { return compared ? static_cast<double>(mismatches) / compared : 0.0; }
  double accuracy() const { return 1.0 - rate(); }
};

inline MismatchResult mismatches(const std::vector<CrossingRow>& baseline,
                                 const std::vector<CrossingRow>& sas) {
  auto key_map = [](const std::vector<CrossingRow>& rows) {
    std::map<std::pair<int, std::string>, int> m;  // first crossing wins
    for (const auto& r : rows)
      if (r.actuated_approach) m.emplace(std::make_pair(r.vehicle, r.intersection), r.cycle);
    return m;
  };
  auto base = key_map(baseline);
  auto with = key_map(sas);

  MismatchResult res;
  for (const auto& [key, base_cycle] : base) {
    auto it = with.find(key);
    if (it == with.end()) {
      ++res.unmatched;
      continue;
    }
    ++res.compared;
    auto& per = res.per_intersection[key.second];
    ++per.second;
    if (it->second > base_cycle) {
      ++res.mismatches;
      ++per.first;
      res.pairs.push_back({key.first, key.second, base_cycle, it->second});
    }
  }
  for (const auto& [key, cyc] : with) {
    (void)cyc;
    if (!base.count(key)) ++res.unmatched;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Percent-on-green: per cycle, the fraction of stop-line arrivals on actuated
// approaches that happened during the actuated green. Cycles without
// arrivals are omitted from the average.
// ---------------------------------------------------------------------------

struct PogCycle {
  std::string intersection;
  int cycle = 0;
  int arrivals = 0;
  int green_arrivals = 0;
  double value = 0.0;
};

struct PogResult {
  std::vector<PogCycle> cycles;
  double mean = 0.0;
  int peak_cycles = 0;  // cycles at POG == 1.0

  double mean_for(const std::string& intersection) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& c : cycles)
      if (c.intersection == intersection) {
        sum += c.value;
        ++n;
      }
    return n ? sum / n : 0.0;
  }
};

inline PogResult pog(const std::vector<CrossingRow>& crossings,
                     const std::vector<SignalLogRow>& signal_rows) {
  (void)signal_rows;  // cycle attribution is carried on the crossing rows
  std::map<std::pair<std::string, int>, std::pair<int, int>> per;  // {green, total}
  for (const auto& r : crossings) {
    if (!r.actuated_approach) continue;
    auto& cell = per[{r.intersection, r.cycle}];
    ++cell.second;
    if (r.state == 'G') ++cell.first;
  }
  PogResult res;
  double sum = 0.0;
  for (const auto& [key, cnt] : per) {
    PogCycle c;
    c.intersection = key.first;
    c.cycle = key.second;
    c.green_arrivals = cnt.first;
    c.arrivals = cnt.second;
    c.value = cnt.second ? static_cast<double>(cnt.first) / cnt.second : 0.0;
    if (c.value >= 1.0 - kEps) ++res.peak_cycles;
    sum += c.value;
    res.cycles.push_back(std::move(c));
  }
  res.mean = res.cycles.empty() ? 0.0 : sum / static_cast<double>(res.cycles.size());
  return res;
}

// ---------------------------------------------------------------------------
// Prediction error histograms, bucketed at 1 s. Errors under 3 s are treated
// as insignificant and reported as a share.
// ---------------------------------------------------------------------------

struct ErrorHistogram {
  std::map<int, int> buckets;  // signed error rounded to whole seconds
  int n = 0;
  double mean_error = 0.0;
  double mean_abs_error = 0.0;
  double share_within_3s = 0.0;
};

inline std::map<std::string, ErrorHistogram> prediction_errors(
    const std::vector<PredictionLogRow>& rows) {
  std::map<std::string, ErrorHistogram> out;
  for (const auto& r : rows) {
    auto& h = out[r.algorithm];
    double e = r.error();
    ++h.buckets[static_cast<int>(std::lround(e))];
    ++h.n;
    h.mean_error += e;
    h.mean_abs_error += std::abs(e);
    if (std::abs(e) < 3.0) h.share_within_3s += 1.0;
  }
  for (auto& [name, h] : out) {
    (void)name;
    if (h.n) {
      h.mean_error /= h.n;
      h.mean_abs_error /= h.n;
      h.share_within_3s /= h.n;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregate report over a paired run.
// ---------------------------------------------------------------------------

struct GroupFuel {
  int vehicles = 0;
  double baseline_ml = 0.0;
  double treated_ml = 0.0;
  // Percent reduction vs. the paired baseline, clamped to [-100, 100].
  double reduction_pct = 0.0;
};

// Per-vehicle fuel comparison joined on id; only trips completed in both runs
// and routed over an actuated approach are counted.
inline void fuel_groups(const std::vector<VehicleRow>& baseline,
                        const std::vector<VehicleRow>& sas, GroupFuel& sas_group,
                        GroupFuel& ordinary_group) {
  std::map<int, const VehicleRow*> base;
  for (const auto& v : baseline)
    if (v.exited && v.traverses_actuated) base[v.id] = &v;
  for (const auto& v : sas) {
    if (!v.exited || !v.traverses_actuated) continue;
    auto it = base.find(v.id);
    if (it == base.end()) continue;
    GroupFuel& g = v.sas_equipped ? sas_group : ordinary_group;
    ++g.vehicles;
    g.baseline_ml += it->second->fuel_ml;
    g.treated_ml += v.fuel_ml;
  }
  for (GroupFuel* g : {&sas_group, &ordinary_group}) {
    if (g->baseline_ml > 0.0)
      g->reduction_pct = std::clamp(
          100.0 * (g->baseline_ml - g->treated_ml) / g->baseline_ml, -100.0, 100.0);
  }
}

struct MetricsReport {
  GroupFuel sas_fuel;
  GroupFuel ordinary_fuel;
  MismatchResult mismatch;
  TerminationCounts terminations_baseline;
  TerminationCounts terminations_sas;
  PogResult pog_baseline;
  PogResult pog_sas;
  std::map<std::string, ErrorHistogram> errors_baseline;
  std::map<std::string, ErrorHistogram> errors_sas;
};

inline TerminationCounts count_terminations(const std::vector<SignalLogRow>& rows) {
  TerminationCounts c;
  for (const auto& r : rows) {
    switch (r.reason) {
      case TerminationReason::Omit: ++c.omit; break;
      case TerminationReason::GapOut: ++c.gap_out; break;
      case TerminationReason::MaxOut: ++c.max_out; break;
    }
  }
  return c;
}

inline MetricsReport build_report(const std::vector<CrossingRow>& base_crossings,
                                  const std::vector<VehicleRow>& base_vehicles,
                                  const std::vector<SignalLogRow>& base_signal,
                                  const std::vector<PredictionLogRow>& base_predictions,
                                  const std::vector<CrossingRow>& sas_crossings,
                                  const std::vector<VehicleRow>& sas_vehicles,
                                  const std::vector<SignalLogRow>& sas_signal,
                                  const std::vector<PredictionLogRow>& sas_predictions) {
  MetricsReport rep;
  fuel_groups(base_vehicles, sas_vehicles, rep.sas_fuel, rep.ordinary_fuel);
  rep.mismatch = mismatches(base_crossings, sas_crossings);
  rep.terminations_baseline = count_terminations(base_signal);
  rep.terminations_sas = count_terminations(sas_signal);
  rep.pog_baseline = pog(base_crossings, base_signal);
  rep.pog_sas = pog(sas_crossings, sas_signal);
  rep.errors_baseline = prediction_errors(base_predictions);
  rep.errors_sas = prediction_errors(sas_predictions);
  return rep;
}

}  // namespace sasim
