#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "sasim/engine.hpp"
#include "sasim/logs.hpp"
#include "sasim/metrics.hpp"

namespace sasim {

namespace io {

using nlohmann::json;

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("cannot write " + path.string());
  os << content;
}

inline void write_run_csv(const std::filesystem::path& dir, const std::string& prefix,
                          const RunResult& run) {
  std::filesystem::create_directories(dir);
  auto emit = [&](const std::string& name, auto writer) {
    std::ostringstream os;
    writer(os);
    write_file(dir / (prefix + name), os.str());
  };
  emit("events.csv", [&](std::ostream& os) { csv::write_events(os, run.events); });
  emit("signal.csv", [&](std::ostream& os) { csv::write_signal(os, run.signal_rows); });
  emit("predictions.csv",
       [&](std::ostream& os) { csv::write_predictions(os, run.prediction_rows); });
  emit("crossings.csv", [&](std::ostream& os) { csv::write_crossings(os, run.crossings); });
  emit("vehicles.csv", [&](std::ostream& os) { csv::write_vehicles(os, run.vehicles); });
  if (!run.trace.empty())
    emit("trace.csv", [&](std::ostream& os) { csv::write_trace(os, run.trace); });
}

inline json run_summary_json(const RunResult& run) {
  json j;
  j["schema"] = "sasim.summary.v1";
  j["spawned"] = run.spawned;
  j["exited"] = run.exited;
  j["active_at_end"] = run.active_at_end;
  j["negative_gaps"] = run.negative_gaps;
  j["collision_clamps"] = run.collision_clamps;
  j["cycles"] = run.signal_rows.size();
  return j;
}

inline json group_json(const GroupFuel& g) {
  return json{{"vehicles", g.vehicles},
              {"baseline_ml", g.baseline_ml},
              {"treated_ml", g.treated_ml},
              {"reduction_pct", g.reduction_pct}};
}

inline json histogram_json(const ErrorHistogram& h) {
  json buckets = json::object();
  for (const auto& [b, n] : h.buckets) buckets[std::to_string(b)] = n;
  return json{{"n", h.n},
              {"mean_error", h.mean_error},
              {"mean_abs_error", h.mean_abs_error},
              {"share_within_3s", h.share_within_3s},
              {"buckets", buckets}};
}

inline json pog_json(const PogResult& p) {
  json cycles = json::array();
  for (const auto& c : p.cycles)
    cycles.push_back(json{{"intersection", c.intersection},
                          {"cycle", c.cycle},
                          {"arrivals", c.arrivals},
                          {"green_arrivals", c.green_arrivals},
                          {"value", c.value}});
  return json{{"mean", p.mean}, {"peak_cycles", p.peak_cycles}, {"cycles", cycles}};
}

inline json report_to_json(const MetricsReport& rep) {
  json j;
  j["schema"] = "sasim.report.v1";
  j["fuel"]["sas"] = group_json(rep.sas_fuel);
  j["fuel"]["ordinary"] = group_json(rep.ordinary_fuel);

  json per_ix = json::object();
  for (const auto& [ix, mc] : rep.mismatch.per_intersection)
    per_ix[ix] = json{{"mismatches", mc.first},
                      {"compared", mc.second},
                      {"accuracy", mc.second ? 1.0 - double(mc.first) / mc.second : 1.0}};
  json pairs = json::array();
  for (const auto& p : rep.mismatch.pairs)
    pairs.push_back(json{{"vehicle", p.vehicle},
                         {"intersection", p.intersection},
                         {"baseline_cycle", p.baseline_cycle},
                         {"sas_cycle", p.sas_cycle}});
  j["mismatch"] = json{{"compared", rep.mismatch.compared},
                       {"mismatches", rep.mismatch.mismatches},
                       {"unmatched", rep.mismatch.unmatched},
                       {"rate", rep.mismatch.rate()},
                       {"accuracy", rep.mismatch.accuracy()},
                       {"per_intersection", per_ix},
                       {"pairs", pairs}};

  auto term_json = [](const TerminationCounts& t) {
    return json{{"omit", t.omit}, {"gap_out", t.gap_out}, {"max_out", t.max_out}};
  };
  j["terminations"]["baseline"] = term_json(rep.terminations_baseline);
  j["terminations"]["sas"] = term_json(rep.terminations_sas);

  j["pog"]["baseline"] = pog_json(rep.pog_baseline);
  j["pog"]["sas"] = pog_json(rep.pog_sas);

  for (const auto& [algo, h] : rep.errors_baseline)
    j["prediction_errors"]["baseline"][algo] = histogram_json(h);
  for (const auto& [algo, h] : rep.errors_sas)
    j["prediction_errors"]["sas"][algo] = histogram_json(h);
  return j;
}

// Flat series rendering of the report for plotting: table,intersection,key,value.
inline std::string report_to_csv(const MetricsReport& rep) {
  std::ostringstream os;
  os << "# schema: sasim.report.v1\n";
  os << "table,intersection,key,value\n";
  auto pog_rows = [&](const char* table, const PogResult& p) {
    for (const auto& c : p.cycles)
      os << table << ',' << c.intersection << ',' << c.cycle << ',' << csv::num(c.value)
         << '\n';
  };
  pog_rows("pog_baseline", rep.pog_baseline);
  pog_rows("pog_sas", rep.pog_sas);
  auto err_rows = [&](const char* table, const std::map<std::string, ErrorHistogram>& errs) {
    for (const auto& [algo, h] : errs)
      for (const auto& [bucket, n] : h.buckets)
        os << table << ",," << algo << '@' << bucket << ',' << n << '\n';
  };
  err_rows("errors_baseline", rep.errors_baseline);
  err_rows("errors_sas", rep.errors_sas);
  for (const auto& [ix, mc] : rep.mismatch.per_intersection)
    os << "mismatch," << ix << ",accuracy,"
       << csv::num(mc.second ? 1.0 - double(mc.first) / mc.second : 1.0) << '\n';
  os << "fuel,,sas_reduction_pct," << csv::num(rep.sas_fuel.reduction_pct) << '\n';
  os << "fuel,,ordinary_reduction_pct," << csv::num(rep.ordinary_fuel.reduction_pct) << '\n';
  return os.str();
}

template <typename Reader>
inline auto read_csv_file(const std::filesystem::path& path, Reader reader) {
  std::ifstream is(path);
  if (!is) throw DomainError("cannot read " + path.string());
  return reader(is);
}

// Rebuild the metrics report from the stored logs of a compare directory.
inline MetricsReport report_from_dir(const std::filesystem::path& dir) {
  auto base_crossings = read_csv_file(dir / "baseline_crossings.csv", csv::read_crossings);
  auto base_vehicles = read_csv_file(dir / "baseline_vehicles.csv", csv::read_vehicles);
  auto base_signal = read_csv_file(dir / "baseline_signal.csv", csv::read_signal);
  auto base_pred = read_csv_file(dir / "baseline_predictions.csv", csv::read_predictions);
  auto sas_crossings = read_csv_file(dir / "sas_crossings.csv", csv::read_crossings);
  auto sas_vehicles = read_csv_file(dir / "sas_vehicles.csv", csv::read_vehicles);
  auto sas_signal = read_csv_file(dir / "sas_signal.csv", csv::read_signal);
  auto sas_pred = read_csv_file(dir / "sas_predictions.csv", csv::read_predictions);
  return build_report(base_crossings, base_vehicles, base_signal, base_pred, sas_crossings,
                      sas_vehicles, sas_signal, sas_pred);
}

inline void write_compare_outputs(const std::filesystem::path& dir, const RunResult& baseline,
                                  const RunResult& sas, const MetricsReport& rep) {
  write_run_csv(dir, "baseline_", baseline);
  write_run_csv(dir, "sas_", sas);
  write_file(dir / "report.json", report_to_json(rep).dump(2) + "\n");
  write_file(dir / "report.csv", report_to_csv(rep));
}

}  // namespace io
}  // namespace sasim
