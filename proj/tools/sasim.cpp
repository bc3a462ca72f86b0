// Command-line front end: single runs, paired comparisons, experiment sweeps
// and report regeneration over scenario files.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sasim/report_io.hpp"
#include "sasim/sasim.hpp"

namespace fs = std::filesystem;

namespace {

struct RunOptions {
  std::string scenario;
  std::uint64_t seed = 1;
  double horizon = 3600.0;
  std::optional<double> penetration;
  std::optional<std::string> accel_mode;
  std::string predictor = "realtime";
  std::optional<double> demand;
  int trace_stride = 0;
  std::string out;
};

std::string default_out_dir() {
  if (const char* env = std::getenv("SASIM_OUT_DIR")) return env;
  return "out";
}

void add_run_options(CLI::App* cmd, RunOptions& opt) {
  cmd->add_option("--scenario", opt.scenario, "scenario file (.scn)")->required();
  cmd->add_option("--seed", opt.seed, "random seed");
  cmd->add_option("--horizon", opt.horizon, "simulated seconds");
  cmd->add_option("--sas-penetration", opt.penetration,
                  "override SAS penetration on all routes [0,1]");
  cmd->add_option("--accel-mode", opt.accel_mode,
                  "override acceleration mode: fixed|random_known|random_unknown");
  cmd->add_option("--predictor", opt.predictor, "realtime|quantile:ETA|none");
  cmd->add_option("--demand", opt.demand, "override arrival rate on all routes (veh/s)");
  cmd->add_option("--trace-stride", opt.trace_stride, "emit vehicle traces every N steps");
  cmd->add_option("--out", opt.out, "output directory (default $SASIM_OUT_DIR or ./out)");
}

sasim::AccelMode parse_accel_mode(const std::string& s) {
  if (s == "fixed") return sasim::AccelMode::FixedKnown;
  if (s == "random_known") return sasim::AccelMode::RandomKnown;
  if (s == "random_unknown") return sasim::AccelMode::RandomUnknown;
  throw CLI::ValidationError("--accel-mode", "unknown mode '" + s + "'");
}

sasim::EngineConfig make_config(const RunOptions& opt) {
  sasim::EngineConfig cfg;
  cfg.seed = opt.seed;
  cfg.horizon = opt.horizon;
  cfg.penetration_override = opt.penetration;
  if (opt.accel_mode) cfg.accel_mode_override = parse_accel_mode(*opt.accel_mode);
  cfg.demand_rate_override = opt.demand;
  cfg.trace_stride = opt.trace_stride;
  if (opt.predictor == "realtime") {
    cfg.predictor = sasim::PredictorKind::Realtime;
  } else if (opt.predictor == "none") {
    cfg.predictor = sasim::PredictorKind::None;
  } else if (opt.predictor.rfind("quantile:", 0) == 0) {
    cfg.predictor = sasim::PredictorKind::Quantile;
    cfg.quantile_eta = std::stod(opt.predictor.substr(9));
  } else {
    throw CLI::ValidationError("--predictor", "expected realtime|quantile:ETA|none");
  }
  return cfg;
}

sasim::NetworkSpec load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw sasim::ScenarioError("cannot open scenario file " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  sasim::NetworkSpec net = sasim::parse_scenario(buf.str());
  for (const auto& v : sasim::validate(net))
    if (v.warning) std::cerr << "warning: " << v.rule << ": " << v.message << "\n";
  return net;
}

int cmd_simulate(const RunOptions& opt) {
  auto net = load_scenario(opt.scenario);
  auto cfg = make_config(opt);
  auto result = sasim::run(net, cfg);
  fs::path dir = opt.out.empty() ? default_out_dir() : opt.out;
  sasim::io::write_run_csv(dir, "", result);
  auto summary = sasim::io::run_summary_json(result);
  summary["scenario"] = opt.scenario;
  summary["seed"] = opt.seed;
  summary["horizon"] = opt.horizon;
  sasim::io::write_file(dir / "summary.json", summary.dump(2) + "\n");
  std::cout << "simulate: spawned=" << result.spawned << " exited=" << result.exited
            << " cycles=" << result.signal_rows.size() << " out=" << dir.string() << "\n";
  return 0;
}

int cmd_compare(const RunOptions& opt) {
  auto net = load_scenario(opt.scenario);
  auto cfg = make_config(opt);
  auto [baseline, sas] = sasim::paired_run(net, cfg);
  auto rep = sasim::build_report(baseline.crossings, baseline.vehicles, baseline.signal_rows,
                                 baseline.prediction_rows, sas.crossings, sas.vehicles,
                                 sas.signal_rows, sas.prediction_rows);
  fs::path dir = opt.out.empty() ? default_out_dir() : opt.out;
  sasim::io::write_compare_outputs(dir, baseline, sas, rep);
  std::cout << "compare: vehicles=" << rep.mismatch.compared
            << " mismatches=" << rep.mismatch.mismatches
            << " accuracy=" << rep.mismatch.accuracy()
            << " sas_fuel_reduction_pct=" << rep.sas_fuel.reduction_pct
            << " ordinary_fuel_reduction_pct=" << rep.ordinary_fuel.reduction_pct
            << " out=" << dir.string() << "\n";
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& out_dir) {
  auto rep = sasim::io::report_from_dir(in_dir);
  fs::path dir = out_dir.empty() ? in_dir : out_dir;
  fs::create_directories(dir);
  sasim::io::write_file(fs::path(dir) / "report.json",
                        sasim::io::report_to_json(rep).dump(2) + "\n");
  sasim::io::write_file(fs::path(dir) / "report.csv", sasim::io::report_to_csv(rep));
  std::cout << "report: written to " << dir.string() << "\n";
  return 0;
}

struct SweepOptions {
  std::string scenario;
  double horizon = 3600.0;
  std::vector<std::uint64_t> seeds = {1};
  std::vector<double> penetrations = {0.0, 0.2, 0.5, 0.6, 1.0};
  std::vector<double> demands;  // empty: keep scenario demand
  std::vector<std::string> accel_modes = {"fixed"};
  std::string predictor = "realtime";
  std::string out;
};

int cmd_sweep(const SweepOptions& opt) {
  auto net = load_scenario(opt.scenario);
  fs::path dir = opt.out.empty() ? default_out_dir() : opt.out;
  fs::create_directories(dir);
  std::ostringstream os;
  os << "# schema: sasim.sweep.v1\n";
  os << "scenario,demand,penetration,accel_mode,seed,compared,mismatches,accuracy,"
        "sas_fuel_reduction_pct,ordinary_fuel_reduction_pct,pog_baseline,pog_sas,"
        "omit,gap_out,max_out\n";
  std::vector<double> demands = opt.demands;
  if (demands.empty()) demands.push_back(-1.0);  // marker: scenario default
  for (double demand : demands) {
    for (double pen : opt.penetrations) {
      for (const auto& mode : opt.accel_modes) {
        for (std::uint64_t seed : opt.seeds) {
          RunOptions ro;
          ro.scenario = opt.scenario;
          ro.seed = seed;
          ro.horizon = opt.horizon;
          ro.penetration = pen;
          ro.accel_mode = mode;
          ro.predictor = opt.predictor;
          if (demand > 0) ro.demand = demand;
          auto cfg = make_config(ro);
          auto [baseline, sas] = sasim::paired_run(net, cfg);
          auto rep = sasim::build_report(baseline.crossings, baseline.vehicles,
                                         baseline.signal_rows, baseline.prediction_rows,
                                         sas.crossings, sas.vehicles, sas.signal_rows,
                                         sas.prediction_rows);
          os << opt.scenario << ',' << (demand > 0 ? sasim::csv::num(demand) : "default")
             << ',' << sasim::csv::num(pen) << ',' << mode << ',' << seed << ','
             << rep.mismatch.compared << ',' << rep.mismatch.mismatches << ','
             << sasim::csv::num(rep.mismatch.accuracy()) << ','
             << sasim::csv::num(rep.sas_fuel.reduction_pct) << ','
             << sasim::csv::num(rep.ordinary_fuel.reduction_pct) << ','
             << sasim::csv::num(rep.pog_baseline.mean) << ','
             << sasim::csv::num(rep.pog_sas.mean) << ',' << rep.terminations_sas.omit << ','
             << rep.terminations_sas.gap_out << ',' << rep.terminations_sas.max_out << '\n';
        }
      }
    }
  }
  sasim::io::write_file(dir / "sweep.csv", os.str());
  std::cout << "sweep: written to " << (dir / "sweep.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"actuated-corridor traffic simulator with PASS/WAIT phase prediction"};
  app.require_subcommand(1);

  RunOptions sim_opt;
  auto* sim = app.add_subcommand("simulate", "run one scenario and write logs");
  add_run_options(sim, sim_opt);

  RunOptions cmp_opt;
  auto* cmp = app.add_subcommand("compare", "paired baseline/SAS run with a metrics report");
  add_run_options(cmp, cmp_opt);

  SweepOptions sweep_opt;
  auto* swp = app.add_subcommand("sweep", "cartesian experiment sweep, aggregated CSV");
  swp->add_option("--scenario", sweep_opt.scenario, "scenario file")->required();
  swp->add_option("--horizon", sweep_opt.horizon, "simulated seconds");
  swp->add_option("--seeds", sweep_opt.seeds, "seeds to replicate");
  swp->add_option("--penetrations", sweep_opt.penetrations, "SAS penetrations");
  swp->add_option("--demands", sweep_opt.demands, "arrival rates (veh/s)");
  swp->add_option("--accel-modes", sweep_opt.accel_modes, "acceleration modes");
  swp->add_option("--predictor", sweep_opt.predictor, "realtime|quantile:ETA|none");
  swp->add_option("--out", sweep_opt.out, "output directory");

  std::string rep_in, rep_out;
  auto* rep = app.add_subcommand("report", "regenerate the report from stored logs");
  rep->add_option("--in", rep_in, "compare output directory")->required();
  rep->add_option("--out", rep_out, "output directory (default: --in)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_opt);
    if (cmp->parsed()) return cmd_compare(cmp_opt);
    if (swp->parsed()) return cmd_sweep(sweep_opt);
    if (rep->parsed()) return cmd_report(rep_in, rep_out);
  } catch (const sasim::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
