#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "sasim/metrics.hpp"
#include "sasim/rng.hpp"

using namespace sasim;

namespace {

std::vector<TracePoint> flat_trace(double speed, double accel, double seconds, double dt = 0.1) {
  std::vector<TracePoint> out;
  for (double t = 0.0; t <= seconds + 1e-9; t += dt)
    out.push_back({t, 0, "L", speed * t, speed, accel, DriveMode::Krauss, '-'});
  return out;
}

CrossingRow crossing(int veh, const std::string& ix, int cycle, char state = 'G',
                     bool actuated = true) {
  CrossingRow r;
  r.vehicle = veh;
  r.intersection = ix;
  r.cycle = cycle;
  r.time = cycle * 90.0 + 10.0;
  r.state = state;
  r.actuated_approach = actuated;
  return r;
}

}  // namespace

TEST_CASE("fuel model") {
  FuelParams fuel;
  SECTION("idling burns the idle rate") {
    CHECK(fuel_consumed(flat_trace(0.0, 0.0, 100.0), fuel) == Catch::Approx(40.0));
  }
  SECTION("steady cruise matches the polynomial rate") {
    // Independent recomputation: 0.20 + 0.025*15 + 0.0009*225 + 0.00004*3375.
    double rate = 0.20 + 0.375 + 0.2025 + 0.135;
    CHECK(fuel_consumed(flat_trace(15.0, 0.0, 100.0), fuel) == Catch::Approx(100.0 * rate));
  }
  SECTION("identical traces burn identical fuel") {
    auto a = flat_trace(12.0, 0.5, 60.0);
    CHECK(fuel_consumed(a, fuel) == Catch::Approx(fuel_consumed(a, fuel)));
  }
  SECTION("rate is nondecreasing in positive acceleration") {
    for (double v : {2.0, 8.0, 15.0}) {
      double prev = -1.0;
      for (double a : {0.0, 0.5, 1.5, 2.5}) {
        double r = fuel.rate(v, a);
        CHECK(r >= prev);
        prev = r;
      }
      CHECK(fuel.rate(v, -2.0) == fuel.rate(v, 0.0));  // braking adds nothing
    }
  }
  SECTION("fuel is additive over any partition of the trace") {
    CounterRng rng(19, "fuel");
    std::vector<TracePoint> trace;
    double v = 10.0;
    for (int k = 0; k <= 600; ++k) {
      double a = (rng.next() - 0.5) * 3.0;
      v = std::max(0.0, std::min(15.0, v + a * 0.1));
      trace.push_back({k * 0.1, 0, "L", 0.0, v, a, DriveMode::Krauss, '-'});
    }
    double whole = fuel_consumed(trace, fuel);
    for (std::size_t cut : {std::size_t(1), std::size_t(100), std::size_t(599)}) {
      std::vector<TracePoint> head(trace.begin(), trace.begin() + cut + 1);
      std::vector<TracePoint> tail(trace.begin() + cut, trace.end());
      CHECK(fuel_consumed(head, fuel) + fuel_consumed(tail, fuel) == Catch::Approx(whole));
    }
  }
}

TEST_CASE("mismatch counting") {
  SECTION("identical crossing cycles everywhere means zero mismatches") {
    std::vector<CrossingRow> rows = {crossing(1, "J1", 3), crossing(2, "J1", 4)};
    auto res = mismatches(rows, rows);
    CHECK(res.compared == 2);
    CHECK(res.mismatches == 0);
  }
  SECTION("a later SAS crossing is one mismatch") {
    std::vector<CrossingRow> base = {crossing(1, "J1", 3), crossing(2, "J1", 3)};
    std::vector<CrossingRow> sas = {crossing(1, "J1", 4), crossing(2, "J1", 3)};
    auto res = mismatches(base, sas);
    CHECK(res.mismatches == 1);
    REQUIRE(res.pairs.size() == 1);
    CHECK(res.pairs[0].vehicle == 1);
    CHECK(res.pairs[0].baseline_cycle == 3);
    CHECK(res.pairs[0].sas_cycle == 4);
  }
  SECTION("an earlier SAS crossing is not a mismatch") {
    std::vector<CrossingRow> base = {crossing(1, "J1", 5)};
    std::vector<CrossingRow> sas = {crossing(1, "J1", 4)};
    CHECK(mismatches(base, sas).mismatches == 0);
  }
  SECTION("vehicles seen in only one run are excluded and reported") {
    std::vector<CrossingRow> base = {crossing(1, "J1", 3), crossing(2, "J1", 3)};
    std::vector<CrossingRow> sas = {crossing(1, "J1", 3), crossing(3, "J1", 3)};
    auto res = mismatches(base, sas);
    CHECK(res.compared == 1);
    CHECK(res.unmatched == 2);
  }
  SECTION("non-actuated approaches do not enter the count") {
    std::vector<CrossingRow> base = {crossing(1, "J1", 3, 'G', false)};
    std::vector<CrossingRow> sas = {crossing(1, "J1", 9, 'G', false)};
    CHECK(mismatches(base, sas).compared == 0);
  }
}

TEST_CASE("percent on green") {
  SECTION("all arrivals during green") {
    std::vector<CrossingRow> rows = {crossing(1, "J1", 0, 'G'), crossing(2, "J1", 0, 'G')};
    auto res = pog(rows, {});
    REQUIRE(res.cycles.size() == 1);
    CHECK(res.cycles[0].value == Catch::Approx(1.0));
    CHECK(res.peak_cycles == 1);
  }
  SECTION("all arrivals during red") {
    std::vector<CrossingRow> rows = {crossing(1, "J1", 0, 'r'), crossing(2, "J1", 0, 'r')};
    CHECK(pog(rows, {}).cycles[0].value == Catch::Approx(0.0));
  }
  SECTION("three of four arrivals on green") {
    std::vector<CrossingRow> rows = {crossing(1, "J1", 2, 'G'), crossing(2, "J1", 2, 'G'),
                                     crossing(3, "J1", 2, 'G'), crossing(4, "J1", 2, 'y')};
    CHECK(pog(rows, {}).cycles[0].value == Catch::Approx(0.75));
  }
  SECTION("invariant under relabeling of vehicle ids") {
    std::vector<CrossingRow> rows = {crossing(1, "J1", 2, 'G'), crossing(2, "J1", 2, 'r'),
                                     crossing(3, "J1", 3, 'G')};
    auto before = pog(rows, {});
    for (auto& r : rows) r.vehicle += 1000;
    std::reverse(rows.begin(), rows.end());
    auto after = pog(rows, {});
    REQUIRE(before.cycles.size() == after.cycles.size());
    for (std::size_t i = 0; i < before.cycles.size(); ++i)
      CHECK(before.cycles[i].value == after.cycles[i].value);
  }
  SECTION("cycles with no arrivals are omitted") {
    std::vector<CrossingRow> rows = {crossing(1, "J1", 0, 'G'), crossing(2, "J1", 7, 'r')};
    auto res = pog(rows, {});
    CHECK(res.cycles.size() == 2);
    CHECK(res.mean == Catch::Approx(0.5));
  }
}

TEST_CASE("prediction error histograms") {
  SECTION("perfect predictions pile up at zero") {
    std::vector<PredictionLogRow> rows;
    for (int c = 0; c < 10; ++c) rows.push_back({"J1", c, "A", 39.0, 39.0});
    auto hists = prediction_errors(rows);
    REQUIRE(hists.count("A"));
    CHECK(hists["A"].buckets.size() == 1);
    CHECK(hists["A"].buckets[0] == 10);
    CHECK(hists["A"].share_within_3s == Catch::Approx(1.0));
  }
  SECTION("a constant overestimate lands in one positive bucket") {
    std::vector<PredictionLogRow> rows;
    for (int c = 0; c < 10; ++c) rows.push_back({"J1", c, "B@0.8", 44.0, 39.0});
    auto hists = prediction_errors(rows);
    CHECK(hists["B@0.8"].buckets[5] == 10);
    CHECK(hists["B@0.8"].share_within_3s == Catch::Approx(0.0));
    CHECK(hists["B@0.8"].mean_error == Catch::Approx(5.0));
  }
  SECTION("the statistical baseline overestimates after a demand drop") {
    // Realized durations fall to the minimum; the quantile stays at the max.
    std::vector<PredictionLogRow> rows;
    for (int c = 20; c < 30; ++c) {
      rows.push_back({"J1", c, "A", 39.0, 39.0});
      rows.push_back({"J1", c, "B@0.8", 48.0, 39.0});
    }
    auto hists = prediction_errors(rows);
    CHECK(hists["A"].mean_abs_error < hists["B@0.8"].mean_abs_error);
    double positive_mass = 0;
    for (const auto& [bucket, n] : hists["B@0.8"].buckets)
      if (bucket > 0) positive_mass += n;
    CHECK(positive_mass == 10);
  }
}

TEST_CASE("fuel groups join paired vehicles on id") {
  std::vector<VehicleRow> base(4), sas(4);
  for (int i = 0; i < 4; ++i) {
    base[i].id = sas[i].id = i;
    base[i].exited = sas[i].exited = true;
    base[i].traverses_actuated = sas[i].traverses_actuated = true;
    base[i].sas_equipped = sas[i].sas_equipped = (i < 2);
    base[i].fuel_ml = 100.0;
    sas[i].fuel_ml = (i < 2) ? 70.0 : 95.0;
  }
  base[3].traverses_actuated = sas[3].traverses_actuated = false;  // side street
  GroupFuel sg, og;
  fuel_groups(base, sas, sg, og);
  CHECK(sg.vehicles == 2);
  CHECK(sg.reduction_pct == Catch::Approx(30.0));
  CHECK(og.vehicles == 1);
  CHECK(og.reduction_pct == Catch::Approx(5.0));
}
