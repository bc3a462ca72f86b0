#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "sasim/scenario.hpp"
#include "sasim/signal_control.hpp"

using namespace sasim;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string scenario_path(const char* name) {
  return std::string(SASIM_SCENARIO_DIR) + "/" + name;
}

// Minimal valid single-intersection scenario used for mutation tests.
NetworkSpec tiny_network() {
  NetworkSpec net;
  net.links.push_back({"in", 500, 15, "J", Heading::E});
  net.links.push_back({"side", 500, 15, "J", Heading::N});
  net.detectors.push_back({DetectorKind::Counter, "in", 160});
  net.detectors.push_back({DetectorKind::Actuator, "in", 60});
  SignalSpec sig;
  sig.intersection = "J";
  sig.cycle_length = 90;
  sig.min_gap = 3;
  sig.complementary_phase_index = 2;
  sig.phases = {{"Gr", 39, 48, true}, {"yr", 6, 6, false}, {"rG", 30, 39, false},
                {"ry", 6, 6, false}};
  net.signals.push_back(sig);
  DemandSpec d;
  d.route = {"in"};
  d.arrival_rate = 0.1;
  net.demands.push_back(d);
  return net;
}

bool has_violation(const std::vector<Violation>& vs, const std::string& rule) {
  for (const auto& v : vs)
    if (v.rule == rule && !v.warning) return true;
  return false;
}

}  // namespace

TEST_CASE("simple scenario parses with the published signal table") {
  NetworkSpec net = parse_scenario(read_file(scenario_path("simple.scn")));
  REQUIRE(net.signals.size() == 1);
  const SignalSpec& sig = net.signals[0];
  CHECK(sig.cycle_length == 90.0);
  REQUIRE(sig.phases.size() == 4);
  CHECK(sig.phases[0].min_duration == 39.0);
  CHECK(sig.phases[0].max_duration == 48.0);
  CHECK(sig.phases[0].actuated);
  CHECK(sig.phases[1].min_duration == 6.0);
  CHECK(sig.phases[2].min_duration == 30.0);
  CHECK(sig.phases[2].max_duration == 39.0);
  CHECK(sig.phases[3].min_duration == 6.0);

  // Two actuated approaches (east and west).
  auto approaches = net.approach_links("J1");
  REQUIRE(approaches.size() == 4);
  int actuated = 0;
  for (std::size_t a = 0; a < approaches.size(); ++a)
    actuated += sig.phases[0].state_string[a] == 'G';
  CHECK(actuated == 2);
}

TEST_CASE("corridor scenario parses and validates") {
  NetworkSpec net = parse_scenario(read_file(scenario_path("corridor9.scn")));
  CHECK(net.signals.size() == 9);
  CHECK(validate(net).empty());
}

TEST_CASE("empty demand list is a valid network") {
  NetworkSpec net = tiny_network();
  net.demands.clear();
  CHECK(validate(net).empty());
}

TEST_CASE("phase with min above max is rejected") {
  NetworkSpec net = tiny_network();
  net.signals[0].phases[0].min_duration = 50;  // above max 48
  CHECK(has_violation(validate(net), "InvariantViolation"));
  std::string text = serialize_scenario(net);
  CHECK_THROWS_AS(parse_scenario(text), ScenarioError);
}

TEST_CASE("counter downstream of the actuator is rejected") {
  NetworkSpec net = tiny_network();
  net.detectors[0].distance_to_stopline = 60;
  net.detectors[1].distance_to_stopline = 70;
  CHECK(has_violation(validate(net), "DetectorOrdering"));
}

TEST_CASE("cycle budget inconsistencies are rejected") {
  NetworkSpec net = tiny_network();
  SECTION("sum of minimums plus complementary maximum misses the cycle") {
    net.signals[0].cycle_length = 95;
    CHECK(has_violation(validate(net), "CycleBudget"));
  }
  SECTION("actuated extension differs from complementary range") {
    net.signals[0].phases[2].min_duration = 25;  // range 14 vs actuated 9
    CHECK(has_violation(validate(net), "CycleBudget"));
  }
  SECTION("the published table satisfies both rules") {
    // 39 + 6 + 6 + max(39) = 90 and 48 - 39 == 39 - 30.
    CHECK(validate(net).empty());
  }
}

TEST_CASE("actuated approaches need exactly one counter and one actuator") {
  NetworkSpec net = tiny_network();
  SECTION("missing actuator") {
    net.detectors.pop_back();
    CHECK(has_violation(validate(net), "DetectorCoverage"));
  }
  SECTION("duplicate counter") {
    net.detectors.push_back({DetectorKind::Counter, "in", 200});
    CHECK(has_violation(validate(net), "DetectorCoverage"));
  }
  SECTION("counter closer than 50 m to the actuator") {
    net.detectors[0].distance_to_stopline = 100;
    CHECK(has_violation(validate(net), "CounterSpacing"));
  }
}

TEST_CASE("dangling references fail the parse with a line number") {
  std::string text =
      "[link]\nid = a\nlength = 100\nspeed_limit = 15\ndownstream = nowhere\nheading = E\n";
  try {
    parse_scenario(text);
    FAIL("expected ScenarioError");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("DanglingReference") != std::string::npos);
  }
}

TEST_CASE("syntax errors carry line numbers") {
  try {
    parse_scenario("[link]\nid = a\nbogus_key = 3\n");
    FAIL("expected ScenarioError");
  } catch (const ScenarioError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("keys outside sections and malformed headers are rejected") {
  CHECK_THROWS_AS(parse_scenario("id = a\n"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("[link\nid = a\n"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("[phase]\nstate = G\n"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("[link]\nid = a\nlength = twelve\n"), ScenarioError);
}

TEST_CASE("parse then serialize then parse is identity") {
  for (const char* name : {"simple.scn", "corridor9.scn"}) {
    std::string text = read_file(scenario_path(name));
    std::string once = serialize_scenario(parse_scenario(text));
    std::string twice = serialize_scenario(parse_scenario(once));
    CHECK(once == twice);
  }
}

TEST_CASE("short links clamp the actuation threshold with a warning") {
  NetworkSpec net = tiny_network();
  // Actuator far out on a slow link: travel time exceeds the minimum green.
  net.links[0].speed_limit = 2.0;
  net.detectors[0].distance_to_stopline = 160;
  net.detectors[1].distance_to_stopline = 100;
  bool warned = false;
  for (const auto& v : validate(net))
    if (v.rule == "ActuationThreshold") warned = v.warning;
  CHECK(warned);
  ActuationParams ap = ActuationParams::derive(39, 100, 2.0);
  CHECK(ap.t_th == 0.0);
  CHECK(ap.t_a_i == 50.0);
}
