#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sasim/core.hpp"
#include "sasim/logs.hpp"
#include "sasim/metrics.hpp"
#include "sasim/predictor.hpp"
#include "sasim/rng.hpp"
#include "sasim/scenario.hpp"
#include "sasim/signal_control.hpp"
#include "sasim/vehicle.hpp"

namespace sasim {

enum class PredictorKind { Realtime, Quantile, None };

struct EngineConfig {
  double dt = kDt;
  double horizon = 3600.0;  // seconds
  std::uint64_t seed = 1;

  // Baseline leg of a paired run: penetration flags are still drawn (for
  // grouping) but no vehicle is SAS-controlled.
  bool sas_active = true;

  std::optional<double> penetration_override;  // applies to every route
  std::optional<AccelMode> accel_mode_override;
  std::optional<double> demand_rate_override;  // veh/s, applies to every route

  PredictorKind predictor = PredictorKind::Realtime;
  double quantile_eta = 0.8;          // eta used when predictor == Quantile
  std::vector<double> logged_etas = {0.8, 0.1};
  int quantile_bootstrap_cycles = 5;  // realized cycles seeded before scoring

  int trace_stride = 0;  // 0 disables per-vehicle traces
  double switch_dwell = 3.0;
  KraussParams krauss;
  FuelParams fuel;
};

struct RunResult {
  std::vector<EventRecord> events;
  std::vector<SignalLogRow> signal_rows;
  std::vector<PredictionLogRow> prediction_rows;
  std::vector<CrossingRow> crossings;
  std::vector<VehicleRow> vehicles;
  std::vector<TracePoint> trace;
  int spawned = 0;
  int exited = 0;
  int active_at_end = 0;
  int negative_gaps = 0;     // safety invariant violations, must stay 0
  int collision_clamps = 0;  // emergency position clamps, should stay 0
};

class Simulation {
 public:
  Simulation(const NetworkSpec& net, const EngineConfig& cfg) : net_(net), cfg_(cfg) {
    build_static();
    build_controllers();
    build_arrivals();
    // Cycle 0 opens with the actuated green; seed its control prediction.
    for (auto& ix : intersections_) note_green_start(ix);
  }

  double now() const { return static_cast<double>(step_) * cfg_.dt; }

  // One step: (1) spawn arrivals, (2) signal ticks, (3) detector crossings
  // from the previous advance, (4) labels and plans for SAS vehicles that
  // crossed a counter, (5) advance vehicles, (6) bookkeeping.
  void step() {
    const double t = now();
    process_spawns(t);
    tick_signals(t);
    detect_detector_crossings(t);
    apply_labels_and_plans(t);
    advance_vehicles(t);
    finish_step(t);
    ++step_;
  }

  RunResult run() {
    const auto steps = static_cast<long long>(std::llround(cfg_.horizon / cfg_.dt));
    for (long long i = 0; i < steps; ++i) step();
    finalize();
    return std::move(result_);
  }

  // Test hooks.
  const SignalController& controller(const std::string& intersection) const {
    return intersections_[ix_index(intersection)].ctrl;
  }
  const CounterStore& counter_store(const std::string& intersection) const {
    return intersections_[ix_index(intersection)].store;
  }

 private:
  // --- static world ----------------------------------------------------------

  struct LinkRt {
    double length = 0.0;
    double speed_limit = 0.0;
    int signal = -1;        // intersection index, -1 if the link just ends
    int approach_pos = -1;  // column in the phase state strings
    bool actuated = false;
    double counter_off = -1.0;  // from link start, <0 when absent
    double actuator_off = -1.0;
    double counter_to_actuator = 0.0;
  };

  struct RouteRt {
    int demand = 0;
    std::vector<int> links;
    std::vector<double> link_start;  // route offset of each link start
    double total_length = 0.0;
    bool traverses_actuated = false;
    double rate = 0.0;
    double penetration = 0.0;
    AccelMode accel_mode = AccelMode::FixedKnown;
    double accel_min = 2.0, accel_max = 3.5, assumed_accel = 2.75;
  };

  struct IntersectionRt {
    std::string id;
    SignalController ctrl;
    CounterStore store;
    std::vector<QuantileHistory> histories;  // one per logged eta
    std::optional<double> control_pred;      // quantile prediction for control
    PredictorConfig pcfg;

    IntersectionRt(std::string id_, SignalController c, CounterStore s, PredictorConfig p)
        : id(std::move(id_)), ctrl(std::move(c)), store(std::move(s)), pcfg(p) {}
  };

  struct Arrival {
    double time;
    int route;
    int id;
  };

  struct Veh {
    VehicleState st;
    double spawn_time = 0.0;
    bool spawned = false;
    double prev_position = 0.0;  // position before the previous advance
    int prev_cursor = 0;
    int cursor = 0;  // index into the route's link list
    double accel = 0.0;
    double prev_fuel_rate = 0.0;
    double fuel = 0.0;
    double distance = 0.0;
    int stops = 0;
    bool was_stopped = false;
    bool active = false;
    bool exited = false;
    double exit_time = 0.0;
  };

  void build_static() {
    links_.resize(net_.links.size());
    for (std::size_t li = 0; li < net_.links.size(); ++li) {
      const auto& l = net_.links[li];
      LinkRt rt;
      rt.length = l.length;
      rt.speed_limit = l.speed_limit;
      if (const auto* d = net_.detector_on(l.id, DetectorKind::Counter))
        rt.counter_off = l.length - d->distance_to_stopline;
      if (const auto* d = net_.detector_on(l.id, DetectorKind::Actuator))
        rt.actuator_off = l.length - d->distance_to_stopline;
      if (rt.counter_off >= 0 && rt.actuator_off >= 0)
        rt.counter_to_actuator = rt.actuator_off - rt.counter_off;
      links_[li] = rt;
    }
    for (std::size_t si = 0; si < net_.signals.size(); ++si) {
      const auto& sig = net_.signals[si];
      auto approaches = net_.approach_links(sig.intersection);
      int act_phase = sig.actuated_phase_index();
      for (std::size_t a = 0; a < approaches.size(); ++a) {
        LinkRt& rt = links_[approaches[a]];
        rt.signal = static_cast<int>(si);
        rt.approach_pos = static_cast<int>(a);
        rt.actuated = sig.phases[act_phase].state_string[a] == 'G';
      }
    }
    routes_.resize(net_.demands.size());
    for (std::size_t di = 0; di < net_.demands.size(); ++di) {
      const auto& d = net_.demands[di];
      RouteRt r;
      r.demand = static_cast<int>(di);
      double off = 0.0;
      for (const auto& lid : d.route) {
        int li = net_.link_index(lid);
        r.links.push_back(li);
        r.link_start.push_back(off);
        off += net_.links[li].length;
        if (links_[li].actuated) r.traverses_actuated = true;
      }
      r.total_length = off;
      r.rate = cfg_.demand_rate_override.value_or(d.arrival_rate);
      r.penetration = cfg_.penetration_override.value_or(d.sas_penetration);
      r.accel_mode = cfg_.accel_mode_override.value_or(d.accel_mode);
      r.accel_min = d.accel_min;
      r.accel_max = d.accel_max;
      r.assumed_accel = d.assumed_accel;
      routes_[di] = r;
    }
    link_vehicles_.assign(net_.links.size(), {});
  }

  void build_controllers() {
    for (std::size_t si = 0; si < net_.signals.size(); ++si) {
      const auto& sig = net_.signals[si];
      // All actuated approaches of one signal share the same travel time
      // (validated), so derive the actuation from the first one.
      ActuationParams ap{1.0, 0.0};
      for (int li : net_.approach_links(sig.intersection)) {
        const LinkRt& rt = links_[li];
        if (!rt.actuated || rt.actuator_off < 0) continue;
        ap = ActuationParams::derive(sig.phases[sig.actuated_phase_index()].min_duration,
                                     rt.length - rt.actuator_off, rt.speed_limit);
        break;
      }
      double assumed = routes_.empty() ? 2.75 : routes_[0].assumed_accel;
      PredictorConfig pcfg = PredictorConfig::derive(sig, ap, assumed);
      IntersectionRt ix(sig.intersection, SignalController(sig, ap), CounterStore(pcfg), pcfg);
      double min_red = sig.cycle_length - sig.phases[sig.actuated_phase_index()].max_duration;
      for (double eta : cfg_.logged_etas) ix.histories.emplace_back(eta, min_red);
      if (cfg_.predictor == PredictorKind::Quantile) {
        bool have = false;
        for (double eta : cfg_.logged_etas) have |= std::abs(eta - cfg_.quantile_eta) < 1e-12;
        if (!have) ix.histories.emplace_back(cfg_.quantile_eta, min_red);
      }
      intersections_.push_back(std::move(ix));
    }
  }

  int ix_index(const std::string& id) const {
    for (std::size_t i = 0; i < intersections_.size(); ++i)
      if (intersections_[i].id == id) return static_cast<int>(i);
    throw DomainError("unknown intersection " + id);
  }

  void build_arrivals() {
    std::vector<Arrival> all;
    for (std::size_t ri = 0; ri < routes_.size(); ++ri) {
      const auto& d = net_.demands[ri];
      CounterRng rng(cfg_.seed ^ (d.seed * 0x9e3779b97f4a7c15ULL),
                     "spawn:" + std::to_string(ri));
      double t = 0.0;
      std::uint64_t k = 0;
      while (true) {
        t += -std::log1p(-rng.at(k++)) / routes_[ri].rate;
        if (t > cfg_.horizon) break;
        all.push_back({t, static_cast<int>(ri), 0});
      }
    }
    std::stable_sort(all.begin(), all.end(), [](const Arrival& a, const Arrival& b) {
      if (a.time != b.time) return a.time < b.time;
      return a.route < b.route;
    });
    for (std::size_t i = 0; i < all.size(); ++i) all[i].id = static_cast<int>(i);
    arrivals_ = std::move(all);

    CounterRng accel_rng(cfg_.seed, "accel");
    CounterRng sas_rng(cfg_.seed, "sas");
    vehicles_.resize(arrivals_.size());
    for (const auto& a : arrivals_) {
      Veh v;
      v.st.id = a.id;
      v.st.route = a.route;
      const RouteRt& r = routes_[a.route];
      v.st.a_max = (r.accel_mode == AccelMode::FixedKnown)
                       ? kDefaultAccel
                       : r.accel_min + (r.accel_max - r.accel_min) * accel_rng.at(a.id);
      v.st.sas_equipped = sas_rng.at(a.id) < r.penetration;
      v.spawn_time = a.time;
      vehicles_[a.id] = v;
    }
  }

  // --- step phases -----------------------------------------------------------

  void process_spawns(double t) {
    while (next_arrival_ < arrivals_.size() && arrivals_[next_arrival_].time <= t + kEps) {
      pending_[arrivals_[next_arrival_].route].push_back(arrivals_[next_arrival_].id);
      ++next_arrival_;
    }
    for (auto& [route_idx, queue] : pending_) {
      while (!queue.empty()) {
        const RouteRt& r = routes_[route_idx];
        int entry = r.links[0];
        const auto& occ = link_vehicles_[entry];
        double v0 = links_[entry].speed_limit;
        if (!occ.empty()) {
          const Veh& rear = vehicles_[occ.back()];
          double gap = rear.st.position - r.link_start[0] - rear.st.length;
          if (gap < 2.0) break;  // entry cell occupied, spawn stays queued
          v0 = std::min(v0, krauss_safe_speed(std::max(0.0, gap - kStandoff), rear.st.speed,
                                              v0, cfg_.krauss));
          v0 = std::max(0.0, v0);
        }
        Veh& veh = vehicles_[queue.front()];
        queue.pop_front();
        veh.st.position = 0.0;
        veh.st.speed = v0;
        veh.prev_position = 0.0;
        veh.cursor = veh.prev_cursor = 0;
        veh.active = true;
        veh.spawned = true;
        veh.prev_fuel_rate = cfg_.fuel.rate(v0, 0.0);
        link_vehicles_[entry].push_back(veh.st.id);
        ++result_.spawned;
        push_event(t, EventKind::Spawn, veh.st.id, "", "route=" + std::to_string(route_idx));
        if (cfg_.trace_stride > 0)
          result_.trace.push_back(
              {t, veh.st.id, net_.links[entry].id, 0.0, v0, 0.0, veh.st.mode, '-'});
      }
    }
  }

  void tick_signals(double t) {
    for (auto& ix : intersections_) {
      auto ev = ix.ctrl.tick(t);
      if (ev.actuated_green_ended) {
        const TerminationRecord& rec = ix.ctrl.terminations().back();
        result_.signal_rows.push_back({ix.id, rec.cycle_index, rec.green_duration, rec.reason,
                                       rec.cycle_index * ix.ctrl.spec().cycle_length});
        freeze_predictions(ix, rec);
      }
      if (ev.phase_changed)
        push_event(t, EventKind::PhaseChange, -1, ix.id,
                   "phase=" + std::to_string(ix.ctrl.phase_index()) +
                       " state=" + ix.ctrl.state());
      if (ev.cycle_wrapped) ix.store.on_cycle(ix.ctrl.cycle_index());
      if (ev.actuated_green_started) {
        note_green_start(ix);
        replan_at_green_onset(ix);
      }
    }
  }

  void freeze_predictions(IntersectionRt& ix, const TerminationRecord& rec) {
    double realized = rec.green_duration;
    double predicted_a = estimate_green(ix.store.records(), ix.pcfg);
    result_.prediction_rows.push_back({ix.id, rec.cycle_index, "A", predicted_a, realized});
    for (auto& h : ix.histories) {
      if (rec.cycle_index >= cfg_.quantile_bootstrap_cycles && h.size() > 0)
        result_.prediction_rows.push_back(
            {ix.id, rec.cycle_index, "B@" + csv::num(h.eta()), h.quantile_predict(), realized});
      h.push(realized);
    }
  }

  void note_green_start(IntersectionRt& ix) {
    ix.control_pred.reset();
    if (cfg_.predictor != PredictorKind::Quantile) return;
    for (auto& h : ix.histories) {
      if (std::abs(h.eta() - cfg_.quantile_eta) < 1e-12 && h.size() > 0 &&
          ix.ctrl.cycle_index() >= cfg_.quantile_bootstrap_cycles) {
        ix.control_pred = h.quantile_predict();
        break;
      }
    }
  }

  // Phase-transition replanning: when the actuated green begins, SAS vehicles
  // holding for it on an approach switch to accelerate-and-cruise.
  void replan_at_green_onset(IntersectionRt& ix) {
    int si = ix_index(ix.id);
    for (std::size_t li = 0; li < links_.size(); ++li) {
      if (links_[li].signal != si) continue;
      for (int vid : link_vehicles_[li]) {
        Veh& v = vehicles_[vid];
        if (v.st.mode != DriveMode::SasPlan || !v.st.plan) continue;
        if (v.st.plan->kind == PlanKind::AccelerateCruise) continue;
        v.st.plan = TrajectoryPlan{PlanKind::AccelerateCruise, links_[li].speed_limit, 0.0, 0.0};
      }
    }
  }

  void detect_detector_crossings(double t) {
    pending_labels_.clear();
    for (std::size_t vid = 0; vid < vehicles_.size(); ++vid) {
      Veh& v = vehicles_[vid];
      if (!v.active) continue;
      const RouteRt& route = routes_[v.st.route];
      for (int c = v.prev_cursor; c <= v.cursor && c < static_cast<int>(route.links.size());
           ++c) {
        int li = route.links[c];
        const LinkRt& lrt = links_[li];
        double link_start = route.link_start[c];
        if (lrt.counter_off >= 0) {
          double cp = link_start + lrt.counter_off;
          if (v.prev_position < cp && v.st.position >= cp) handle_counter(v, c, t);
        }
        if (lrt.actuator_off >= 0) {
          double ap = link_start + lrt.actuator_off;
          if (v.prev_position < ap && v.st.position >= ap) {
            bool granted = false;
            if (lrt.signal >= 0) granted = intersections_[lrt.signal].ctrl.actuate(t);
            push_event(t, EventKind::ActuatorCross, v.st.id,
                       lrt.signal >= 0 ? intersections_[lrt.signal].id : "",
                       granted ? "granted=1" : "granted=0");
          }
        }
      }
      v.prev_position = v.st.position;
      v.prev_cursor = v.cursor;
    }
  }

  void handle_counter(Veh& v, int cursor, double t) {
    const RouteRt& route = routes_[v.st.route];
    int li = route.links[cursor];
    const LinkRt& lrt = links_[li];
    if (lrt.signal < 0) return;
    IntersectionRt& ix = intersections_[lrt.signal];
    double accel_for_predictor =
        (route.accel_mode == AccelMode::RandomUnknown) ? route.assumed_accel : v.st.a_max;
    const CounterRecord& rec =
        ix.store.record_crossing(v.st.id, v.st.speed, ix.ctrl.phase_clock(t),
                                 accel_for_predictor, lrt.counter_to_actuator, lrt.speed_limit);
    push_event(t, EventKind::CounterCross, v.st.id, ix.id, "t_est=" + csv::num(rec.t_est));
    if (cfg_.sas_active && v.st.sas_equipped)
      pending_labels_.push_back({v.st.id, lrt.signal, cursor, rec.t_est});
  }

  struct PendingLabel {
    int vehicle;
    int intersection;
    int cursor;
    double t_est;
  };

  void apply_labels_and_plans(double t) {
    for (const auto& pl : pending_labels_) {
      Veh& v = vehicles_[pl.vehicle];
      if (!v.active) continue;
      IntersectionRt& ix = intersections_[pl.intersection];
      const RouteRt& route = routes_[v.st.route];
      const LinkRt& lrt = links_[route.links[pl.cursor]];
      double stop_line = route.link_start[pl.cursor] + lrt.length;
      double dist = stop_line - v.st.position;
      if (dist <= 0.0) continue;

      std::optional<Label> label;
      if (ix.ctrl.in_actuated_green()) {
        switch (cfg_.predictor) {
          case PredictorKind::Realtime:
            label = label_vehicle(ix.store.records(), pl.t_est, ix.pcfg);
            break;
          case PredictorKind::Quantile: {
            double pred = ix.control_pred.value_or(ix.pcfg.min_duration);
            label = (pl.t_est + ix.pcfg.t_a_i <= pred + kEps) ? Label::Pass : Label::Wait;
            break;
          }
          case PredictorKind::None:
            label = Label::Pass;  // no prediction: proceed and rely on the gate
            break;
        }
        ix.store.set_label(v.st.id, *label);
        v.st.label = label;
        push_event(t, EventKind::Label, v.st.id, ix.id, to_string(*label));
      } else {
        v.st.label.reset();
      }

      if (label && *label == Label::Pass) {
        v.st.plan = plan_sas(dist, v.st.speed, lrt.speed_limit, v.st.a_max, Label::Pass);
      } else {
        double t_res = ix.ctrl.residual_to_next_green(t);
        if (t_res <= 0.0) t_res = ix.ctrl.spec().cycle_length;
        v.st.plan = plan_sas(dist, v.st.speed, lrt.speed_limit, v.st.a_max, v.st.label, t_res);
      }
      v.st.mode = DriveMode::SasPlan;
      v.st.override_dwell = 0.0;
    }
    pending_labels_.clear();
  }

  // Signal gate: distance to the stop line when the vehicle may not enter.
  std::optional<double> wall_distance(const Veh& v) const {
    const RouteRt& route = routes_[v.st.route];
    int li = route.links[v.cursor];
    const LinkRt& lrt = links_[li];
    if (lrt.signal < 0) return std::nullopt;
    char state = intersections_[lrt.signal].ctrl.approach_state(lrt.approach_pos);
    if (state == 'G') return std::nullopt;
    double dist = route.link_start[v.cursor] + lrt.length - v.st.position;
    if (state == 'y' && v.st.mode == DriveMode::Krauss) {
      // Ordinary drivers enter on yellow when they can no longer stop
      // comfortably before the line.
      double stopping = v.st.speed * v.st.speed / (2.0 * cfg_.krauss.b_comfort);
      if (dist < stopping) return std::nullopt;
    }
    return dist;
  }

  void advance_vehicles(double t) {
    // Synchronous update: speed constraints read the pre-step snapshot;
    // processing runs front to back so overlap clamps see fresh leader state.
    const std::size_t n = vehicles_.size();
    pos_snap_.resize(n);
    spd_snap_.resize(n);
    leader_of_.assign(n, -1);
    gap_snap_.assign(n, 0.0);
    for (const auto& v : vehicles_) {
      pos_snap_[v.st.id] = v.st.position;
      spd_snap_[v.st.id] = v.st.speed;
    }
    for (std::size_t li = 0; li < link_vehicles_.size(); ++li) {
      const auto& occ = link_vehicles_[li];
      for (std::size_t r = 0; r < occ.size(); ++r) {
        const Veh& v = vehicles_[occ[r]];
        int lead = -1;
        if (r > 0) {
          lead = occ[r - 1];
        } else {
          const RouteRt& route = routes_[v.st.route];
          if (v.cursor + 1 < static_cast<int>(route.links.size())) {
            const auto& nocc = link_vehicles_[route.links[v.cursor + 1]];
            if (!nocc.empty()) lead = nocc.back();
          }
        }
        if (lead >= 0) {
          leader_of_[v.st.id] = lead;
          gap_snap_[v.st.id] = bridge_gap(v, vehicles_[lead], pos_snap_);
        }
      }
    }
    for (auto& route : routes_) {
      for (int c = static_cast<int>(route.links.size()) - 1; c >= 0; --c) {
        int li = route.links[c];
        auto occ = link_vehicles_[li];  // copy: transitions mutate the live list
        for (int vid : occ) {
          Veh& v = vehicles_[vid];
          if (v.st.route != route.demand || v.cursor != c || !v.active) continue;
          advance_one(v, t);
        }
      }
    }
  }

  // Bumper-to-bumper gap from v to a leader, valid across one link seam.
  double bridge_gap(const Veh& v, const Veh& lead, const std::vector<double>& pos) const {
    if (lead.st.route == v.st.route)
      return pos[lead.st.id] - lead.st.length - pos[v.st.id];
    const RouteRt& route = routes_[v.st.route];
    const RouteRt& lroute = routes_[lead.st.route];
    double lead_on_link = pos[lead.st.id] - lroute.link_start[lead.cursor];
    double v_to_end =
        route.link_start[v.cursor] + links_[route.links[v.cursor]].length - pos[v.st.id];
    return v_to_end + lead_on_link - lead.st.length;
  }

  void advance_one(Veh& v, double t) {
    const RouteRt& route = routes_[v.st.route];
    const LinkRt& lrt = links_[route.links[v.cursor]];
    const double old_speed = v.st.speed;

    std::optional<double> leader_gap;
    double leader_speed = 0.0;
    int lead_id = leader_of_[v.st.id];
    if (lead_id >= 0) {
      leader_gap = std::max(0.0, gap_snap_[v.st.id] - kStandoff);
      leader_speed = spd_snap_[lead_id];
    }
    auto wall = wall_distance(v);

    double new_speed;
    if (v.st.mode == DriveMode::SasPlan && v.st.plan) {
      SafetyEnvelope env;
      env.leader_gap = leader_gap;
      env.leader_speed = leader_speed;
      env.speed_limit = lrt.speed_limit;
      env.dist_to_stopline = route.link_start[v.cursor] + lrt.length - v.st.position;
      env.krauss = cfg_.krauss;
      TrajectoryPlan plan = *v.st.plan;
      v.st = follow_plan(std::move(v.st), plan, cfg_.dt, env, cfg_.switch_dwell);
      new_speed = v.st.speed;
      if (v.st.mode == DriveMode::Krauss)
        push_event(t, EventKind::ModeSwitch, v.st.id, "", "to=krauss");
    } else {
      new_speed = krauss_step(old_speed, leader_gap, leader_speed, cfg_.krauss, cfg_.dt,
                              lrt.speed_limit, v.st.a_max);
    }
    if (wall) {
      double wall_gap = std::max(0.0, *wall - 1.0);  // hold one meter short
      double v_wall = std::max(0.0, krauss_safe_speed(wall_gap, 0.0, old_speed, cfg_.krauss));
      new_speed = std::min(new_speed, v_wall);
    }

    double new_pos = v.st.position + new_speed * cfg_.dt;
    // Hard no-overlap guard against the (already advanced) leader.
    if (lead_id >= 0) {
      const Veh& lv = vehicles_[lead_id];
      double moved = lv.st.position - pos_snap_[lead_id];
      double max_pos = v.st.position + gap_snap_[v.st.id] + moved - 0.1;
      if (new_pos > max_pos) {
        new_pos = std::max(v.st.position, max_pos);
        double clamped_speed = (new_pos - v.st.position) / cfg_.dt;
        if (clamped_speed < new_speed - 0.5) ++result_.collision_clamps;
        new_speed = clamped_speed;
      }
    }
    // Never cross the stop line against the gate.
    if (wall) {
      double line = route.link_start[v.cursor] + lrt.length;
      if (new_pos > line - 0.2) {
        new_pos = std::max(v.st.position, line - 0.2);
        new_speed = (new_pos - v.st.position) / cfg_.dt;
      }
    }

    v.accel = (new_speed - old_speed) / cfg_.dt;
    v.distance += new_pos - v.st.position;
    v.st.position = new_pos;
    v.st.speed = new_speed;

    double rate = cfg_.fuel.rate(new_speed, v.accel);
    v.fuel += 0.5 * (v.prev_fuel_rate + rate) * cfg_.dt;
    v.prev_fuel_rate = rate;

    bool stopped = new_speed < 0.1;
    if (stopped && !v.was_stopped) ++v.stops;
    v.was_stopped = stopped;

    handle_link_transitions(v, t);
  }

  void handle_link_transitions(Veh& v, double t) {
    const RouteRt& route = routes_[v.st.route];
    while (v.active) {
      int li = route.links[v.cursor];
      double link_end = route.link_start[v.cursor] + links_[li].length;
      if (v.st.position < link_end - kEps) break;
      const LinkRt& lrt = links_[li];
      if (lrt.signal >= 0) {
        IntersectionRt& ix = intersections_[lrt.signal];
        char state = ix.ctrl.approach_state(lrt.approach_pos);
        result_.crossings.push_back({v.st.id, ix.id, ix.ctrl.cycle_index(), t, state,
                                     lrt.actuated, v.st.sas_equipped, v.st.mode});
        push_event(t, EventKind::StopBarCross, v.st.id, ix.id, std::string(1, state));
        if (v.st.mode == DriveMode::SasPlan) {
          v.st.label.reset();
          double next_sl = v.cursor + 1 < static_cast<int>(route.links.size())
                               ? links_[route.links[v.cursor + 1]].speed_limit
                               : lrt.speed_limit;
          v.st.plan = TrajectoryPlan{PlanKind::AccelerateCruise, next_sl, 0.0, 0.0};
        }
      }
      auto& occ = link_vehicles_[li];
      occ.erase(std::find(occ.begin(), occ.end(), v.st.id));
      if (v.cursor + 1 >= static_cast<int>(route.links.size())) {
        v.active = false;
        v.exited = true;
        v.exit_time = t;
        ++result_.exited;
        push_event(t, EventKind::Exit, v.st.id, "", "");
        if (cfg_.trace_stride > 0)
          result_.trace.push_back({t + cfg_.dt, v.st.id, net_.links[li].id, v.st.position,
                                   v.st.speed, v.accel, v.st.mode, '-'});
        break;
      }
      ++v.cursor;
      link_vehicles_[route.links[v.cursor]].push_back(v.st.id);
    }
  }

  void finish_step(double t) {
    for (std::size_t li = 0; li < link_vehicles_.size(); ++li) {
      const auto& occ = link_vehicles_[li];
      for (std::size_t i = 1; i < occ.size(); ++i) {
        double gap = vehicles_[occ[i - 1]].st.position - vehicles_[occ[i - 1]].st.length -
                     vehicles_[occ[i]].st.position;
        if (gap < -1e-6) ++result_.negative_gaps;
      }
    }
    if (cfg_.trace_stride > 0 && step_ % cfg_.trace_stride == 0) {
      for (const auto& v : vehicles_) {
        if (!v.active) continue;
        const RouteRt& route = routes_[v.st.route];
        result_.trace.push_back({t + cfg_.dt, v.st.id, net_.links[route.links[v.cursor]].id,
                                 v.st.position, v.st.speed, v.accel, v.st.mode,
                                 v.st.label ? (*v.st.label == Label::Pass ? 'P' : 'W') : '-'});
      }
    }
  }

  void finalize() {
    for (const auto& v : vehicles_) {
      if (!v.spawned) continue;  // demand still queued at the horizon
      VehicleRow row;
      row.id = v.st.id;
      row.route = v.st.route;
      row.sas_equipped = v.st.sas_equipped;
      row.traverses_actuated = routes_[v.st.route].traverses_actuated;
      row.spawn_time = v.spawn_time;
      row.exited = v.exited;
      row.exit_time = v.exit_time;
      row.fuel_ml = v.fuel;
      row.distance_m = v.distance;
      row.stops = v.stops;
      result_.vehicles.push_back(std::move(row));
      if (v.active) ++result_.active_at_end;
    }
  }

  void push_event(double t, EventKind k, int vehicle, const std::string& ix,
                  std::string detail) {
    result_.events.push_back({t, k, vehicle, ix, std::move(detail)});
  }

  static constexpr double kStandoff = 2.0;  // bumper standoff fed to Krauss

  const NetworkSpec& net_;
  EngineConfig cfg_;
  std::vector<LinkRt> links_;
  std::vector<RouteRt> routes_;
  std::vector<IntersectionRt> intersections_;
  std::vector<Arrival> arrivals_;
  std::size_t next_arrival_ = 0;
  std::vector<Veh> vehicles_;
  std::map<int, std::deque<int>> pending_;
  std::vector<std::vector<int>> link_vehicles_;  // front first
  std::vector<PendingLabel> pending_labels_;
  std::vector<double> pos_snap_, spd_snap_, gap_snap_;
  std::vector<int> leader_of_;
  long long step_ = 0;
  RunResult result_;
};

inline RunResult run(const NetworkSpec& net, const EngineConfig& cfg) {
  return Simulation(net, cfg).run();
}

// Paired runs share the spawn schedule, per-vehicle accelerations and
// penetration flags; only SAS control differs. Returns (baseline, sas).
inline std::pair<RunResult, RunResult> paired_run(const NetworkSpec& net,
                                                  const EngineConfig& cfg) {
  EngineConfig base_cfg = cfg;
  base_cfg.sas_active = false;
  EngineConfig sas_cfg = cfg;
  sas_cfg.sas_active = true;
  return {run(net, base_cfg), run(net, sas_cfg)};
}

}  // namespace sasim
