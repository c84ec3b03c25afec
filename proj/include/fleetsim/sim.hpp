#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "fleetsim/baselines.hpp"
#include "fleetsim/demand.hpp"
#include "fleetsim/matching.hpp"
#include "fleetsim/relocation.hpp"
#include "fleetsim/road_graph.hpp"
#include "fleetsim/time_util.hpp"

namespace fleetsim {

enum class Method { Dfda, Fda, Pic, None };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::Dfda: return "dfda";
        case Method::Fda: return "fda";
        case Method::Pic: return "pic";
        case Method::None: return "none";
    }
    return "none";
}

inline Method parse_method(const std::string& name) {
    if (name == "dfda") return Method::Dfda;
    if (name == "fda" || name == "fda_ved") return Method::Fda;
    if (name == "pic") return Method::Pic;
    if (name == "none") return Method::None;
    throw ConfigError("unknown method '" + name + "'");
}

struct SimConfig {
    int n_vehicles = 0;
    std::int64_t delta_s = 300;
    std::int64_t t_r_s = 600;
    std::int64_t t_f_s = 600;
    std::int64_t t_a_s = 600;
    double l_max_m = 200.0;
    std::int64_t batch_interval_s = 60;
    std::int64_t relocation_interval_s = 600;
    int k = 1;
    ActivationKind activation = ActivationKind::Relu;
    Method method = Method::Dfda;
    int restarts = 8;
    int fda_n_max = 0;  // 0 derives ceil(n / k) so subarea counts line up across methods
    std::uint64_t seed = 0;
    double speed_mps = 8.33;
    bool divertible = true;
    bool weighted_update = true;
    bool repartition_each_cycle = true;
    std::int64_t start_time = 0;
    std::int64_t horizon_s = 0;

    void validate() const {
        if (n_vehicles < 0) throw ConfigError("vehicles must be >= 0");
        if (delta_s <= 0 || t_r_s <= 0 || t_f_s <= 0 || t_a_s < 0)
            throw ConfigError("delta/t_r/t_f must be positive, t_a non-negative");
        if (batch_interval_s <= 0 || relocation_interval_s <= 0)
            throw ConfigError("intervals must be positive");
        if (relocation_interval_s % batch_interval_s != 0)
            throw ConfigError("batch interval must divide relocation interval");
        if (horizon_s <= 0) throw ConfigError("horizon must be positive");
        if (k < 1) throw ConfigError("k must be >= 1");
        if (restarts < 1) throw ConfigError("restarts must be >= 1");
        if (speed_mps <= 0) throw ConfigError("speed must be positive");
        if (l_max_m <= 0) throw ConfigError("l_max must be positive");
    }
};

enum class EventKind { Request, Expire, Match, Divert, Pickup, Dropoff, Relocate, RelocateArrive };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Request: return "request";
        case EventKind::Expire: return "expire";
        case EventKind::Match: return "match";
        case EventKind::Divert: return "divert";
        case EventKind::Pickup: return "pickup";
        case EventKind::Dropoff: return "dropoff";
        case EventKind::Relocate: return "relocate";
        case EventKind::RelocateArrive: return "relocate_arrive";
    }
    return "?";
}

inline EventKind parse_event_kind(const std::string& s) {
    if (s == "request") return EventKind::Request;
    if (s == "expire") return EventKind::Expire;
    if (s == "match") return EventKind::Match;
    if (s == "divert") return EventKind::Divert;
    if (s == "pickup") return EventKind::Pickup;
    if (s == "dropoff") return EventKind::Dropoff;
    if (s == "relocate") return EventKind::Relocate;
    if (s == "relocate_arrive") return EventKind::RelocateArrive;
    throw ParseError("unknown event kind '" + s + "'");
}

struct EventRecord {
    std::int64_t time = 0;
    EventKind kind = EventKind::Request;
    std::int64_t request = -1;
    int vehicle = -1;
    VertexId node = -1;
    double km = std::numeric_limits<double>::quiet_NaN();
    std::int64_t wait_s = -1;
};

inline std::string to_ndjson_line(const EventRecord& e) {
    char buf[256];
    int len = std::snprintf(buf, sizeof(buf), "{\"t\":%lld,\"kind\":\"%s\"",
                            static_cast<long long>(e.time), to_string(e.kind));
    std::string out(buf, std::size_t(len));
    if (e.request >= 0) {
        std::snprintf(buf, sizeof(buf), ",\"req\":%lld", static_cast<long long>(e.request));
        out += buf;
    }
    if (e.vehicle >= 0) {
        std::snprintf(buf, sizeof(buf), ",\"veh\":%d", e.vehicle);
        out += buf;
    }
    if (e.node >= 0) {
        std::snprintf(buf, sizeof(buf), ",\"node\":%d", e.node);
        out += buf;
    }
    if (!std::isnan(e.km)) {
        std::snprintf(buf, sizeof(buf), ",\"km\":%.6f", e.km);
        out += buf;
    }
    if (e.wait_s >= 0) {
        std::snprintf(buf, sizeof(buf), ",\"wait\":%lld", static_cast<long long>(e.wait_s));
        out += buf;
    }
    out += "}";
    return out;
}

inline std::string to_ndjson(const std::vector<EventRecord>& events) {
    std::string out;
    for (const auto& e : events) {
        out += to_ndjson_line(e);
        out += '\n';
    }
    return out;
}

struct TripOutcome {
    std::int64_t request_id = -1;
    bool served = false;
    std::int64_t request_time = 0;
    std::int64_t actual_pickup_time = -1;
    int vehicle = -1;
    double pickup_deadhead_km = 0.0;
    double trip_km = 0.0;
};

struct HourlyPoint {
    int hour = 0;
    int requests = 0;
    int served = 0;
    double r = 0.0;
};

struct MetricsReport {
    int requests = 0;
    int served = 0;
    int expired = 0;
    double served_ratio = 0.0;           // R
    double vkm = 0.0;
    double tkm = 0.0;
    std::optional<double> rho;           // VKM/TKM, undefined when TKM = 0
    double kappa = 0.0;                  // TKM/n_v
    std::optional<double> mean_wait_s;   // tau, undefined with no served trip
    bool no_demand = false;              // R reported as 1.0 vacuously
    int n_vehicles = 0;
    std::vector<HourlyPoint> hourly;
};

// Single-pass recount over an event log; the log is the source of truth.
inline MetricsReport compute_metrics(const std::vector<EventRecord>& events, int n_vehicles,
                                     std::int64_t start_time) {
    MetricsReport r;
    r.n_vehicles = n_vehicles;
    std::unordered_map<std::int64_t, std::int64_t> request_time;
    double wait_sum = 0.0;
    std::unordered_map<int, HourlyPoint> hours;
    auto hour_of = [&](std::int64_t t) { return int(floor_div(t - start_time, 3600)); };
    for (const auto& e : events) {
        switch (e.kind) {
            case EventKind::Request: {
                ++r.requests;
                request_time[e.request] = e.time;
                auto& h = hours[hour_of(e.time)];
                h.hour = hour_of(e.time);
                ++h.requests;
                break;
            }
            case EventKind::Expire:
                ++r.expired;
                break;
            case EventKind::Pickup: {
                ++r.served;
                r.vkm += e.km;
                wait_sum += double(e.wait_s);
                auto it = request_time.find(e.request);
                if (it != request_time.end()) {
                    auto& h = hours[hour_of(it->second)];
                    h.hour = hour_of(it->second);
                    ++h.served;
                }
                break;
            }
            case EventKind::Dropoff:
                r.vkm += e.km;
                r.tkm += e.km;
                break;
            case EventKind::Divert:
            case EventKind::RelocateArrive:
                r.vkm += e.km;
                break;
            case EventKind::Match:
            case EventKind::Relocate:
                break;
        }
    }
    if (r.requests == 0) {
        r.served_ratio = 1.0;
        r.no_demand = true;
    } else {
        r.served_ratio = double(r.served) / double(r.requests);
    }
    if (r.tkm > 0) r.rho = r.vkm / r.tkm;
    r.kappa = n_vehicles > 0 ? r.tkm / double(n_vehicles) : 0.0;
    if (r.served > 0) r.mean_wait_s = wait_sum / double(r.served);
    for (auto& [h, point] : hours)
        point.r = point.requests > 0 ? double(point.served) / double(point.requests) : 1.0;
    for (auto& [h, point] : hours) r.hourly.push_back(point);
    std::sort(r.hourly.begin(), r.hourly.end(),
              [](const HourlyPoint& a, const HourlyPoint& b) { return a.hour < b.hour; });
    return r;
}

struct PartitionSnapshot {
    std::int64_t time = 0;
    Partition partition;
};

struct RunResult {
    MetricsReport metrics;
    std::vector<EventRecord> events;
    std::vector<TripOutcome> outcomes;
    std::vector<PartitionSnapshot> partitions;
};

struct Vehicle {
    int id = 0;
    enum class State { Free, ToPickup, WithPassenger, Relocating };
    State state = State::Free;
    VertexId location = 0;  // parked vertex; while moving, the leg target on arrival
    std::int64_t busy_until = 0;
    double odometer_km = 0.0;
    VertexId leg_from = -1;
    VertexId leg_to = -1;
    std::int64_t leg_depart = 0;
    std::int64_t leg_arrive = 0;
    double leg_km = 0.0;
    std::int64_t serving = -1;      // local request index
    std::uint64_t generation = 0;   // stale-arrival guard
};

// Batch-matching, relocation and vehicle motion at shortest-path granularity.
// The event loop is single-threaded and deterministic for a given
// (config, seed, data); matching runs every batch_interval, relocation every
// relocation_interval, and vehicle motion is abstracted to arrival events.
class Simulation {
public:
    Simulation(const RoadGraph& graph, const DemandProfile& profile, SimConfig cfg)
        : g_(graph), profile_(profile), cfg_(cfg) {
        cfg_.validate();
        vehicles_.resize(std::size_t(cfg_.n_vehicles));
        SplitMix64 rng(mix_seed(cfg_.seed, 0x11acedULL));
        for (int i = 0; i < cfg_.n_vehicles; ++i) {
            vehicles_[std::size_t(i)].id = i;
            vehicles_[std::size_t(i)].location = VertexId(rng.below(g_.vertex_count()));
        }
    }

    // Test hook: pin starting locations instead of the seeded placement.
    void set_vehicle_locations(const std::vector<VertexId>& locations) {
        if (locations.size() != vehicles_.size())
            throw ValidationError("set_vehicle_locations: size mismatch");
        for (std::size_t i = 0; i < locations.size(); ++i) vehicles_[i].location = locations[i];
    }

    // Requests outside [start, start + horizon) are ignored.
    void load_requests(const TripStore& store) {
        std::int64_t end = cfg_.start_time + cfg_.horizon_s;
        for (const TripRequest& t : store.trips) {
            if (t.request_time < cfg_.start_time || t.request_time >= end) continue;
            std::int64_t local = std::int64_t(requests_.size());
            requests_.push_back(t);
            status_.push_back(Status::Scheduled);
            outcomes_.push_back({});
            push(t.request_time, kPrioRequest, local, 0);
            push(t.request_time + cfg_.delta_s, kPrioExpire, local, 0);
        }
    }

    const std::vector<Vehicle>& vehicles() const { return vehicles_; }
    const std::vector<EventRecord>& events() const { return events_; }
    const std::vector<PartitionSnapshot>& partitions() const { return partitions_; }

    // One matching batch at a boundary: pending requests against available
    // vehicles, expiries strictly before `now` applied first.
    void step(std::int64_t now) {
        advance_to(now, kPrioVehicle);
        handle_batch(now);
    }

    // One relocation cycle: re-partition, region gaps, idle-to-center matching.
    void rebalance(std::int64_t now) {
        advance_to(now, kPrioVehicle);
        handle_rebalance(now);
    }

    RunResult run() {
        std::int64_t end = cfg_.start_time + cfg_.horizon_s;
        for (std::int64_t t = cfg_.start_time; t < end; t += cfg_.batch_interval_s) {
            step(t);
            if (cfg_.method != Method::None &&
                (t - cfg_.start_time) % cfg_.relocation_interval_s == 0)
                rebalance(t);
        }
        drain();
        RunResult result;
        result.metrics = compute_metrics(events_, cfg_.n_vehicles, cfg_.start_time);
        result.events = events_;
        result.partitions = partitions_;
        result.outcomes.reserve(requests_.size());
        for (std::size_t i = 0; i < requests_.size(); ++i) result.outcomes.push_back(outcome(i));
        return result;
    }

    // Process every remaining event (in-flight trips complete past the horizon).
    void drain() { advance_to(std::numeric_limits<std::int64_t>::max(), kPrioExpire); }

private:
    enum class Status { Scheduled, Waiting, Assigned, Served, Expired };

    static constexpr int kPrioRequest = 0;
    static constexpr int kPrioVehicle = 1;
    static constexpr int kPrioExpire = 4;

    struct QItem {
        std::int64_t time;
        int prio;
        std::uint64_t seq;
        std::int64_t a;
        std::uint64_t b;
        bool operator>(const QItem& o) const {
            if (time != o.time) return time > o.time;
            if (prio != o.prio) return prio > o.prio;
            return seq > o.seq;
        }
    };

    void push(std::int64_t time, int prio, std::int64_t a, std::uint64_t b) {
        queue_.push(QItem{time, prio, seq_++, a, b});
    }

    void log(EventRecord e) { events_.push_back(e); }

    TripOutcome outcome(std::size_t local) const {
        TripOutcome o = outcomes_[local];
        o.request_id = requests_[local].id;
        o.request_time = requests_[local].request_time;
        o.served = status_[local] == Status::Served ||
                   (status_[local] == Status::Assigned && o.actual_pickup_time >= 0);
        return o;
    }

    void advance_to(std::int64_t t, int max_prio_at_t) {
        while (!queue_.empty()) {
            const QItem& top = queue_.top();
            if (top.time > t || (top.time == t && top.prio > max_prio_at_t)) break;
            QItem item = top;
            queue_.pop();
            switch (item.prio) {
                case kPrioRequest: {
                    std::size_t local = std::size_t(item.a);
                    status_[local] = Status::Waiting;
                    active_.push_back(item.a);
                    log({item.time, EventKind::Request, requests_[local].id});
                    break;
                }
                case kPrioVehicle:
                    handle_arrival(item.time, int(item.a), item.b);
                    break;
                case kPrioExpire: {
                    std::size_t local = std::size_t(item.a);
                    if (status_[local] == Status::Waiting) {
                        status_[local] = Status::Expired;
                        log({item.time, EventKind::Expire, requests_[local].id});
                    }
                    break;
                }
                default: break;
            }
        }
    }

    void handle_arrival(std::int64_t now, int veh_id, std::uint64_t generation) {
        Vehicle& v = vehicles_[std::size_t(veh_id)];
        if (generation != v.generation) return;  // superseded by a divert
        v.odometer_km += v.leg_km;
        v.location = v.leg_to;
        switch (v.state) {
            case Vehicle::State::ToPickup: {
                std::size_t local = std::size_t(v.serving);
                const TripRequest& req = requests_[local];
                std::int64_t wait = now - req.request_time;
                log({now, EventKind::Pickup, req.id, veh_id, req.pickup, v.leg_km, wait});
                outcomes_[local].actual_pickup_time = now;
                outcomes_[local].vehicle = veh_id;
                outcomes_[local].pickup_deadhead_km = v.leg_km;
                PathCost trip = g_.travel_cost(req.pickup, req.dropoff, now);
                if (!std::isfinite(trip.seconds))
                    throw ValidationError("dropoff " + std::to_string(req.dropoff) +
                                          " unreachable from pickup " + std::to_string(req.pickup));
                begin_leg(v, req.pickup, req.dropoff, now, trip);
                v.state = Vehicle::State::WithPassenger;
                break;
            }
            case Vehicle::State::WithPassenger: {
                std::size_t local = std::size_t(v.serving);
                const TripRequest& req = requests_[local];
                log({now, EventKind::Dropoff, req.id, veh_id, req.dropoff, v.leg_km});
                outcomes_[local].trip_km = v.leg_km;
                status_[local] = Status::Served;
                v.state = Vehicle::State::Free;
                v.serving = -1;
                v.busy_until = now;
                break;
            }
            case Vehicle::State::Relocating: {
                log({now, EventKind::RelocateArrive, -1, veh_id, v.location, v.leg_km});
                v.state = Vehicle::State::Free;
                v.busy_until = now;
                break;
            }
            case Vehicle::State::Free:
                break;
        }
    }

    void begin_leg(Vehicle& v, VertexId from, VertexId to, std::int64_t now, PathCost cost) {
        v.leg_from = from;
        v.leg_to = to;
        v.leg_depart = now;
        v.leg_arrive = now + std::int64_t(std::ceil(cost.seconds));
        v.leg_km = cost.meters / 1000.0;
        v.busy_until = v.leg_arrive;
        ++v.generation;
        push(v.leg_arrive, kPrioVehicle, v.id, v.generation);
    }

    double divert_fraction(const Vehicle& v, std::int64_t now) const {
        if (v.leg_arrive <= v.leg_depart) return 0.0;
        return double(now - v.leg_depart) / double(v.leg_arrive - v.leg_depart);
    }

    void handle_batch(std::int64_t now) {
        // eligible requests: received, unmatched, not yet past the deadline
        std::vector<PendingRequest> batch;
        std::vector<std::size_t> batch_local;
        {
            std::vector<std::int64_t> still_active;
            for (std::int64_t a : active_) {
                std::size_t local = std::size_t(a);
                if (status_[local] != Status::Waiting) continue;
                still_active.push_back(a);
                const TripRequest& req = requests_[local];
                std::int64_t deadline = req.request_time + cfg_.delta_s;
                if (req.request_time <= now && now <= deadline) {
                    batch.push_back({req.id, req.pickup, req.request_time, deadline});
                    batch_local.push_back(local);
                }
            }
            active_.swap(still_active);
        }

        std::vector<AvailableVehicle> avail;
        std::vector<int> avail_ids;
        for (const Vehicle& v : vehicles_) {
            if (v.state == Vehicle::State::Free) {
                avail.push_back({v.id, v.location, v.location, 0.0});
                avail_ids.push_back(v.id);
            } else if (cfg_.divertible && v.state == Vehicle::State::Relocating) {
                avail.push_back({v.id, v.leg_from, v.leg_to, divert_fraction(v, now)});
                avail_ids.push_back(v.id);
            }
        }
        if (batch.empty() || avail.empty()) return;

        BipartiteGraph bg = build_request_vehicle_graph(batch, avail, g_, now);
        Matching m = max_bipartite_matching(bg);
        if (m.cardinality == 0) return;
        DistanceMatrix dm = detail::anchors_matrix(avail, g_, now);
        for (std::size_t l = 0; l < batch.size(); ++l) {
            int r = m.left_match[l];
            if (r < 0) continue;
            apply_match(now, batch_local[l], avail[std::size_t(r)], dm);
        }
    }

    void apply_match(std::int64_t now, std::size_t local, const AvailableVehicle& slot,
                     const DistanceMatrix& dm) {
        Vehicle& v = vehicles_[std::size_t(slot.id)];
        const TripRequest& req = requests_[local];
        PathCost eff = detail::effective_cost(slot, req.pickup, dm);
        if (v.state == Vehicle::State::Relocating) {
            double f = divert_fraction(v, now);
            double partial = f * v.leg_km;
            v.odometer_km += partial;
            log({now, EventKind::Divert, req.id, v.id, -1, partial});
        }
        log({now, EventKind::Match, req.id, v.id});
        status_[local] = Status::Assigned;
        v.state = Vehicle::State::ToPickup;
        v.serving = std::int64_t(local);
        begin_leg(v, slot.anchor_a, req.pickup, now, eff);
        if (slot.frac > 0.0) v.leg_from = -1;  // virtual mid-leg start
    }

    void handle_rebalance(std::int64_t now) {
        std::int64_t gap_time = now + cfg_.t_a_s;
        std::vector<double> gaps = all_gaps(profile_, g_.vertex_count(), gap_time);

        const Partition& part = partition_for(now, gaps);
        std::vector<int> idle_count(part.subareas.size(), 0);
        for (const Vehicle& v : vehicles_)
            if (v.state == Vehicle::State::Free)
                ++idle_count[std::size_t(part.subarea_of[std::size_t(v.location)])];

        std::vector<double> rgaps = region_gap(part, profile_, idle_count, gap_time);

        std::vector<RelocationDemand> demands;
        for (std::size_t j = 0; j < rgaps.size(); ++j)
            if (rgaps[j] > 0) demands.push_back({int(j), part.centers[j], rgaps[j]});

        std::vector<AvailableVehicle> idle;
        for (const Vehicle& v : vehicles_) {
            if (v.state != Vehicle::State::Free) continue;
            if (rgaps[std::size_t(part.subarea_of[std::size_t(v.location)])] < 0)
                idle.push_back({v.id, v.location, v.location, 0.0});
        }
        if (demands.empty() || idle.empty()) return;

        std::vector<VertexId> slot_center;
        BipartiteGraph bg = build_relocation_graph(idle, demands, g_, cfg_.t_r_s, now, &slot_center);
        Matching m = max_bipartite_matching(bg);
        for (std::size_t l = 0; l < idle.size(); ++l) {
            int s = m.left_match[l];
            if (s < 0) continue;
            Vehicle& v = vehicles_[std::size_t(idle[l].id)];
            VertexId center = slot_center[std::size_t(s)];
            PathCost cost = g_.travel_cost(v.location, center, now);
            log({now, EventKind::Relocate, -1, v.id, center});
            v.state = Vehicle::State::Relocating;
            begin_leg(v, v.location, center, now, cost);
        }
    }

    const Partition& partition_for(std::int64_t now, const std::vector<double>& gaps) {
        if (!cfg_.repartition_each_cycle && cached_partition_) {
            partitions_.push_back({now, *cached_partition_});
            return partitions_.back().partition;
        }
        Partition p;
        switch (cfg_.method) {
            case Method::Dfda: {
                DistanceMatrix dm = full_distance_matrix(g_, now);
                std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg_.restarts));
                for (int i = 0; i < cfg_.restarts; ++i)
                    seeds[std::size_t(i)] = mix_seed(cfg_.seed, 0xd1daULL + std::uint64_t(cycle_), std::uint64_t(i));
                SearchOptions opts;
                opts.weighted_update = cfg_.weighted_update;
                p = multi_restart_search(dm, cfg_.k, gaps, cfg_.activation, seeds, opts);
                break;
            }
            case Method::Fda: {
                FdaVedConfig fcfg;
                fcfg.n_max = cfg_.fda_n_max > 0
                                 ? cfg_.fda_n_max
                                 : int((g_.vertex_count() + std::size_t(cfg_.k) - 1) / std::size_t(cfg_.k));
                fcfg.delta_s = double(cfg_.delta_s);
                p = fda_ved_partition(g_, fcfg, now);
                break;
            }
            case Method::Pic: {
                p = pic_partition(g_, cfg_.k, mix_seed(cfg_.seed, 0x91cULL, std::uint64_t(cycle_)), now);
                break;
            }
            case Method::None:
                throw ValidationError("rebalance called with method none");
        }
        ++cycle_;
        cached_partition_ = p;
        partitions_.push_back({now, std::move(p)});
        return partitions_.back().partition;
    }

    const RoadGraph& g_;
    const DemandProfile& profile_;
    SimConfig cfg_;

    std::vector<Vehicle> vehicles_;
    std::vector<TripRequest> requests_;
    std::vector<Status> status_;
    std::vector<TripOutcome> outcomes_;
    std::vector<std::int64_t> active_;
    std::vector<EventRecord> events_;
    std::vector<PartitionSnapshot> partitions_;
    std::optional<Partition> cached_partition_;
    int cycle_ = 0;

    std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> queue_;
    std::uint64_t seq_ = 0;
};

}  // namespace fleetsim
