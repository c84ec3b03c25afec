#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fleetsim/csv.hpp"
#include "fleetsim/partition.hpp"
#include "fleetsim/road_graph.hpp"
#include "fleetsim/time_util.hpp"
#include "fleetsim/util.hpp"

namespace fleetsim {

struct TripRequest {
    std::int64_t id = 0;
    std::int64_t request_time = 0;  // t_p, seconds since epoch
    VertexId pickup = -1;
    VertexId dropoff = -1;
};

struct IngestStats {
    std::size_t parsed = 0;
    std::size_t malformed = 0;
    std::size_t snap_failures = 0;
    std::size_t same_vertex = 0;
    std::vector<std::string> errors;  // first few row-level messages
};

struct TripStore {
    std::vector<TripRequest> trips;  // sorted by (request_time, pickup, dropoff)
    IngestStats stats;
};

// Trip file, either of:
//   request_time,pickup_node,dropoff_node
//   request_time,pickup_x,pickup_y,dropoff_x,dropoff_y
// ISO-8601 timestamps. Coordinate rows are snapped to the nearest vertex
// within l_max/2; rows that snap to nothing or collapse to pickup == dropoff
// are dropped and counted. Malformed rows are counted and skipped.
// Ids are assigned 0..N-1 in sorted order, so ingestion is order-insensitive.
inline TripStore ingest_trips(std::istream& in, const RoadGraph& g) {
    CsvTable t = read_csv(in);
    TripStore store;

    int c_time = t.column("request_time");
    int c_pn = t.column("pickup_node"), c_dn = t.column("dropoff_node");
    int c_px = t.column("pickup_x"), c_py = t.column("pickup_y");
    int c_dx = t.column("dropoff_x"), c_dy = t.column("dropoff_y");
    bool by_node = c_pn >= 0 && c_dn >= 0;
    bool by_coord = c_px >= 0 && c_py >= 0 && c_dx >= 0 && c_dy >= 0;
    if (c_time < 0 || (!by_node && !by_coord))
        throw ParseError(
            "trip file header must be request_time,pickup_node,dropoff_node or "
            "request_time,pickup_x,pickup_y,dropoff_x,dropoff_y");

    auto note = [&store](const std::string& msg) {
        if (store.stats.errors.size() < 20) store.stats.errors.push_back(msg);
    };

    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        std::size_t ln = t.line_no[r];
        ++store.stats.parsed;
        try {
            if (row.size() < t.header.size()) throw ParseError("short row at line " + std::to_string(ln));
            TripRequest req;
            req.request_time = parse_iso8601(row[std::size_t(c_time)], ln);
            if (by_node) {
                long long p = parse_int_field(row[std::size_t(c_pn)], ln);
                long long d = parse_int_field(row[std::size_t(c_dn)], ln);
                if (p < 0 || std::size_t(p) >= g.vertex_count() || d < 0 ||
                    std::size_t(d) >= g.vertex_count())
                    throw ParseError("trip references unknown node at line " + std::to_string(ln));
                req.pickup = VertexId(p);
                req.dropoff = VertexId(d);
            } else {
                auto p = g.snap_point(parse_double_field(row[std::size_t(c_px)], ln),
                                      parse_double_field(row[std::size_t(c_py)], ln));
                auto d = g.snap_point(parse_double_field(row[std::size_t(c_dx)], ln),
                                      parse_double_field(row[std::size_t(c_dy)], ln));
                if (!p || !d) {
                    ++store.stats.snap_failures;
                    continue;
                }
                req.pickup = *p;
                req.dropoff = *d;
            }
            if (req.pickup == req.dropoff) {
                ++store.stats.same_vertex;
                continue;
            }
            store.trips.push_back(req);
        } catch (const ParseError& e) {
            ++store.stats.malformed;
            note(e.what());
        }
    }

    std::sort(store.trips.begin(), store.trips.end(), [](const TripRequest& a, const TripRequest& b) {
        if (a.request_time != b.request_time) return a.request_time < b.request_time;
        if (a.pickup != b.pickup) return a.pickup < b.pickup;
        return a.dropoff < b.dropoff;
    });
    for (std::size_t i = 0; i < store.trips.size(); ++i) store.trips[i].id = std::int64_t(i);
    return store;
}

inline TripStore ingest_trips_file(const std::string& path, const RoadGraph& g) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trip file: " + path);
    return ingest_trips(in, g);
}

// Historical-average point-level demand. Counts are bucketed by time of day
// (bucket length t_f, which must divide 24 h) and by weekday/weekend, then
// averaged over the history days of the matching day type.
class DemandProfile {
public:
    DemandProfile() = default;

    DemandProfile(const TripStore& history, std::size_t n_vertices, std::int64_t t_f,
                  std::int64_t t_a, std::int64_t t_r)
        : n_vertices_(n_vertices), t_f_(t_f), t_a_(t_a), t_r_(t_r) {
        if (t_f <= 0 || t_a < 0 || t_r <= 0) throw ValidationError("demand profile: bad horizon");
        if (kSecondsPerDay % t_f != 0)
            throw ValidationError("demand profile: bucket length must divide 24h");
        n_buckets_ = std::size_t(kSecondsPerDay / t_f);
        for (const TripRequest& trip : history.trips) {
            int dt = is_weekend(trip.request_time) ? 1 : 0;
            days_[dt].insert(day_number(trip.request_time));
            std::size_t bucket = std::size_t(seconds_of_day(trip.request_time) / t_f_);
            counts_[key(dt, bucket, std::size_t(trip.pickup))].pickups += 1.0;
            counts_[key(dt, bucket, std::size_t(trip.dropoff))].dropoffs += 1.0;
        }
        empty_ = history.trips.empty();
    }

    bool empty() const { return empty_; }
    std::int64_t t_f() const { return t_f_; }
    std::int64_t t_a() const { return t_a_; }
    std::int64_t t_r() const { return t_r_; }

    // Mean pickups/dropoffs at v per t_f window, for the bucket containing t.
    std::pair<double, double> predict(VertexId v, std::int64_t t) const {
        int dt = is_weekend(t) ? 1 : 0;
        std::size_t day_count = days_[dt].size();
        if (day_count == 0) return {0.0, 0.0};
        std::size_t bucket = std::size_t(seconds_of_day(t) / t_f_);
        auto it = counts_.find(key(dt, bucket, std::size_t(v)));
        if (it == counts_.end()) return {0.0, 0.0};
        return {it->second.pickups / double(day_count), it->second.dropoffs / double(day_count)};
    }

    // Pickup-dropoff gap g for the window [t, t + t_r), summing whole t_f
    // buckets and prorating a fractional trailing bucket.
    double gap(VertexId v, std::int64_t t) const {
        double g = 0.0;
        std::int64_t remaining = t_r_;
        std::int64_t cursor = t;
        while (remaining > 0) {
            std::int64_t into_bucket = floor_mod(cursor, t_f_);
            std::int64_t span = std::min(remaining, t_f_ - into_bucket);
            auto [pk, dp] = predict(v, cursor);
            g += (pk - dp) * (double(span) / double(t_f_));
            cursor += span;
            remaining -= span;
        }
        return g;
    }

private:
    struct Counts {
        double pickups = 0, dropoffs = 0;
    };

    std::uint64_t key(int day_type, std::size_t bucket, std::size_t vertex) const {
        return (std::uint64_t(day_type) * n_buckets_ + bucket) * n_vertices_ + vertex;
    }

    std::size_t n_vertices_ = 0;
    std::size_t n_buckets_ = 1;
    std::int64_t t_f_ = 600, t_a_ = 600, t_r_ = 600;
    bool empty_ = true;
    std::unordered_map<std::uint64_t, Counts> counts_;
    std::set<std::int64_t> days_[2];
};

inline std::vector<double> all_gaps(const DemandProfile& profile, std::size_t n, std::int64_t t) {
    std::vector<double> g(n);
    for (std::size_t v = 0; v < n; ++v) g[v] = profile.gap(VertexId(v), t);
    return g;
}

// Region-level supply-demand gap: predicted net demand of the subarea minus
// its currently idle vehicles. Positive means under-supplied.
inline std::vector<double> region_gap(const Partition& p, const DemandProfile& profile,
                                      std::span<const int> idle_per_subarea, std::int64_t t) {
    if (idle_per_subarea.size() != p.subareas.size())
        throw ValidationError("region_gap: idle counts do not match subarea count");
    std::vector<double> gaps(p.subareas.size(), 0.0);
    for (std::size_t j = 0; j < p.subareas.size(); ++j) {
        double sum = 0.0;
        for (VertexId v : p.subareas[j]) sum += profile.gap(v, t);
        gaps[j] = sum - double(idle_per_subarea[j]);
    }
    return gaps;
}

}  // namespace fleetsim
