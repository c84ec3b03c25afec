#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fleetsim/csv.hpp"
#include "fleetsim/util.hpp"

namespace fleetsim {

constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct PathCost {
    double seconds = kUnreachable;
    double meters = kUnreachable;
};

struct LoadStats {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t duplicate_edges = 0;  // collapsed to the per-slot minimum
    std::vector<std::string> warnings;
};

// All-pairs-from-sources travel times frozen at one query time. Row-major:
// seconds[src_idx * n + v]. Unreachable pairs carry +infinity.
struct DistanceMatrix {
    std::vector<VertexId> sources;
    std::int64_t query_time = 0;
    std::size_t n = 0;
    std::vector<double> seconds;
    std::vector<double> meters;
    std::vector<std::int32_t> source_index;  // vertex -> row, -1 if absent

    bool has_source(VertexId s) const {
        return s >= 0 && std::size_t(s) < source_index.size() && source_index[std::size_t(s)] >= 0;
    }
    double sec(VertexId src, VertexId v) const {
        return seconds[std::size_t(source_index[std::size_t(src)]) * n + std::size_t(v)];
    }
    double m(VertexId src, VertexId v) const {
        return meters[std::size_t(source_index[std::size_t(src)]) * n + std::size_t(v)];
    }
};

// Directed road graph with piecewise-constant per-slot travel times.
// Immutable after load; shortest-path queries are const and thread-safe.
class RoadGraph {
public:
    std::size_t vertex_count() const { return xs_.size(); }
    std::size_t edge_count() const { return edge_to_.size(); }
    int slot_count() const { return n_slots_; }
    std::int64_t slot_length() const { return slot_length_; }
    double x(VertexId v) const { return xs_[std::size_t(v)]; }
    double y(VertexId v) const { return ys_[std::size_t(v)]; }

    // Snapping radius is l_max / 2.
    double l_max() const { return l_max_; }
    void set_l_max(double l_max) {
        if (l_max <= 0) throw ValidationError("l_max must be positive");
        l_max_ = l_max;
        build_snap_grid();
    }

    // Used for edge kilometers when the edge file has no length_m column.
    double fallback_speed() const { return fallback_speed_mps_; }
    void set_fallback_speed(double mps) {
        if (mps <= 0) throw ValidationError("fallback speed must be positive");
        std::lock_guard<std::mutex> lock(cache_->mu);
        fallback_speed_mps_ = mps;
        cache_->trees.clear();
    }

    // Slot profiles repeat cyclically; a single-slot profile is a static graph.
    int slot_index(std::int64_t t) const {
        return int(floor_mod(floor_div(t, slot_length_), n_slots_));
    }

    double edge_seconds(std::size_t e, int slot) const {
        return edge_seconds_[e * std::size_t(n_slots_) + std::size_t(slot)];
    }
    double edge_meters(std::size_t e, int slot) const {
        double len = edge_length_m_[e];
        if (std::isnan(len)) return edge_seconds(e, slot) * fallback_speed_mps_;
        return len;
    }

    template <typename F>
    void for_each_edge(F&& f) const {
        for (VertexId u = 0; std::size_t(u) < vertex_count(); ++u)
            for (std::int32_t e = adj_offset_[std::size_t(u)]; e < adj_offset_[std::size_t(u) + 1]; ++e)
                f(u, edge_to_[std::size_t(e)], std::size_t(e));
    }

    // Shortest directed travel time with edge times frozen at the slot of t.
    double travel_time(VertexId origin, VertexId dest, std::int64_t t) const {
        check_vertex(origin);
        check_vertex(dest);
        return tree_for(origin, slot_index(t))->seconds[std::size_t(dest)];
    }

    PathCost travel_cost(VertexId origin, VertexId dest, std::int64_t t) const {
        check_vertex(origin);
        check_vertex(dest);
        auto tree = tree_for(origin, slot_index(t));
        return {tree->seconds[std::size_t(dest)], tree->meters[std::size_t(dest)]};
    }

    DistanceMatrix distance_matrix(std::span<const VertexId> sources, std::int64_t t) const {
        if (sources.empty()) throw ValidationError("distance_matrix: sources must be non-empty");
        DistanceMatrix dm;
        dm.sources.assign(sources.begin(), sources.end());
        dm.query_time = t;
        dm.n = vertex_count();
        dm.seconds.resize(sources.size() * dm.n);
        dm.meters.resize(sources.size() * dm.n);
        dm.source_index.assign(dm.n, -1);
        int slot = slot_index(t);
        for (std::size_t i = 0; i < sources.size(); ++i) {
            check_vertex(sources[i]);
            auto tree = tree_for(sources[i], slot);
            std::copy(tree->seconds.begin(), tree->seconds.end(), dm.seconds.begin() + long(i * dm.n));
            std::copy(tree->meters.begin(), tree->meters.end(), dm.meters.begin() + long(i * dm.n));
            dm.source_index[std::size_t(sources[i])] = std::int32_t(i);
        }
        return dm;
    }

    // Nearest vertex by planar distance within l_max/2 meters; ties by lowest id.
    std::optional<VertexId> snap_point(double px, double py) const {
        if (l_max_ <= 0) throw ValidationError("snap_point: l_max not configured");
        const double r = l_max_ / 2.0;
        const std::int64_t cx = grid_cell(px), cy = grid_cell(py);
        double best_d2 = r * r;
        VertexId best = -1;
        for (std::int64_t gx = cx - 1; gx <= cx + 1; ++gx) {
            for (std::int64_t gy = cy - 1; gy <= cy + 1; ++gy) {
                auto it = snap_grid_.find(grid_key(gx, gy));
                if (it == snap_grid_.end()) continue;
                for (VertexId v : it->second) {
                    double dx = xs_[std::size_t(v)] - px;
                    double dy = ys_[std::size_t(v)] - py;
                    double d2 = dx * dx + dy * dy;
                    if (d2 < best_d2 || (d2 == best_d2 && (best < 0 || v < best))) {
                        best_d2 = d2;
                        best = v;
                    }
                }
            }
        }
        if (best < 0) return std::nullopt;
        return best;
    }

    friend RoadGraph load_graph(std::istream& node_stream, std::istream& edge_stream,
                                std::int64_t slot_length, LoadStats* stats);

private:
    struct SpTree {
        std::vector<double> seconds;
        std::vector<double> meters;
    };

    void check_vertex(VertexId v) const {
        if (v < 0 || std::size_t(v) >= vertex_count())
            throw ValidationError("invalid vertex id " + std::to_string(v));
    }

    static std::int64_t grid_key(std::int64_t gx, std::int64_t gy) {
        return gx * 0x100000LL * 0x100000LL + gy;  // coordinates are city-scale, no overflow
    }
    std::int64_t grid_cell(double c) const {
        return std::int64_t(std::floor(c / (l_max_ / 2.0)));
    }

    void build_snap_grid() {
        snap_grid_.clear();
        for (VertexId v = 0; std::size_t(v) < vertex_count(); ++v)
            snap_grid_[grid_key(grid_cell(xs_[std::size_t(v)]), grid_cell(ys_[std::size_t(v)]))]
                .push_back(v);
    }

    // Label-setting over lexicographic (seconds, meters) labels: kilometers are
    // taken along a minimum-time path, deterministically the one with fewest
    // meters among ties.
    std::shared_ptr<const SpTree> dijkstra(VertexId source, int slot) const {
        auto tree = std::make_shared<SpTree>();
        std::size_t n = vertex_count();
        tree->seconds.assign(n, kUnreachable);
        tree->meters.assign(n, kUnreachable);
        using Label = std::tuple<double, double, VertexId>;
        std::priority_queue<Label, std::vector<Label>, std::greater<Label>> heap;
        tree->seconds[std::size_t(source)] = 0.0;
        tree->meters[std::size_t(source)] = 0.0;
        heap.emplace(0.0, 0.0, source);
        while (!heap.empty()) {
            auto [sec, met, u] = heap.top();
            heap.pop();
            if (sec != tree->seconds[std::size_t(u)] || met != tree->meters[std::size_t(u)]) continue;
            for (std::int32_t e = adj_offset_[std::size_t(u)]; e < adj_offset_[std::size_t(u) + 1]; ++e) {
                VertexId v = edge_to_[std::size_t(e)];
                double ns = sec + edge_seconds(std::size_t(e), slot);
                double nm = met + edge_meters(std::size_t(e), slot);
                double& cs = tree->seconds[std::size_t(v)];
                double& cm = tree->meters[std::size_t(v)];
                if (ns < cs || (ns == cs && nm < cm)) {
                    cs = ns;
                    cm = nm;
                    heap.emplace(ns, nm, v);
                }
            }
        }
        return tree;
    }

    std::shared_ptr<const SpTree> tree_for(VertexId source, int slot) const {
        std::uint64_t key = std::uint64_t(source) * std::uint64_t(n_slots_) + std::uint64_t(slot);
        {
            std::lock_guard<std::mutex> lock(cache_->mu);
            auto it = cache_->trees.find(key);
            if (it != cache_->trees.end()) return it->second;
        }
        auto tree = dijkstra(source, slot);
        std::lock_guard<std::mutex> lock(cache_->mu);
        auto [it, inserted] = cache_->trees.emplace(key, std::move(tree));
        return it->second;
    }

    std::vector<double> xs_, ys_;
    std::vector<std::int32_t> adj_offset_;  // size n+1
    std::vector<VertexId> edge_to_;         // sorted by (from, to)
    std::vector<double> edge_seconds_;      // edge-major, n_slots per edge
    std::vector<double> edge_length_m_;     // NaN when the file had no length
    int n_slots_ = 1;
    std::int64_t slot_length_ = 1;
    double l_max_ = 200.0;
    double fallback_speed_mps_ = 8.33;

    // Behind a unique_ptr so the graph stays movable despite the mutex.
    struct Cache {
        std::mutex mu;
        std::unordered_map<std::uint64_t, std::shared_ptr<const SpTree>> trees;
    };

    std::unordered_map<std::int64_t, std::vector<VertexId>> snap_grid_;
    mutable std::unique_ptr<Cache> cache_ = std::make_unique<Cache>();
};

// Node file: node_id,x_m,y_m with dense ids 0..n-1.
// Edge file: from,to[,length_m],slot_0,slot_1,... seconds per slot, all > 0.
// Duplicate directed edges are collapsed to the per-slot minimum with a warning.
inline RoadGraph load_graph(std::istream& node_stream, std::istream& edge_stream,
                            std::int64_t slot_length, LoadStats* stats = nullptr) {
    if (slot_length <= 0) throw ValidationError("slot_length must be positive");

    CsvTable nodes = read_csv(node_stream);
    int c_id = nodes.column("node_id"), c_x = nodes.column("x_m"), c_y = nodes.column("y_m");
    if (c_id < 0 || c_x < 0 || c_y < 0)
        throw ParseError("node file header must be node_id,x_m,y_m");

    std::size_t n = nodes.rows.size();
    if (n == 0) throw ValidationError("node file has no rows");

    RoadGraph g;
    g.slot_length_ = slot_length;
    g.xs_.assign(n, 0.0);
    g.ys_.assign(n, 0.0);
    std::vector<bool> seen(n, false);
    for (std::size_t r = 0; r < nodes.rows.size(); ++r) {
        const auto& row = nodes.rows[r];
        std::size_t ln = nodes.line_no[r];
        if (row.size() <= std::size_t(std::max({c_id, c_x, c_y})))
            throw ParseError("short node row at line " + std::to_string(ln));
        long long id = parse_int_field(row[std::size_t(c_id)], ln);
        if (id < 0 || std::size_t(id) >= n)
            throw ValidationError("node ids must be dense 0..n-1; got " + std::to_string(id) +
                                  " at line " + std::to_string(ln));
        if (seen[std::size_t(id)])
            throw ValidationError("duplicate node id " + std::to_string(id) + " at line " +
                                  std::to_string(ln));
        seen[std::size_t(id)] = true;
        g.xs_[std::size_t(id)] = parse_double_field(row[std::size_t(c_x)], ln);
        g.ys_[std::size_t(id)] = parse_double_field(row[std::size_t(c_y)], ln);
    }

    CsvTable edges = read_csv(edge_stream);
    int c_from = edges.column("from"), c_to = edges.column("to");
    int c_len = edges.column("length_m");
    std::vector<int> slot_cols;
    for (std::size_t i = 0; i < edges.header.size(); ++i)
        if (edges.header[i].rfind("slot_", 0) == 0) slot_cols.push_back(int(i));
    if (c_from < 0 || c_to < 0 || slot_cols.empty())
        throw ParseError("edge file header must be from,to[,length_m],slot_0,...");

    int n_slots = int(slot_cols.size());
    g.n_slots_ = n_slots;

    struct RawEdge {
        VertexId from, to;
        double length;
        std::vector<double> secs;
    };
    std::unordered_map<std::uint64_t, RawEdge> dedup;
    std::size_t dup_count = 0;
    for (std::size_t r = 0; r < edges.rows.size(); ++r) {
        const auto& row = edges.rows[r];
        std::size_t ln = edges.line_no[r];
        if (row.size() < edges.header.size())
            throw ParseError("short edge row at line " + std::to_string(ln));
        long long from = parse_int_field(row[std::size_t(c_from)], ln);
        long long to = parse_int_field(row[std::size_t(c_to)], ln);
        if (from < 0 || std::size_t(from) >= n || to < 0 || std::size_t(to) >= n)
            throw ValidationError("edge endpoint references unknown node at line " +
                                  std::to_string(ln));
        RawEdge e;
        e.from = VertexId(from);
        e.to = VertexId(to);
        e.length = std::numeric_limits<double>::quiet_NaN();
        if (c_len >= 0) {
            e.length = parse_double_field(row[std::size_t(c_len)], ln);
            if (e.length <= 0 || !std::isfinite(e.length))
                throw ValidationError("non-positive edge length at line " + std::to_string(ln));
        }
        e.secs.reserve(std::size_t(n_slots));
        for (int sc : slot_cols) {
            double v = parse_double_field(row[std::size_t(sc)], ln);
            if (!(v > 0) || !std::isfinite(v))
                throw ValidationError("travel time must be strictly positive and finite at line " +
                                      std::to_string(ln));
            e.secs.push_back(v);
        }
        std::uint64_t key = std::uint64_t(std::uint32_t(e.from)) << 32 | std::uint32_t(e.to);
        auto [it, inserted] = dedup.try_emplace(key, e);
        if (!inserted) {
            ++dup_count;
            RawEdge& kept = it->second;
            for (int s = 0; s < n_slots; ++s)
                kept.secs[std::size_t(s)] = std::min(kept.secs[std::size_t(s)], e.secs[std::size_t(s)]);
            if (!std::isnan(e.length))
                kept.length = std::isnan(kept.length) ? e.length : std::min(kept.length, e.length);
        }
    }

    std::vector<RawEdge> sorted;
    sorted.reserve(dedup.size());
    for (auto& [key, e] : dedup) sorted.push_back(std::move(e));
    std::sort(sorted.begin(), sorted.end(), [](const RawEdge& a, const RawEdge& b) {
        return a.from != b.from ? a.from < b.from : a.to < b.to;
    });

    g.adj_offset_.assign(n + 1, 0);
    g.edge_to_.reserve(sorted.size());
    g.edge_seconds_.reserve(sorted.size() * std::size_t(n_slots));
    g.edge_length_m_.reserve(sorted.size());
    for (const RawEdge& e : sorted) {
        ++g.adj_offset_[std::size_t(e.from) + 1];
        g.edge_to_.push_back(e.to);
        g.edge_length_m_.push_back(e.length);
        for (double s : e.secs) g.edge_seconds_.push_back(s);
    }
    for (std::size_t i = 1; i <= n; ++i) g.adj_offset_[i] += g.adj_offset_[i - 1];

    g.build_snap_grid();

    if (stats) {
        stats->nodes = n;
        stats->edges = g.edge_count();
        stats->duplicate_edges = dup_count;
        if (dup_count)
            stats->warnings.push_back("collapsed " + std::to_string(dup_count) +
                                      " duplicate directed edges to per-slot minima");
    }
    return g;
}

inline RoadGraph load_graph_files(const std::string& node_path, const std::string& edge_path,
                                  std::int64_t slot_length, LoadStats* stats = nullptr) {
    std::ifstream nodes(node_path);
    if (!nodes) throw ConfigError("cannot open node file: " + node_path);
    std::ifstream edges(edge_path);
    if (!edges) throw ConfigError("cannot open edge file: " + edge_path);
    return load_graph(nodes, edges, slot_length, stats);
}

inline DistanceMatrix full_distance_matrix(const RoadGraph& g, std::int64_t t) {
    std::vector<VertexId> all(g.vertex_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = VertexId(i);
    return g.distance_matrix(all, t);
}

}  // namespace fleetsim
