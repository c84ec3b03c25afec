#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "fleetsim/road_graph.hpp"
#include "fleetsim/util.hpp"

namespace fleetsim {

struct BipartiteGraph {
    struct Edge {
        int left = 0;
        int right = 0;
        double cost = 0.0;  // tie-ranking only; cardinality is what is maximized
    };
    int n_left = 0;
    int n_right = 0;
    std::vector<Edge> edges;
};

struct Matching {
    std::vector<int> left_match;   // right index or -1
    std::vector<int> right_match;  // left index or -1
    int cardinality = 0;
    int phases = 0;  // BFS/DFS rounds, bounded by O(sqrt(V))

    std::vector<std::pair<int, int>> pairs() const {
        std::vector<std::pair<int, int>> out;
        for (int l = 0; l < int(left_match.size()); ++l)
            if (left_match[std::size_t(l)] >= 0) out.emplace_back(l, left_match[std::size_t(l)]);
        return out;
    }
};

// Hopcroft-Karp maximum-cardinality matching. Adjacency is sorted by
// (cost, right id) before augmentation, which makes the result deterministic
// and biases equal-cardinality matchings toward cheap edges.
inline Matching max_bipartite_matching(const BipartiteGraph& bg) {
    const int nl = bg.n_left, nr = bg.n_right;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(nl));
    {
        std::vector<std::vector<std::pair<double, int>>> tmp(static_cast<std::size_t>(nl));
        for (const auto& e : bg.edges) {
            if (e.left < 0 || e.left >= nl || e.right < 0 || e.right >= nr)
                throw ValidationError("bipartite edge out of range");
            tmp[std::size_t(e.left)].emplace_back(e.cost, e.right);
        }
        for (int l = 0; l < nl; ++l) {
            auto& v = tmp[std::size_t(l)];
            std::sort(v.begin(), v.end());
            adj[std::size_t(l)].reserve(v.size());
            for (auto& [c, r] : v) adj[std::size_t(l)].push_back(r);
        }
    }

    Matching m;
    m.left_match.assign(std::size_t(nl), -1);
    m.right_match.assign(std::size_t(nr), -1);

    constexpr int kInf = std::numeric_limits<int>::max();
    std::vector<int> dist(static_cast<std::size_t>(nl));

    auto bfs = [&]() {
        std::queue<int> q;
        for (int l = 0; l < nl; ++l) {
            if (m.left_match[std::size_t(l)] < 0) {
                dist[std::size_t(l)] = 0;
                q.push(l);
            } else {
                dist[std::size_t(l)] = kInf;
            }
        }
        bool found_free = false;
        while (!q.empty()) {
            int l = q.front();
            q.pop();
            for (int r : adj[std::size_t(l)]) {
                int l2 = m.right_match[std::size_t(r)];
                if (l2 < 0) {
                    found_free = true;
                } else if (dist[std::size_t(l2)] == kInf) {
                    dist[std::size_t(l2)] = dist[std::size_t(l)] + 1;
                    q.push(l2);
                }
            }
        }
        return found_free;
    };

    std::function<bool(int)> dfs = [&](int l) {
        for (int r : adj[std::size_t(l)]) {
            int l2 = m.right_match[std::size_t(r)];
            if (l2 < 0 || (dist[std::size_t(l2)] == dist[std::size_t(l)] + 1 && dfs(l2))) {
                m.left_match[std::size_t(l)] = r;
                m.right_match[std::size_t(r)] = l;
                return true;
            }
        }
        dist[std::size_t(l)] = kInf;
        return false;
    };

    while (bfs()) {
        ++m.phases;
        for (int l = 0; l < nl; ++l)
            if (m.left_match[std::size_t(l)] < 0 && dfs(l)) ++m.cardinality;
    }
    return m;
}

// A vehicle available for matching, possibly mid-leg. Effective travel time
// and distance to a target interpolate linearly between the leg endpoints by
// the elapsed fraction; a parked vehicle has frac = 0 and both anchors equal.
struct AvailableVehicle {
    int id = 0;
    VertexId anchor_a = -1;
    VertexId anchor_b = -1;
    double frac = 0.0;
};

struct PendingRequest {
    std::int64_t id = 0;
    VertexId pickup = -1;
    std::int64_t request_time = 0;
    std::int64_t deadline = 0;  // request_time + delta
};

namespace detail {

inline DistanceMatrix anchors_matrix(std::span<const AvailableVehicle> vehicles,
                                     const RoadGraph& g, std::int64_t now) {
    std::vector<VertexId> sources;
    for (const auto& v : vehicles) {
        sources.push_back(v.anchor_a);
        if (v.anchor_b != v.anchor_a) sources.push_back(v.anchor_b);
    }
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    return g.distance_matrix(sources, now);
}

inline PathCost effective_cost(const AvailableVehicle& v, VertexId target,
                               const DistanceMatrix& dm) {
    double sa = dm.sec(v.anchor_a, target), ma = dm.m(v.anchor_a, target);
    if (v.frac == 0.0 || v.anchor_a == v.anchor_b) return {sa, ma};
    double sb = dm.sec(v.anchor_b, target), mb = dm.m(v.anchor_b, target);
    if (!std::isfinite(sa) || !std::isfinite(sb)) return {kUnreachable, kUnreachable};
    return {(1.0 - v.frac) * sa + v.frac * sb, (1.0 - v.frac) * ma + v.frac * mb};
}

}  // namespace detail

// Edge (request, vehicle) iff the vehicle can reach the pickup before the
// request's deadline (i.e. within the remaining share of delta); cost is the
// travel time. Left side indexes `requests`, right side indexes `vehicles`.
inline BipartiteGraph build_request_vehicle_graph(std::span<const PendingRequest> requests,
                                                  std::span<const AvailableVehicle> vehicles,
                                                  const RoadGraph& g, std::int64_t now) {
    BipartiteGraph bg;
    bg.n_left = int(requests.size());
    bg.n_right = int(vehicles.size());
    if (requests.empty() || vehicles.empty()) return bg;
    DistanceMatrix dm = detail::anchors_matrix(vehicles, g, now);
    for (int r = 0; r < bg.n_left; ++r) {
        for (int v = 0; v < bg.n_right; ++v) {
            PathCost c = detail::effective_cost(vehicles[std::size_t(v)],
                                                requests[std::size_t(r)].pickup, dm);
            if (!std::isfinite(c.seconds)) continue;
            if (now + std::int64_t(std::ceil(c.seconds)) <= requests[std::size_t(r)].deadline)
                bg.edges.push_back({r, v, c.seconds});
        }
    }
    return bg;
}

struct RelocationDemand {
    int subarea = 0;
    VertexId center = -1;
    double gap = 0.0;  // positive region gap
};

// One slot per needed vehicle (ceil of the positive gap) at each
// under-supplied subarea's center; edge iff the idle vehicle reaches the
// center within t_r. slot_center[i] names the destination of right slot i.
inline BipartiteGraph build_relocation_graph(std::span<const AvailableVehicle> idle,
                                             std::span<const RelocationDemand> demands,
                                             const RoadGraph& g, std::int64_t t_r,
                                             std::int64_t now,
                                             std::vector<VertexId>* slot_center = nullptr) {
    BipartiteGraph bg;
    bg.n_left = int(idle.size());
    std::vector<VertexId> slots;
    for (const auto& d : demands) {
        if (!(d.gap > 0)) continue;
        int count = int(std::ceil(d.gap));
        for (int i = 0; i < count; ++i) slots.push_back(d.center);
    }
    bg.n_right = int(slots.size());
    if (slot_center) *slot_center = slots;
    if (idle.empty() || slots.empty()) return bg;
    DistanceMatrix dm = detail::anchors_matrix(idle, g, now);
    for (int v = 0; v < bg.n_left; ++v) {
        for (int s = 0; s < bg.n_right; ++s) {
            PathCost c = detail::effective_cost(idle[std::size_t(v)], slots[std::size_t(s)], dm);
            if (!std::isfinite(c.seconds)) continue;
            if (c.seconds <= double(t_r)) bg.edges.push_back({v, s, c.seconds});
        }
    }
    return bg;
}

}  // namespace fleetsim
