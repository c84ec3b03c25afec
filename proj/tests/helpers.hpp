#pragma once

#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fleetsim/demand.hpp"
#include "fleetsim/matching.hpp"
#include "fleetsim/road_graph.hpp"
#include "fleetsim/util.hpp"

namespace testutil {

using namespace fleetsim;

// Four-vertex fixture whose all-pairs shortest times (in minutes) are:
//        A   B   C   D
//   A    0   5  13   8
//   B    4   0   8   3
//   C    5   6   0   9
//   D   10  11   5   0
// Realized as the complete digraph with those direct times (triangle-consistent),
// stored in seconds. Gaps: A=+1, B=-1, C=0, D=+1.
inline const int kToyMinutes[4][4] = {
    {0, 5, 13, 8}, {4, 0, 8, 3}, {5, 6, 0, 9}, {10, 11, 5, 0}};

inline const double kToyGaps[4] = {1.0, -1.0, 0.0, 1.0};

inline std::string toy_nodes_csv() {
    return "node_id,x_m,y_m\n0,0,0\n1,400,0\n2,0,400\n3,400,400\n";
}

inline std::string toy_edges_csv() {
    std::string s = "from,to,slot_0\n";
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j)
                s += std::to_string(i) + "," + std::to_string(j) + "," +
                     std::to_string(kToyMinutes[i][j] * 60) + "\n";
    return s;
}

inline RoadGraph toy_graph() {
    std::istringstream nodes(toy_nodes_csv());
    std::istringstream edges(toy_edges_csv());
    return load_graph(nodes, edges, 3600);
}

inline std::vector<double> toy_gaps() { return {1.0, -1.0, 0.0, 1.0}; }

// Random strongly connected digraph: a random Hamiltonian cycle plus extra
// arcs, integer travel seconds in [lo, hi]. Coordinates on a grid.
struct RandomGraphSpec {
    int n = 8;
    int extra_edges = 12;
    int lo = 60;
    int hi = 540;
    int slots = 1;
    std::uint64_t seed = 1;
};

inline RoadGraph random_graph(const RandomGraphSpec& spec) {
    SplitMix64 rng(spec.seed);
    std::string nodes = "node_id,x_m,y_m\n";
    for (int i = 0; i < spec.n; ++i)
        nodes += std::to_string(i) + "," + std::to_string(100 * (i % 4)) + "," +
                 std::to_string(100 * (i / 4)) + "\n";
    std::string edges = "from,to";
    for (int s = 0; s < spec.slots; ++s) edges += ",slot_" + std::to_string(s);
    edges += "\n";
    auto add_edge = [&](int u, int v) {
        edges += std::to_string(u) + "," + std::to_string(v);
        for (int s = 0; s < spec.slots; ++s)
            edges += "," + std::to_string(spec.lo + int(rng.below(std::uint64_t(spec.hi - spec.lo + 1))));
        edges += "\n";
    };
    std::vector<int> perm(static_cast<std::size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i) perm[std::size_t(i)] = i;
    for (int i = spec.n - 1; i > 0; --i)
        std::swap(perm[std::size_t(i)], perm[rng.below(std::uint64_t(i + 1))]);
    for (int i = 0; i < spec.n; ++i) add_edge(perm[std::size_t(i)], perm[std::size_t((i + 1) % spec.n)]);
    for (int e = 0; e < spec.extra_edges; ++e) {
        int u = int(rng.below(std::uint64_t(spec.n)));
        int v = int(rng.below(std::uint64_t(spec.n)));
        if (u == v) continue;
        add_edge(u, v);
    }
    std::istringstream ns(nodes), es(edges);
    return load_graph(ns, es, 600);
}

// All-pairs shortest times by exhaustive simple-path enumeration (n <= 10).
inline std::vector<std::vector<double>> brute_force_shortest(const RoadGraph& g, std::int64_t t) {
    const int n = int(g.vertex_count());
    int slot = g.slot_index(t);
    std::vector<std::vector<double>> w(std::size_t(n), std::vector<double>(std::size_t(n), kUnreachable));
    g.for_each_edge([&](VertexId from, VertexId to, std::size_t e) {
        w[std::size_t(from)][std::size_t(to)] =
            std::min(w[std::size_t(from)][std::size_t(to)], g.edge_seconds(e, slot));
    });
    std::vector<std::vector<double>> best(std::size_t(n), std::vector<double>(std::size_t(n), kUnreachable));
    std::vector<char> visited(std::size_t(n), 0);
    for (int s = 0; s < n; ++s) {
        best[std::size_t(s)][std::size_t(s)] = 0.0;
        std::fill(visited.begin(), visited.end(), 0);
        // DFS over simple paths from s
        std::function<void(int, double)> dfs = [&](int v, double cost) {
            visited[std::size_t(v)] = 1;
            for (int u = 0; u < n; ++u) {
                double wu = w[std::size_t(v)][std::size_t(u)];
                if (!std::isfinite(wu) || visited[std::size_t(u)]) continue;
                double c = cost + wu;
                if (c < best[std::size_t(s)][std::size_t(u)]) best[std::size_t(s)][std::size_t(u)] = c;
                dfs(u, c);
            }
            visited[std::size_t(v)] = 0;
        };
        dfs(s, 0.0);
    }
    return best;
}

// Maximum bipartite matching by exhaustive recursion (right side <= ~12).
inline int brute_force_matching(const BipartiteGraph& bg) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(bg.n_left));
    for (const auto& e : bg.edges) adj[std::size_t(e.left)].push_back(e.right);
    std::vector<char> used(std::size_t(bg.n_right), 0);
    std::function<int(int)> go = [&](int l) -> int {
        if (l == bg.n_left) return 0;
        int best = go(l + 1);  // skip l
        for (int r : adj[std::size_t(l)]) {
            if (used[std::size_t(r)]) continue;
            used[std::size_t(r)] = 1;
            best = std::max(best, 1 + go(l + 1));
            used[std::size_t(r)] = 0;
        }
        return best;
    };
    return go(0);
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("fleetsim_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        auto p = path / name;
        std::ofstream out(p);
        out << content;
        return p.string();
    }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

inline TripStore ingest_from_string(const std::string& csv, const RoadGraph& g) {
    std::istringstream in(csv);
    return ingest_trips(in, g);
}

}  // namespace testutil
