#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fleetsim/partition.hpp"
#include "fleetsim/road_graph.hpp"
#include "fleetsim/util.hpp"

namespace fleetsim {

// Symmetric nonnegative similarity: A[i][j] = s(i,j) + s(j,i) with
// s(i,j) = 1/w(i,j) over direct edges (not shortest paths).
struct SimilarityMatrix {
    std::size_t n = 0;
    std::vector<double> a;  // row-major n*n

    double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
};

inline SimilarityMatrix similarity_graph(const RoadGraph& g, std::int64_t t) {
    SimilarityMatrix sim;
    sim.n = g.vertex_count();
    sim.a.assign(sim.n * sim.n, 0.0);
    int slot = g.slot_index(t);
    g.for_each_edge([&](VertexId from, VertexId to, std::size_t e) {
        double w = g.edge_seconds(e, slot);
        double s = 1.0 / w;
        sim.at(std::size_t(from), std::size_t(to)) += s;
        sim.at(std::size_t(to), std::size_t(from)) += s;
    });
    return sim;
}

struct PicOptions {
    double tol_scale = 1e-5;  // stop when max embedding acceleration < tol_scale / n
    int max_iterations = 1000;
    int kmeans_max_iterations = 100;
};

namespace detail {

// 1-D k-means with quantile initialization on the sorted values; assignment
// ties go to the lower cluster index. Deterministic for a given input.
inline std::vector<int> kmeans_1d(const std::vector<double>& values, int k, int max_iter) {
    const std::size_t n = values.size();
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<double> centers(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        std::size_t idx = sorted.size() == 1
                              ? 0
                              : std::size_t(double(j) * double(sorted.size() - 1) / double(k - 1 == 0 ? 1 : k - 1));
        centers[std::size_t(j)] = sorted[std::min(idx, sorted.size() - 1)];
    }
    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::fabs(values[i] - centers[0]);
            for (int j = 1; j < k; ++j) {
                double d = std::fabs(values[i] - centers[std::size_t(j)]);
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        std::vector<double> sum(std::size_t(k), 0.0);
        std::vector<int> count(std::size_t(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[std::size_t(assign[i])] += values[i];
            ++count[std::size_t(assign[i])];
        }
        for (int j = 0; j < k; ++j)
            if (count[std::size_t(j)] > 0) centers[std::size_t(j)] = sum[std::size_t(j)] / count[std::size_t(j)];
        if (!changed) break;
    }
    return assign;
}

}  // namespace detail

// Power iteration clustering: iterate the row-normalized similarity matrix to
// a near-constant 1-D embedding, then cluster the embedding with 1-D k-means.
// Cluster centers are the medoids minimizing the within-cluster distance sum
// (graph travel times when a distance matrix is supplied, embedding distance
// otherwise). Deterministic given the seed.
inline Partition pic_partition(const SimilarityMatrix& sim, int k, std::uint64_t seed,
                               const DistanceMatrix* dm = nullptr, PicOptions opts = {}) {
    const std::size_t n = sim.n;
    if (k < 1 || std::size_t(k) > n) throw ValidationError("pic_partition: k must be in 1..n");

    std::vector<double> degree(n, 0.0);
    bool any_nonzero = false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) degree[i] += sim.at(i, j);
        if (degree[i] > 0) any_nonzero = true;
    }
    if (!any_nonzero)
        throw ValidationError("pic_partition: similarity matrix has no nonzero row");

    // Seeded positive start vector, L1-normalized. Disconnected rows keep a
    // frozen embedding value and are clustered by value like everyone else.
    SplitMix64 rng(mix_seed(seed, 0x9c1bULL));
    std::vector<double> v(n), next(n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = 0.5 + rng.unit();
        norm += v[i];
    }
    for (auto& x : v) x /= norm;

    std::vector<double> prev_delta(n, 0.0);
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            if (degree[i] == 0.0) {
                next[i] = v[i];
                continue;
            }
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += sim.at(i, j) * v[j];
            next[i] = acc / degree[i];
        }
        double l1 = 0.0;
        for (double x : next) l1 += std::fabs(x);
        if (l1 > 0)
            for (auto& x : next) x /= l1;
        double max_accel = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double delta = next[i] - v[i];
            max_accel = std::max(max_accel, std::fabs(delta - prev_delta[i]));
            prev_delta[i] = delta;
        }
        v.swap(next);
        if (iter > 0 && max_accel < opts.tol_scale / double(n)) break;
    }

    std::vector<int> assign = detail::kmeans_1d(v, k, opts.kmeans_max_iterations);

    // k-means can leave clusters empty on degenerate embeddings; split the
    // largest cluster by peeling its max-value member until k are non-empty.
    std::vector<std::vector<VertexId>> clusters(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) clusters[std::size_t(assign[i])].push_back(VertexId(i));
    while (true) {
        int empty_j = -1;
        for (int j = 0; j < k; ++j)
            if (clusters[std::size_t(j)].empty()) {
                empty_j = j;
                break;
            }
        if (empty_j < 0) break;
        int biggest = 0;
        for (int j = 1; j < k; ++j)
            if (clusters[std::size_t(j)].size() > clusters[std::size_t(biggest)].size()) biggest = j;
        auto& donor = clusters[std::size_t(biggest)];
        std::size_t pick = 0;
        for (std::size_t i = 1; i < donor.size(); ++i)
            if (v[std::size_t(donor[i])] > v[std::size_t(donor[pick])]) pick = i;
        clusters[std::size_t(empty_j)].push_back(donor[pick]);
        donor.erase(donor.begin() + long(pick));
    }

    Partition p;
    p.seed = seed;
    p.subareas.resize(std::size_t(k));
    p.centers.resize(std::size_t(k));
    p.subarea_of.assign(n, -1);
    for (int j = 0; j < k; ++j) {
        auto& cluster = clusters[std::size_t(j)];
        std::sort(cluster.begin(), cluster.end());
        // medoid under unweighted distance; lowest id wins ties
        VertexId best = cluster.front();
        double best_sum = kUnreachable;
        for (VertexId cand : cluster) {
            double s = 0.0;
            for (VertexId other : cluster) {
                if (dm) {
                    double d = dm->sec(cand, other);
                    if (!std::isfinite(d)) {
                        s = kUnreachable;
                        break;
                    }
                    s += d;
                } else {
                    s += std::fabs(v[std::size_t(cand)] - v[std::size_t(other)]);
                }
            }
            if (s < best_sum) {
                best_sum = s;
                best = cand;
            }
        }
        p.centers[std::size_t(j)] = best;
        p.subareas[std::size_t(j)] = cluster;
        for (VertexId m : cluster) p.subarea_of[std::size_t(m)] = std::int32_t(j);
    }
    return p;
}

inline Partition pic_partition(const RoadGraph& g, int k, std::uint64_t seed, std::int64_t t,
                               PicOptions opts = {}) {
    SimilarityMatrix sim = similarity_graph(g, t);
    DistanceMatrix dm = full_distance_matrix(g, t);
    return pic_partition(sim, k, seed, &dm, opts);
}

struct FdaVedConfig {
    int n_max = 1;          // maximum points per subarea
    double delta_s = 300.0; // reach threshold

    int n_sub(int n_points) const { return n_points / n_max; }
};

struct FdaStats {
    std::int64_t distance_lookups = 0;
};

// Greedy reach-based partitioner: repeatedly pick the remaining vertex that
// reaches the most remaining vertices within delta (ties to the lowest id),
// claim its n_max nearest remaining vertices (itself included), and repeat.
// The trailing remainder forms a final smaller subarea.
inline Partition fda_ved_partition(const RoadGraph& g, const FdaVedConfig& cfg, std::int64_t t,
                                   FdaStats* stats = nullptr) {
    if (cfg.n_max < 1) throw ValidationError("fda_ved_partition: n_max must be >= 1");
    const std::size_t n = g.vertex_count();
    DistanceMatrix dm = full_distance_matrix(g, t);
    std::int64_t lookups = 0;
    auto dist = [&](VertexId a, VertexId b) {
        ++lookups;
        return dm.sec(a, b);
    };

    std::vector<char> remaining(n, 1);
    std::size_t left = n;
    Partition p;
    p.subarea_of.assign(n, -1);

    while (left > 0) {
        VertexId center = -1;
        std::size_t best_reach = 0;
        for (std::size_t v = 0; v < n; ++v) {
            if (!remaining[v]) continue;
            std::size_t reach = 0;
            for (std::size_t u = 0; u < n; ++u) {
                if (!remaining[u]) continue;
                if (dist(VertexId(v), VertexId(u)) <= cfg.delta_s) ++reach;
            }
            if (center < 0 || reach > best_reach) {  // ties keep the lowest id
                best_reach = reach;
                center = VertexId(v);
            }
        }

        std::vector<std::pair<double, VertexId>> order;
        for (std::size_t u = 0; u < n; ++u)
            if (remaining[u]) order.emplace_back(dist(center, VertexId(u)), VertexId(u));
        std::sort(order.begin(), order.end());
        std::size_t take = std::min(std::size_t(cfg.n_max), order.size());

        std::vector<VertexId> members;
        for (std::size_t i = 0; i < take; ++i) {
            members.push_back(order[i].second);
            remaining[std::size_t(order[i].second)] = 0;
        }
        std::sort(members.begin(), members.end());
        std::int32_t j = std::int32_t(p.centers.size());
        for (VertexId m : members) p.subarea_of[std::size_t(m)] = j;
        p.centers.push_back(center);
        p.subareas.push_back(std::move(members));
        left -= take;
    }

    if (stats) stats->distance_lookups = lookups;
    return p;
}

}  // namespace fleetsim
