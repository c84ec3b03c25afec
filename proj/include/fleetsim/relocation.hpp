#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fleetsim/activation.hpp"
#include "fleetsim/partition.hpp"
#include "fleetsim/road_graph.hpp"
#include "fleetsim/util.hpp"

namespace fleetsim {

// Relocation-center objective: sum over vertices of the signed minimum of
// d(center, vertex) * S(gap). A center vertex serves itself at distance 0 and
// contributes nothing; non-center vertices take the minimum over the signed
// products, so a negative weight selects the farthest reachable center.
// Centers that cannot reach a vertex are skipped; a vertex reachable from no
// center is an error.
inline double objective(const DistanceMatrix& dm, std::span<const VertexId> centers,
                        std::span<const double> gaps, ActivationKind kind) {
    const std::size_t n = dm.n;
    std::vector<char> is_center(n, 0);
    for (VertexId c : centers) {
        if (!dm.has_source(c))
            throw ValidationError("objective: center " + std::to_string(c) +
                                  " missing from distance matrix");
        is_center[std::size_t(c)] = 1;
    }
    double total = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        if (is_center[v]) continue;
        double weight = activation(kind, gaps[v]);
        double best = kUnreachable;
        bool found = false;
        for (VertexId c : centers) {
            double d = dm.sec(c, VertexId(v));
            if (!std::isfinite(d)) continue;
            double product = d * weight;
            if (!found || product < best) {
                best = product;
                found = true;
            }
        }
        if (!found)
            throw ValidationError("vertex " + std::to_string(v) +
                                  " unreachable from every center");
        total += best;
    }
    return total;
}

inline Partition assign_subareas(const DistanceMatrix& dm, std::span<const VertexId> centers,
                                 std::span<const double> gaps, ActivationKind kind) {
    const std::size_t n = dm.n;
    Partition p;
    p.centers.assign(centers.begin(), centers.end());
    p.activation = kind;
    p.subareas.assign(centers.size(), {});
    p.subarea_of.assign(n, -1);

    std::vector<std::int32_t> center_slot(n, -1);
    for (std::size_t j = 0; j < centers.size(); ++j) {
        if (!dm.has_source(centers[j]))
            throw ValidationError("assign_subareas: center " + std::to_string(centers[j]) +
                                  " missing from distance matrix");
        if (center_slot[std::size_t(centers[j])] >= 0)
            throw ValidationError("assign_subareas: duplicate center " +
                                  std::to_string(centers[j]));
        center_slot[std::size_t(centers[j])] = std::int32_t(j);
    }

    double total = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        std::int32_t own = center_slot[v];
        if (own >= 0) {
            p.subarea_of[v] = own;
            continue;
        }
        double weight = activation(kind, gaps[v]);
        double best = kUnreachable;
        std::int32_t best_j = -1;
        for (std::size_t j = 0; j < centers.size(); ++j) {
            double d = dm.sec(centers[j], VertexId(v));
            if (!std::isfinite(d)) continue;
            double product = d * weight;
            if (best_j < 0 || product < best) {  // ties keep the lowest center index
                best = product;
                best_j = std::int32_t(j);
            }
        }
        if (best_j < 0)
            throw ValidationError("vertex " + std::to_string(v) +
                                  " unreachable from every center");
        p.subarea_of[v] = best_j;
        total += best;
    }
    for (std::size_t v = 0; v < n; ++v)
        p.subareas[std::size_t(p.subarea_of[v])].push_back(VertexId(v));
    p.objective = total;
    return p;
}

// New center for each subarea: the candidate minimizing the (weighted) sum of
// distances to the subarea members. The incumbent is retained whenever it
// already attains the minimum, which also covers the all-zero-weight case;
// otherwise ties go to the lowest candidate id. Candidates claimed by another
// subarea this round, and other subareas' incumbents, are excluded so the
// center set stays duplicate-free. An empty subarea keeps its center.
inline std::vector<VertexId> update_centers(const DistanceMatrix& dm, const Partition& p,
                                            std::span<const double> gaps, ActivationKind kind,
                                            bool weighted = true) {
    const std::size_t n = dm.n;
    const std::size_t k = p.centers.size();
    for (std::size_t v = 0; v < n; ++v)
        if (!dm.has_source(VertexId(v)))
            throw ValidationError("update_centers requires a full distance matrix");
    std::vector<char> excluded(n, 0);
    for (VertexId c : p.centers) excluded[std::size_t(c)] = 1;

    auto member_sum = [&](VertexId x, const std::vector<VertexId>& members) {
        double s = 0.0;
        for (VertexId v : members) {
            double d = dm.sec(x, v);
            double w = weighted ? activation(kind, gaps[std::size_t(v)]) : 1.0;
            if (!std::isfinite(d)) {
                if (w == 0.0) continue;  // unreachable zero-weight pairs drop out of the sum
                return kUnreachable;
            }
            s += d * w;
        }
        return s;
    };

    std::vector<VertexId> next(k);
    for (std::size_t j = 0; j < k; ++j) {
        VertexId incumbent = p.centers[j];
        excluded[std::size_t(incumbent)] = 0;  // own incumbent is always a candidate
        VertexId best = incumbent;
        if (!p.subareas[j].empty()) {
            double best_sum = member_sum(incumbent, p.subareas[j]);
            for (std::size_t x = 0; x < n; ++x) {
                if (excluded[x] || VertexId(x) == incumbent) continue;
                double s = member_sum(VertexId(x), p.subareas[j]);
                if (s < best_sum) {  // strict: incumbent wins ties, then lowest id
                    best_sum = s;
                    best = VertexId(x);
                }
            }
        }
        next[j] = best;
        excluded[std::size_t(best)] = 1;
    }
    return next;
}

struct SearchOptions {
    bool weighted_update = true;      // gap-weighted update keeps descent exact; false sums plain distances
    double min_decrease = 1e-9;       // strict-improvement threshold
    std::vector<double>* trace = nullptr;  // accepted objective values, in order
};

// Alternates assignment and center update until the objective stops strictly
// decreasing, returning the last improving partition (so a rerun initialized
// at the output is a fixed point). iterations counts update/assign rounds
// including the terminal non-improving one.
inline Partition search_centers_from(const DistanceMatrix& dm, std::span<const VertexId> initial,
                                     std::span<const double> gaps, ActivationKind kind,
                                     SearchOptions opts = {}) {
    if (initial.empty()) throw ValidationError("search_centers: k must be >= 1");
    Partition best = assign_subareas(dm, initial, gaps, kind);
    if (opts.trace) opts.trace->push_back(best.objective);
    int rounds = 0;
    while (true) {
        std::vector<VertexId> next = update_centers(dm, best, gaps, kind, opts.weighted_update);
        Partition candidate = assign_subareas(dm, next, gaps, kind);
        ++rounds;
        if (candidate.objective < best.objective - opts.min_decrease) {
            candidate.seed = best.seed;
            best = std::move(candidate);
            if (opts.trace) opts.trace->push_back(best.objective);
        } else {
            break;
        }
    }
    best.iterations = rounds;
    best.activation = kind;
    return best;
}

inline Partition search_centers(const DistanceMatrix& dm, int k, std::span<const double> gaps,
                                ActivationKind kind, std::uint64_t seed, SearchOptions opts = {}) {
    if (k < 1 || std::size_t(k) > dm.n)
        throw ValidationError("search_centers: k must be in 1..n");
    SplitMix64 rng(mix_seed(seed, 0x5eedULL));
    std::vector<int> sample = sample_distinct(int(dm.n), k, rng);
    std::vector<VertexId> initial(sample.begin(), sample.end());
    Partition p = search_centers_from(dm, initial, gaps, kind, opts);
    p.seed = seed;
    return p;
}

namespace detail {

// (objective, sorted centers, centers) lexicographic order: a deterministic,
// restart-order-insensitive reduction for picking the best partition.
inline bool partition_less(const Partition& a, const Partition& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    std::vector<VertexId> sa = a.centers, sb = b.centers;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa != sb) return sa < sb;
    return a.centers < b.centers;
}

}  // namespace detail

inline Partition multi_restart_search(const DistanceMatrix& dm, int k,
                                      std::span<const double> gaps, ActivationKind kind,
                                      std::span<const std::uint64_t> seeds,
                                      SearchOptions opts = {}) {
    if (seeds.empty()) throw ValidationError("multi_restart_search: need at least one seed");
    Partition best;
    bool have = false;
    for (std::uint64_t seed : seeds) {
        Partition p = search_centers(dm, k, gaps, kind, seed, opts);
        if (!have || detail::partition_less(p, best)) {
            best = std::move(p);
            have = true;
        }
    }
    return best;
}

inline std::uint64_t combination_count(std::size_t n, std::size_t k, std::uint64_t cap) {
    if (k > n) return 0;
    std::uint64_t c = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        c = c * (n - k + i) / i;  // exact: product of i consecutive integers divisible by i!
        if (c > cap) return cap + 1;
    }
    return c;
}

// Exact global minimum by enumerating every k-subset; the verification oracle.
inline Partition brute_force_centers(const DistanceMatrix& dm, int k,
                                     std::span<const double> gaps, ActivationKind kind,
                                     std::uint64_t cap = 1000000) {
    const std::size_t n = dm.n;
    if (k < 1 || std::size_t(k) > n)
        throw ValidationError("brute_force_centers: k must be in 1..n");
    if (combination_count(n, std::size_t(k), cap) > cap)
        throw ValidationError("brute_force_centers: C(n,k) exceeds cap " + std::to_string(cap));

    std::vector<VertexId> combo(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) combo[std::size_t(i)] = VertexId(i);
    std::vector<VertexId> best_combo;
    double best_obj = kUnreachable;
    while (true) {
        double obj = objective(dm, combo, gaps, kind);
        if (best_combo.empty() || obj < best_obj) {  // lexicographically first among ties
            best_obj = obj;
            best_combo = combo;
        }
        int pos = k - 1;
        while (pos >= 0 && combo[std::size_t(pos)] == VertexId(n - std::size_t(k) + std::size_t(pos)))
            --pos;
        if (pos < 0) break;
        ++combo[std::size_t(pos)];
        for (int i = pos + 1; i < k; ++i) combo[std::size_t(i)] = combo[std::size_t(i - 1)] + 1;
    }
    Partition p = assign_subareas(dm, best_combo, gaps, kind);
    p.activation = kind;
    return p;
}

// Graph-level conveniences: distances frozen at the slot containing t.
inline Partition search_centers(const RoadGraph& g, int k, std::span<const double> gaps,
                                ActivationKind kind, std::uint64_t seed, std::int64_t t,
                                SearchOptions opts = {}) {
    return search_centers(full_distance_matrix(g, t), k, gaps, kind, seed, opts);
}

inline Partition multi_restart_search(const RoadGraph& g, int k, std::span<const double> gaps,
                                      ActivationKind kind, std::span<const std::uint64_t> seeds,
                                      std::int64_t t, SearchOptions opts = {}) {
    return multi_restart_search(full_distance_matrix(g, t), k, gaps, kind, seeds, opts);
}

inline Partition brute_force_centers(const RoadGraph& g, int k, std::span<const double> gaps,
                                     ActivationKind kind, std::int64_t t,
                                     std::uint64_t cap = 1000000) {
    return brute_force_centers(full_distance_matrix(g, t), k, gaps, kind, cap);
}

}  // namespace fleetsim
