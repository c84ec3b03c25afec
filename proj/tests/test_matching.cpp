#include <catch2/catch.hpp>

#include <cmath>
#include <set>

#include "fleetsim/matching.hpp"
#include "helpers.hpp"

using namespace fleetsim;

namespace {

BipartiteGraph random_bipartite(int nl, int nr, double density, SplitMix64& rng) {
    BipartiteGraph bg;
    bg.n_left = nl;
    bg.n_right = nr;
    for (int l = 0; l < nl; ++l)
        for (int r = 0; r < nr; ++r)
            if (rng.unit() < density) bg.edges.push_back({l, r, double(rng.below(1000))});
    return bg;
}

}  // namespace

TEST_CASE("max_bipartite_matching basics") {
    SECTION("complete 2x2 has cardinality 2") {
        BipartiteGraph bg;
        bg.n_left = bg.n_right = 2;
        bg.edges = {{0, 0, 0}, {0, 1, 0}, {1, 0, 0}, {1, 1, 0}};
        CHECK(max_bipartite_matching(bg).cardinality == 2);
    }
    SECTION("empty edge set has cardinality 0") {
        BipartiteGraph bg;
        bg.n_left = 3;
        bg.n_right = 2;
        Matching m = max_bipartite_matching(bg);
        CHECK(m.cardinality == 0);
        CHECK(m.pairs().empty());
    }
    SECTION("forced unique maximum matching is returned exactly") {
        // L1 can only take R1, so L0 must take R0
        BipartiteGraph bg;
        bg.n_left = bg.n_right = 2;
        bg.edges = {{0, 0, 5}, {0, 1, 1}, {1, 1, 5}};
        Matching m = max_bipartite_matching(bg);
        REQUIRE(m.cardinality == 2);
        CHECK(m.left_match[0] == 0);
        CHECK(m.left_match[1] == 1);
    }
    SECTION("among equal-cardinality options the cheaper edge wins") {
        BipartiteGraph bg;
        bg.n_left = 1;
        bg.n_right = 2;
        bg.edges = {{0, 1, 99.0}, {0, 0, 10.0}};
        Matching m = max_bipartite_matching(bg);
        CHECK(m.left_match[0] == 0);
    }
}

TEST_CASE("Hopcroft-Karp equals the exhaustive maximum on random graphs") {
    SplitMix64 rng(1234);
    for (int trial = 0; trial < 50; ++trial) {
        int nl = 1 + int(rng.below(10));
        int nr = 1 + int(rng.below(10));
        double density = 0.1 + rng.unit() * 0.6;
        BipartiteGraph bg = random_bipartite(nl, nr, density, rng);
        Matching m = max_bipartite_matching(bg);
        int expect = testutil::brute_force_matching(bg);
        INFO("trial " << trial << " nl=" << nl << " nr=" << nr);
        CHECK(m.cardinality == expect);

        // result is a valid matching over input edges
        std::set<std::pair<int, int>> edge_set;
        for (const auto& e : bg.edges) edge_set.insert({e.left, e.right});
        for (auto [l, r] : m.pairs()) CHECK(edge_set.count({l, r}) == 1);
    }
}

TEST_CASE("phase count stays within the Hopcroft-Karp bound") {
    SplitMix64 rng(888);
    for (int trial = 0; trial < 20; ++trial) {
        int nl = 5 + int(rng.below(40));
        int nr = 5 + int(rng.below(40));
        BipartiteGraph bg = random_bipartite(nl, nr, 0.2, rng);
        Matching m = max_bipartite_matching(bg);
        double bound = 2.0 * std::sqrt(double(nl + nr)) + 2.0;
        CHECK(double(m.phases) <= bound);
    }
}

TEST_CASE("build_request_vehicle_graph") {
    RoadGraph g = testutil::toy_graph();  // times in seconds, d(A,B)=300 etc.

    SECTION("co-located vehicle gets a zero-cost edge") {
        std::vector<PendingRequest> reqs = {{7, 0, 1000, 1300}};
        std::vector<AvailableVehicle> vehs = {{0, 0, 0, 0.0}};
        BipartiteGraph bg = build_request_vehicle_graph(reqs, vehs, g, 1000);
        REQUIRE(bg.edges.size() == 1);
        CHECK(bg.edges[0].cost == 0.0);
    }

    SECTION("no vehicle within the window leaves the request isolated") {
        // request at A with 250s left; nearest vehicle is 240s away? use B->A=240s
        std::vector<PendingRequest> reqs = {{7, 0, 1000, 1200}};  // 200s window at t=1000
        std::vector<AvailableVehicle> vehs = {{0, 1, 1, 0.0}};    // B->A takes 240s
        BipartiteGraph bg = build_request_vehicle_graph(reqs, vehs, g, 1000);
        CHECK(bg.edges.empty());
    }

    SECTION("deadline is inclusive at exact reach") {
        std::vector<PendingRequest> reqs = {{7, 0, 1000, 1240}};
        std::vector<AvailableVehicle> vehs = {{0, 1, 1, 0.0}};
        BipartiteGraph bg = build_request_vehicle_graph(reqs, vehs, g, 1000);
        CHECK(bg.edges.size() == 1);
    }

    SECTION("edge set equals the reachability predicate on a 5x5 fixture") {
        RoadGraph rg = testutil::random_graph({.n = 10, .extra_edges = 25, .seed = 321});
        std::vector<PendingRequest> reqs;
        std::vector<AvailableVehicle> vehs;
        SplitMix64 rng(55);
        std::int64_t now = 5000;
        for (int i = 0; i < 5; ++i) {
            VertexId pu = VertexId(rng.below(10));
            std::int64_t tp = now - std::int64_t(rng.below(60));
            reqs.push_back({i, pu, tp, tp + 300});
            vehs.push_back({i, VertexId(rng.below(10)), VertexId(rng.below(10)), 0.0});
        }
        BipartiteGraph bg = build_request_vehicle_graph(reqs, vehs, rg, now);
        std::set<std::pair<int, int>> edges;
        for (const auto& e : bg.edges) edges.insert({e.left, e.right});
        for (int r = 0; r < 5; ++r)
            for (int v = 0; v < 5; ++v) {
                double d = rg.travel_time(vehs[std::size_t(v)].anchor_a,
                                          reqs[std::size_t(r)].pickup, now);
                bool expect = std::isfinite(d) &&
                              now + std::int64_t(std::ceil(d)) <= reqs[std::size_t(r)].deadline;
                CHECK(edges.count({r, v}) == (expect ? 1u : 0u));
            }
    }

    SECTION("mid-leg vehicles interpolate between anchors") {
        std::vector<PendingRequest> reqs = {{7, 2, 0, 100000}};
        // halfway along a leg from A (d(A,C)=780) to B (d(B,C)=480)
        std::vector<AvailableVehicle> vehs = {{0, 0, 1, 0.5}};
        BipartiteGraph bg = build_request_vehicle_graph(reqs, vehs, g, 0);
        REQUIRE(bg.edges.size() == 1);
        CHECK(bg.edges[0].cost == Approx(0.5 * 780 + 0.5 * 480));
    }
}

TEST_CASE("build_relocation_graph") {
    RoadGraph g = testutil::toy_graph();

    SECTION("gap +2 yields two slots; three reachable idles match two") {
        std::vector<AvailableVehicle> idle = {{0, 1, 1, 0.0}, {1, 2, 2, 0.0}, {2, 3, 3, 0.0}};
        std::vector<RelocationDemand> demands = {{0, 0, 2.0}};  // center A, gap +2
        std::vector<VertexId> slot_center;
        BipartiteGraph bg = build_relocation_graph(idle, demands, g, 600, 0, &slot_center);
        CHECK(bg.n_right == 2);
        CHECK(slot_center == std::vector<VertexId>{0, 0});
        Matching m = max_bipartite_matching(bg);
        CHECK(m.cardinality == 2);
    }

    SECTION("no under-supplied subarea means no slots") {
        std::vector<AvailableVehicle> idle = {{0, 1, 1, 0.0}};
        std::vector<RelocationDemand> demands;
        BipartiteGraph bg = build_relocation_graph(idle, demands, g, 600, 0);
        CHECK(bg.n_right == 0);
        CHECK(bg.edges.empty());
    }

    SECTION("vehicles beyond t_r are not connected") {
        std::vector<AvailableVehicle> idle = {{0, 3, 3, 0.0}};  // D -> A = 600s
        std::vector<RelocationDemand> demands = {{0, 0, 1.0}};
        BipartiteGraph tight = build_relocation_graph(idle, demands, g, 599, 0);
        CHECK(tight.edges.empty());
        BipartiteGraph ok = build_relocation_graph(idle, demands, g, 600, 0);
        CHECK(ok.edges.size() == 1);
    }

    SECTION("slot counts equal the ceiling of positive gaps") {
        SplitMix64 rng(9);
        std::vector<RelocationDemand> demands;
        for (int j = 0; j < 4; ++j) {
            double gap = rng.unit() * 6.0 - 2.0;
            demands.push_back({j, VertexId(j % 4), gap});
        }
        std::vector<AvailableVehicle> idle = {{0, 0, 0, 0.0}};
        std::vector<VertexId> slot_center;
        BipartiteGraph bg = build_relocation_graph(idle, demands, g, 6000, 0, &slot_center);
        int expect = 0;
        for (const auto& d : demands)
            if (d.gap > 0) expect += int(std::ceil(d.gap));
        CHECK(bg.n_right == expect);
        CHECK(int(slot_center.size()) == expect);
    }
}
