#include <catch2/catch_amalgamated.hpp>

#include "leaftrack/dse.hpp"

using namespace leaftrack;

namespace {

// Long horizontal line with downward spurs. A spur drawn with n pixels
// contributes a chain of n-1 (its first pixel merges into the junction
// cluster together with three line pixels).
BinaryMask line_with_spurs(int line_len,
                           const std::vector<std::pair<int, int>>& spurs,
                           int width, int height) {
    BinaryMask m(width, height);
    for (int y = 2; y < 2 + line_len; ++y) m.set(10, y);
    for (const auto& [at_y, drawn_len] : spurs)
        for (int d = 1; d <= drawn_len; ++d) m.set(10 + d, at_y);
    return m;
}

int endpoint_edge_chain(const SkeletonGraph& g, int min_len, int max_len) {
    for (const auto& e : g.edges)
        if (g.is_branch_to_endpoint(e) && e.length() >= min_len &&
            e.length() <= max_len)
            return e.length();
    return -1;
}

} // namespace

TEST_CASE("edge weight formula", "[dse]") {
    CHECK(edge_weight(1000, 4) == Catch::Approx(0.004));
    CHECK(edge_weight(1000, 6) == Catch::Approx(0.006));
    CHECK(edge_weight(500, 0) == 0.0);
    CHECK_THROWS_AS(edge_weight(0, 0), std::invalid_argument);
    CHECK_THROWS_AS(edge_weight(10, 11), std::invalid_argument);
}

TEST_CASE("evolution pruning arithmetic", "[dse]") {
    const DseParams params; // threshold 0.005

    SECTION("4-pixel spur on a 1000-pixel skeleton is removed") {
        const BinaryMask m = line_with_spurs(995, {{400, 5}}, 1000, 20);
        REQUIRE(m.area() == 1000);
        SkeletonGraph g = extract_graph(m);
        REQUIRE(endpoint_edge_chain(g, 4, 4) == 4); // weight 0.004
        std::vector<AuditEntry> audit;
        const SkeletonGraph pruned = dse_prune(g, params, &audit);
        CHECK(pruned.total_pixels() == 996);
        CHECK(endpoint_edge_chain(pruned, 1, 10) == -1);
        REQUIRE(audit.size() == 1);
        CHECK(audit[0].rule == "dse");
    }
    SECTION("6-pixel branch on a 1000-pixel skeleton is retained") {
        const BinaryMask m = line_with_spurs(993, {{400, 7}}, 1000, 20);
        REQUIRE(m.area() == 1000);
        SkeletonGraph g = extract_graph(m);
        REQUIRE(endpoint_edge_chain(g, 6, 6) == 6); // weight 0.006
        const SkeletonGraph pruned = dse_prune(g, params);
        CHECK(pruned.total_pixels() == 1000);
        CHECK(endpoint_edge_chain(pruned, 6, 6) == 6);
    }
    SECTION("areas are recomputed after every removal") {
        // Spur chains of 4 and 5 pixels on an 810-pixel skeleton: the first
        // removal (4/810 < 0.005) shrinks the area to 806, after which
        // 5/806 clears the threshold and the second spur survives.
        const BinaryMask m = line_with_spurs(799, {{300, 5}, {600, 6}}, 810, 20);
        REQUIRE(m.area() == 810);
        SkeletonGraph g = extract_graph(m);
        REQUIRE(endpoint_edge_chain(g, 4, 4) == 4);
        REQUIRE(endpoint_edge_chain(g, 5, 5) == 5);
        std::vector<AuditEntry> audit;
        const SkeletonGraph pruned = dse_prune(g, params, &audit);
        CHECK(pruned.total_pixels() == 806);
        CHECK(endpoint_edge_chain(pruned, 5, 5) == 5);
        CHECK(audit.size() == 1);
    }
}

TEST_CASE("evolution pruning invariants", "[dse]") {
    // comb with spurs of many lengths
    const BinaryMask m = line_with_spurs(
        500, {{50, 2}, {100, 3}, {150, 5}, {220, 8}, {300, 12}, {400, 30}}, 520,
        40);
    const SkeletonGraph g = extract_graph(m);

    SECTION("pruned skeleton is a subset and stays connected") {
        const SkeletonGraph pruned = dse_prune(g, DseParams{});
        for (const Pixel& p : pruned.mask.foreground()) CHECK(m.get(p.x, p.y));
        CHECK(count_components(pruned.mask) == 1);
    }
    SECTION("all surviving endpoint edges clear the threshold") {
        const DseParams params{0.02};
        const SkeletonGraph pruned = dse_prune(g, params);
        const std::size_t area = pruned.total_pixels();
        for (const auto& e : pruned.edges)
            if (pruned.is_branch_to_endpoint(e))
                CHECK(edge_weight(area, e.chain.size()) >= params.weight_threshold);
    }
    SECTION("zero threshold is the identity") {
        const SkeletonGraph pruned = dse_prune(g, DseParams{0.0});
        CHECK(pruned.mask == g.mask);
        CHECK(pruned.edges.size() == g.edges.size());
    }
    SECTION("branch-to-branch and bare segments are never candidates") {
        // Aggressive threshold: everything prunable goes, but the trunk
        // (whose remaining edges end in the two line endpoints) survives.
        const SkeletonGraph pruned = dse_prune(g, DseParams{0.9});
        CHECK(pruned.total_pixels() > 400);
        int endpoints = 0;
        for (const auto& n : pruned.nodes)
            if (n.kind == NodeKind::endpoint) ++endpoints;
        CHECK(endpoints >= 2);
    }
    SECTION("empty graph passes through") {
        const SkeletonGraph empty = extract_graph(BinaryMask(5, 5));
        CHECK(dse_prune(empty, DseParams{}).total_pixels() == 0);
    }
}
