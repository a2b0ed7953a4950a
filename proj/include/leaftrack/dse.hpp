#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

#include "leaftrack/audit.hpp"
#include "leaftrack/skeleton.hpp"

namespace leaftrack {

struct DseParams {
    double weight_threshold = 0.005;
};

// Reconstruction weight of an end-branch: 1 - (a_s - a_e)/a_s = a_e/a_s,
// where a_s is the current skeleton pixel count and a_e the edge's.
inline double edge_weight(std::size_t skeleton_area, std::size_t edge_area) {
    if (skeleton_area == 0)
        throw std::invalid_argument("edge_weight: skeleton area must be positive");
    if (edge_area > skeleton_area)
        throw std::invalid_argument("edge_weight: edge area exceeds skeleton area");
    return static_cast<double>(edge_area) / static_cast<double>(skeleton_area);
}

// Discrete skeleton evolution: repeatedly removes the minimum-weight
// endpoint-to-branch edge whose weight falls below the threshold,
// recomputing the skeleton area after every removal. Branch-to-branch
// (stem) edges and bare endpoint-to-endpoint segments are never touched.
// Ties break toward the smaller edge, then the smaller tip coordinate.
inline SkeletonGraph dse_prune(const SkeletonGraph& g, const DseParams& params,
                               std::vector<AuditEntry>* audit = nullptr) {
    SkeletonGraph cur = g;
    while (true) {
        const std::size_t area = cur.total_pixels();
        if (area == 0) break;

        StemAnalysis analysis;
        bool have_analysis = false;
        try {
            analysis = identify_stem_and_leaves(cur);
            have_analysis = true;
        } catch (const std::runtime_error&) {
            // Degenerate skeleton with no endpoints; nothing is prunable.
        }

        int best_edge = -1;
        double best_weight = std::numeric_limits<double>::infinity();
        int best_len = 0;
        Pixel best_tip{};
        for (const auto& e : cur.edges) {
            if (!cur.is_branch_to_endpoint(e)) continue;
            const double w = edge_weight(area, e.chain.size());
            if (w >= params.weight_threshold) continue;
            const int tip_node = cur.nodes[e.node_a].kind == NodeKind::endpoint
                                     ? e.node_a
                                     : e.node_b;
            const Pixel tip = cur.nodes[tip_node].pos;
            const bool better =
                w < best_weight ||
                (w == best_weight &&
                 (e.length() < best_len ||
                  (e.length() == best_len && tip < best_tip)));
            if (best_edge < 0 || better) {
                best_edge = e.id;
                best_weight = w;
                best_len = e.length();
                best_tip = tip;
            }
        }
        if (best_edge < 0) break;

        if (audit) {
            const auto& e = cur.edges[best_edge];
            const int branch_node = cur.nodes[e.node_a].kind == NodeKind::branch
                                        ? e.node_a
                                        : e.node_b;
            bool was_leaf = false;
            if (have_analysis)
                for (const auto& leaf : analysis.leaves)
                    if (leaf.edge_id == best_edge) was_leaf = true;
            audit->push_back({"dse", cur.nodes[branch_node].pos, best_tip, was_leaf});
        }
        cur = erase_and_rebuild(cur, cur.edges[best_edge].chain);
    }
    return cur;
}

} // namespace leaftrack
