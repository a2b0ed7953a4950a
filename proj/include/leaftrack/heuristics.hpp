#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "leaftrack/audit.hpp"
#include "leaftrack/skeleton.hpp"

namespace leaftrack {

enum class TubRuleDirection { as_written, as_rationalized };

struct HeuristicParams {
    int upper_region_cutoff = 1700;   // pixels from the bottom row
    double min_branch_gap = 10.0;     // pixels between the two lowest branches
    int max_root_branch_points = 4;
    int early_day_limit = 10;
    int boundary_rule_start_day = 15;
    double leaf_stem_angle_deg = 30.0;
    TubRuleDirection tub_rule_direction = TubRuleDirection::as_written;
    double triple_branch_length_ratio = 0.5;

    void validate() const {
        if (upper_region_cutoff <= 0 || min_branch_gap <= 0 ||
            max_root_branch_points <= 0 || early_day_limit <= 0 ||
            boundary_rule_start_day <= 0 || triple_branch_length_ratio <= 0)
            throw std::invalid_argument("HeuristicParams: thresholds must be positive");
        if (leaf_stem_angle_deg <= 0 || leaf_stem_angle_deg >= 90)
            throw std::invalid_argument("HeuristicParams: angle must be in (0, 90)");
    }
};

namespace detail {

inline std::optional<StemAnalysis> try_analyze(const SkeletonGraph& g) {
    try {
        return identify_stem_and_leaves(g);
    } catch (const std::runtime_error&) {
        return std::nullopt;
    }
}

// Stem branch nodes (collars) ordered bottom-up; empty when none exist.
inline std::vector<int> collars_bottom_up(const StemAnalysis& a) {
    std::vector<int> v = a.stem_branch_nodes_top_down;
    std::reverse(v.begin(), v.end());
    return v;
}

inline int edge_tip_node(const SkeletonGraph& g, const SkeletonEdge& e) {
    return g.nodes[e.node_a].kind == NodeKind::endpoint ? e.node_a : e.node_b;
}
inline int edge_branch_node(const SkeletonGraph& g, const SkeletonEdge& e) {
    return g.nodes[e.node_a].kind == NodeKind::branch ? e.node_a : e.node_b;
}

inline void log_deletion(std::vector<AuditEntry>* audit, const char* rule,
                         std::optional<Pixel> branch, std::optional<Pixel> tip,
                         bool was_leaf) {
    if (audit) audit->push_back({rule, branch, tip, was_leaf});
}

inline bool edge_is_leaf_candidate(const StemAnalysis& a, int edge_id) {
    for (const auto& leaf : a.leaves)
        if (leaf.edge_id == edge_id) return true;
    return false;
}

// Foreground pixels 8-adjacent to background (or to the image border).
inline std::vector<Pixel> mask_contour(const BinaryMask& m) {
    std::vector<Pixel> out;
    for (int x = 0; x < m.height(); ++x)
        for (int y = 0; y < m.width(); ++y) {
            if (!m.get(x, y)) continue;
            bool boundary = false;
            for (const auto& o : neighbor_offsets8())
                if (!m.get_safe(x + o.x, y + o.y)) boundary = true;
            if (boundary) out.push_back({x, y});
        }
    return out;
}

inline double angle_between_deg(double ax, double ay, double bx, double by) {
    const double na = std::hypot(ax, ay);
    const double nb = std::hypot(bx, by);
    if (na == 0.0 || nb == 0.0) return 0.0;
    const double c = std::clamp((ax * bx + ay * by) / (na * nb), -1.0, 1.0);
    return std::acos(c) * 180.0 / 3.14159265358979323846;
}

} // namespace detail

// Removes every off-stem endpoint edge one pixel long whose branch point
// sits above the root region (more than upper_region_cutoff pixels from
// the bottom row). Removal can dissolve a cluster and expose another
// one-pixel stub, so the sweep repeats until stable.
inline SkeletonGraph prune_one_pixel_spurs(const SkeletonGraph& g,
                                           const HeuristicParams& p,
                                           std::vector<AuditEntry>* audit = nullptr) {
    SkeletonGraph cur = g;
    while (true) {
        const auto analysis = detail::try_analyze(cur);
        if (!analysis) return cur;
        std::vector<Pixel> doomed;
        for (const auto& e : cur.edges) {
            if (!cur.is_branch_to_endpoint(e) || e.length() != 1) continue;
            if (analysis->edge_on_stem(e.id)) continue;
            const Pixel branch = cur.nodes[detail::edge_branch_node(cur, e)].pos;
            if (branch.x >= cur.height - p.upper_region_cutoff) continue;
            doomed.insert(doomed.end(), e.chain.begin(), e.chain.end());
            detail::log_deletion(audit, "one_pixel_spur", branch,
                                 cur.nodes[detail::edge_tip_node(cur, e)].pos,
                                 detail::edge_is_leaf_candidate(*analysis, e.id));
        }
        if (doomed.empty()) return cur;
        cur = erase_and_rebuild(cur, doomed);
    }
}

// Early-day root cleanup: collars beyond the fourth one counted from the
// top are spurious near the root, so their off-stem subtrees are removed.
inline SkeletonGraph prune_root_branch_count(const SkeletonGraph& g, int day,
                                             const HeuristicParams& p,
                                             std::vector<AuditEntry>* audit = nullptr) {
    if (day > p.early_day_limit) return g;
    const auto analysis = detail::try_analyze(g);
    if (!analysis) return g;
    const auto& ordered = analysis->stem_branch_nodes_top_down;
    if (static_cast<int>(ordered.size()) <= p.max_root_branch_points) return g;

    const int cutoff_x = g.nodes[ordered[p.max_root_branch_points - 1]].pos.x;
    std::vector<Pixel> doomed;
    for (std::size_t r = p.max_root_branch_points; r < ordered.size(); ++r) {
        const int node = ordered[r];
        if (g.nodes[node].pos.x <= cutoff_x) continue;
        for (int eid : g.edges_at(node)) {
            if (analysis->edge_on_stem(eid)) continue;
            const auto sub = subtree_pixels(g, node, eid);
            doomed.insert(doomed.end(), sub.begin(), sub.end());
            const auto& e = g.edges[eid];
            const int other = g.other_end(e, node);
            detail::log_deletion(audit, "root_branch_count", g.nodes[node].pos,
                                 g.nodes[other].pos,
                                 detail::edge_is_leaf_candidate(*analysis, eid));
        }
    }
    if (doomed.empty()) return g;
    return erase_and_rebuild(g, doomed);
}

// Early-day phyllotaxy check: while the two lowest branch points are
// closer than min_branch_gap, the lowest one cannot be a real collar and
// its off-stem subtrees are removed.
inline SkeletonGraph prune_close_branch_pair(const SkeletonGraph& g, int day,
                                             const HeuristicParams& p,
                                             std::vector<AuditEntry>* audit = nullptr) {
    if (day > p.early_day_limit) return g;
    SkeletonGraph cur = g;
    while (true) {
        const auto analysis = detail::try_analyze(cur);
        if (!analysis) return cur;
        const auto bottom_up = detail::collars_bottom_up(*analysis);
        if (bottom_up.size() < 2) return cur;
        const int lowest = bottom_up[0];
        const int second = bottom_up[1];
        if (euclid(cur.nodes[lowest].pos, cur.nodes[second].pos) >=
            p.min_branch_gap)
            return cur;

        std::vector<Pixel> doomed;
        for (int eid : cur.edges_at(lowest)) {
            if (analysis->edge_on_stem(eid)) continue;
            const auto& e = cur.edges[eid];
            if (!cur.is_branch_to_endpoint(e)) continue;
            const auto sub = subtree_pixels(cur, lowest, eid);
            doomed.insert(doomed.end(), sub.begin(), sub.end());
            detail::log_deletion(audit, "close_branch_pair", cur.nodes[lowest].pos,
                                 cur.nodes[detail::edge_tip_node(cur, e)].pos,
                                 detail::edge_is_leaf_candidate(*analysis, eid));
        }
        if (doomed.empty()) return cur;
        cur = erase_and_rebuild(cur, doomed);
    }
}

// Tub-edge test on the lowest branch point vs. the lowest endpoint. The
// two directions implement the source method's literal conditional and
// its stated rationale, which disagree; the literal form is the default.
inline SkeletonGraph prune_tub_edge(const SkeletonGraph& g,
                                    const HeuristicParams& p,
                                    std::vector<AuditEntry>* audit = nullptr) {
    SkeletonGraph cur = g;
    while (true) {
        const auto analysis = detail::try_analyze(cur);
        if (!analysis) return cur;
        if (analysis->stem_branch_nodes_top_down.empty()) return cur;
        const int lowest_branch = analysis->stem_branch_nodes_top_down.back();

        int lowest_endpoint = -1;
        for (const auto& n : cur.nodes) {
            if (n.kind != NodeKind::endpoint) continue;
            if (lowest_endpoint < 0) {
                lowest_endpoint = n.id;
                continue;
            }
            const Pixel best = cur.nodes[lowest_endpoint].pos;
            if (n.pos.x > best.x || (n.pos.x == best.x && n.pos.y < best.y))
                lowest_endpoint = n.id;
        }
        if (lowest_endpoint < 0) return cur;

        const Pixel b = cur.nodes[lowest_branch].pos;
        const Pixel e = cur.nodes[lowest_endpoint].pos;
        const int dx = std::abs(b.x - e.x);
        const int dy = std::abs(b.y - e.y);
        const bool remove = p.tub_rule_direction == TubRuleDirection::as_written
                                ? dx > dy
                                : dy > dx;
        if (!remove) return cur;

        const auto incident = cur.edges_at(lowest_endpoint);
        if (incident.empty()) return cur;
        const int eid = incident.front();
        if (analysis->edge_on_stem(eid)) return cur; // never cut the stem
        detail::log_deletion(audit, "tub_edge",
                             cur.nodes[detail::edge_branch_node(cur, cur.edges[eid])].pos,
                             e, detail::edge_is_leaf_candidate(*analysis, eid));
        cur = erase_and_rebuild(cur, cur.edges[eid].chain);
    }
}

// Late-day cleanup of root branches caused by a ragged segmentation
// boundary: the lowest leaf candidate is dropped when its tip hugs the
// mask contour inside the root region and runs nearly parallel to the
// stem; a diverging (bent, dying) leaf is kept.
inline SkeletonGraph prune_boundary_root(const SkeletonGraph& g,
                                         const BinaryMask& mask, int day,
                                         const HeuristicParams& p,
                                         std::vector<AuditEntry>* audit = nullptr) {
    if (day < p.boundary_rule_start_day) return g;
    const auto contour = detail::mask_contour(mask);
    SkeletonGraph cur = g;
    while (true) {
        const auto analysis = detail::try_analyze(cur);
        if (!analysis || analysis->leaves.empty()) return cur;

        const LeafCandidate* lowest = nullptr;
        for (const auto& leaf : analysis->leaves) {
            if (!lowest ||
                std::tie(lowest->branch->x, lowest->branch->y, lowest->tip->x) <
                    std::tie(leaf.branch->x, leaf.branch->y, leaf.tip->x))
                lowest = &leaf;
        }

        const Pixel tip = *lowest->tip;
        if (tip.x < cur.height - p.upper_region_cutoff) return cur;
        bool on_contour = false;
        for (const Pixel& c : contour)
            if (euclid(c, tip) <= 2.0) {
                on_contour = true;
                break;
            }
        if (!on_contour) return cur;

        // Local upward stem direction at the candidate's branch node.
        double ux = -1.0, uy = 0.0;
        for (std::size_t i = 0; i + 1 < analysis->stem_nodes.size(); ++i) {
            if (cur.nodes[analysis->stem_nodes[i]].pos == *lowest->branch) {
                const Pixel up = cur.nodes[analysis->stem_nodes[i + 1]].pos;
                ux = up.x - lowest->branch->x;
                uy = up.y - lowest->branch->y;
                break;
            }
        }
        const double vx = tip.x - lowest->branch->x;
        const double vy = tip.y - lowest->branch->y;
        if (detail::angle_between_deg(vx, vy, ux, uy) >= p.leaf_stem_angle_deg)
            return cur;

        detail::log_deletion(audit, "boundary_root", lowest->branch, lowest->tip, true);
        cur = erase_and_rebuild(cur, cur.edges[lowest->edge_id].chain);
    }
}

// When the lowest branch point carries three endpoint segments, one is the
// stem continuation (smallest lateral displacement); of the remaining two,
// a segment that is both markedly shorter and lower is a spur.
inline SkeletonGraph resolve_triple_branch(const SkeletonGraph& g,
                                           const HeuristicParams& p,
                                           std::vector<AuditEntry>* audit = nullptr) {
    SkeletonGraph cur = g;
    while (true) {
        const auto analysis = detail::try_analyze(cur);
        if (!analysis || analysis->stem_branch_nodes_top_down.empty()) return cur;
        const int node = analysis->stem_branch_nodes_top_down.back();

        // The stem edge leaving this node toward the apex is the ancestor
        // side and does not count as an outgoing segment.
        int up_edge = -1;
        for (std::size_t i = 0; i < analysis->stem_nodes.size(); ++i)
            if (analysis->stem_nodes[i] == node &&
                i < analysis->stem_edges.size())
                up_edge = analysis->stem_edges[i];

        std::vector<int> segs;
        for (int eid : cur.edges_at(node)) {
            const auto& e = cur.edges[eid];
            if (eid == up_edge || !cur.is_branch_to_endpoint(e)) continue;
            segs.push_back(eid);
        }
        if (segs.size() != 3) return cur;

        const Pixel npos = cur.nodes[node].pos;
        auto tip_of = [&](int eid) {
            return cur.nodes[detail::edge_tip_node(cur, cur.edges[eid])].pos;
        };
        int stem_seg = segs[0];
        for (int eid : segs)
            if (std::abs(tip_of(eid).y - npos.y) <
                std::abs(tip_of(stem_seg).y - npos.y))
                stem_seg = eid;

        std::vector<int> pair;
        for (int eid : segs)
            if (eid != stem_seg) pair.push_back(eid);
        const int len0 = cur.edges[pair[0]].length();
        const int len1 = cur.edges[pair[1]].length();
        const bool lower0 = tip_of(pair[0]).x > tip_of(pair[1]).x;
        int doomed = -1;
        if (len0 < p.triple_branch_length_ratio * len1 && lower0)
            doomed = pair[0];
        else if (len1 < p.triple_branch_length_ratio * len0 && !lower0)
            doomed = pair[1];
        if (doomed < 0) return cur;
        if (analysis->edge_on_stem(doomed)) return cur;

        detail::log_deletion(audit, "triple_branch", npos, tip_of(doomed),
                             detail::edge_is_leaf_candidate(*analysis, doomed));
        cur = erase_and_rebuild(cur, cur.edges[doomed].chain);
    }
}

// The six rules in presentation order, with their day gates.
inline SkeletonGraph apply_heuristics(const SkeletonGraph& g,
                                      const BinaryMask& mask, int day,
                                      const HeuristicParams& p,
                                      std::vector<AuditEntry>* audit = nullptr) {
    p.validate();
    SkeletonGraph cur = prune_one_pixel_spurs(g, p, audit);
    cur = prune_root_branch_count(cur, day, p, audit);
    cur = prune_close_branch_pair(cur, day, p, audit);
    cur = prune_tub_edge(cur, p, audit);
    cur = prune_boundary_root(cur, mask, day, p, audit);
    cur = resolve_triple_branch(cur, p, audit);
    return cur;
}

} // namespace leaftrack
