#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "leaftrack/geometry.hpp"
#include "leaftrack/raster.hpp"

namespace leaftrack {

namespace detail {

// Packs the 8-neighborhood of (x, y) into a byte, bit k set when the
// neighbor at neighbor_offsets8()[k] is foreground (N, NE, E, SE, S, SW,
// W, NW). Out-of-bounds neighbors read as background.
inline int neighbor_config(const BinaryMask& m, int x, int y) {
    int cfg = 0;
    const auto& offs = neighbor_offsets8();
    for (int k = 0; k < 8; ++k)
        if (m.get_safe(x + offs[k].x, y + offs[k].y)) cfg |= 1 << k;
    return cfg;
}

inline int config_popcount(int cfg) { return std::popcount(static_cast<unsigned>(cfg)); }

// Number of 0->1 transitions around the circular neighbor sequence.
inline int config_transitions(int cfg) {
    int t = 0;
    for (int k = 0; k < 8; ++k) {
        const int a = (cfg >> k) & 1;
        const int b = (cfg >> ((k + 1) % 8)) & 1;
        if (a == 0 && b == 1) ++t;
    }
    return t;
}

// Deletion tables for the two-subiteration parallel thinning pass, one
// entry per 2^8 = 256 neighbor configuration (bit k set when the neighbor
// at neighbor_offsets8()[k] is foreground). These are the standard
// lookup-table formulation of the fast parallel thinning algorithm; unlike
// the raw textbook conditions it also clears the doubled staircase pixels
// on diagonal strokes.
inline const std::array<std::array<bool, 256>, 2>& fast_parallel_tables() {
    static const unsigned char kRemoveSub0[256] = {
        0, 0, 0, 1, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0, 1, 1,
        0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0,
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0,
        0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0,
        0, 1, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1,
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        0, 1, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1,
        1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        1, 1, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0,
        1, 1, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0};
    static const unsigned char kRemoveSub1[256] = {
        0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1,
        0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 1,
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        1, 0, 0, 0, 1, 0, 1, 0, 1, 0, 0, 0, 1, 0, 1, 1,
        0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0,
        1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0,
        0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1,
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1,
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        1, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0};
    static const auto tables = [] {
        std::array<std::array<bool, 256>, 2> t{};
        for (int cfg = 0; cfg < 256; ++cfg) {
            t[0][cfg] = kRemoveSub0[cfg] != 0;
            t[1][cfg] = kRemoveSub1[cfg] != 0;
        }
        return t;
    }();
    return tables;
}

// A pixel is simple when removing it preserves topology: exactly one
// 8-connected foreground component in its punctured neighborhood and
// exactly one 4-connected background component touching a 4-neighbor.
inline const std::array<bool, 256>& simple_point_table() {
    static const auto table = [] {
        std::array<bool, 256> t{};
        const auto& offs = neighbor_offsets8();
        for (int cfg = 0; cfg < 256; ++cfg) {
            auto adjacent8 = [&](int i, int j) {
                return std::abs(offs[i].x - offs[j].x) <= 1 &&
                       std::abs(offs[i].y - offs[j].y) <= 1;
            };
            auto adjacent4 = [&](int i, int j) {
                return std::abs(offs[i].x - offs[j].x) +
                           std::abs(offs[i].y - offs[j].y) ==
                       1;
            };
            auto count_components = [&](auto member, auto adjacent, auto seed) {
                int comps = 0;
                std::array<bool, 8> seen{};
                for (int i = 0; i < 8; ++i) {
                    if (!member(i) || seen[i] || !seed(i)) continue;
                    ++comps;
                    std::vector<int> stack{i};
                    seen[i] = true;
                    while (!stack.empty()) {
                        const int u = stack.back();
                        stack.pop_back();
                        for (int v = 0; v < 8; ++v)
                            if (member(v) && !seen[v] && adjacent(u, v)) {
                                seen[v] = true;
                                stack.push_back(v);
                            }
                    }
                }
                return comps;
            };
            auto fg = [&](int i) { return ((cfg >> i) & 1) != 0; };
            auto bg = [&](int i) { return ((cfg >> i) & 1) == 0; };
            auto any_seed = [](int) { return true; };
            // 4-neighbors of the center sit at even offset indices.
            auto bg4_of_center = [&](int i) { return i % 2 == 0; };

            const int fg_comps = count_components(fg, adjacent8, any_seed);
            // Background components count only if reachable from a
            // 4-neighbor of the center.
            int bg_comps = 0;
            {
                std::array<bool, 8> seen{};
                for (int i = 0; i < 8; ++i) {
                    if (!bg(i) || seen[i] || !bg4_of_center(i)) continue;
                    ++bg_comps;
                    std::vector<int> stack{i};
                    seen[i] = true;
                    while (!stack.empty()) {
                        const int u = stack.back();
                        stack.pop_back();
                        for (int v = 0; v < 8; ++v)
                            if (bg(v) && !seen[v] && adjacent4(u, v)) {
                                seen[v] = true;
                                stack.push_back(v);
                            }
                    }
                }
            }
            (void)any_seed;
            t[cfg] = fg_comps == 1 && bg_comps == 1;
        }
        return t;
    }();
    return table;
}

} // namespace detail

// Two-subiteration parallel thinning: each pass marks deletable border
// pixels against the current image and removes them simultaneously,
// repeating until a full pass changes nothing.
inline BinaryMask thin_fast_parallel(const BinaryMask& mask) {
    if (mask.empty()) return mask;
    BinaryMask img = mask;
    const auto& tables = detail::fast_parallel_tables();
    bool changed = true;
    std::vector<Pixel> to_remove;
    while (changed) {
        changed = false;
        for (int sub = 0; sub < 2; ++sub) {
            to_remove.clear();
            for (int x = 0; x < img.height(); ++x)
                for (int y = 0; y < img.width(); ++y)
                    if (img.get(x, y) &&
                        tables[sub][detail::neighbor_config(img, x, y)])
                        to_remove.push_back({x, y});
            for (const Pixel& p : to_remove) img.set(p.x, p.y, false);
            if (!to_remove.empty()) changed = true;
        }
    }
    return img;
}

// Connectivity-preserving medial-axis thinning. Each sweep collects the
// border pixels that are simple and not line ends, then rechecks each
// candidate sequentially against the mutating image before removing it.
// The recheck re-verifies simplicity only — the line-end test applies at
// collection time — so a candidate overtaken by its neighbors' removal
// still goes, and the shape peels one full layer per sweep without
// freezing boundary nubs. Every removal is of a verified simple point,
// preserving topology exactly.
inline BinaryMask thin_medial_axis(const BinaryMask& mask) {
    if (mask.empty()) return mask;
    BinaryMask img = mask;
    const auto& simple = detail::simple_point_table();
    bool changed = true;
    std::vector<Pixel> candidates;
    while (changed) {
        changed = false;
        candidates.clear();
        for (int x = 0; x < img.height(); ++x)
            for (int y = 0; y < img.width(); ++y) {
                if (!img.get(x, y)) continue;
                const bool border = !img.get_safe(x - 1, y) ||
                                    !img.get_safe(x + 1, y) ||
                                    !img.get_safe(x, y - 1) ||
                                    !img.get_safe(x, y + 1);
                if (!border) continue;
                const int cfg = detail::neighbor_config(img, x, y);
                if (detail::config_popcount(cfg) >= 2 && simple[cfg])
                    candidates.push_back({x, y});
            }
        for (const Pixel& p : candidates) {
            if (simple[detail::neighbor_config(img, p.x, p.y)]) {
                img.set(p.x, p.y, false);
                changed = true;
            }
        }
    }
    return img;
}

// Day-gated dispatch: the parallel thinning handles the first ten days
// from emergence, the medial-axis thinning everything after.
inline BinaryMask skeletonize(const BinaryMask& mask, int days_since_emergence) {
    if (days_since_emergence < 1)
        throw std::invalid_argument("skeletonize: day must be >= 1");
    return days_since_emergence <= 10 ? thin_fast_parallel(mask)
                                      : thin_medial_axis(mask);
}

enum class NodeKind { endpoint, branch };

struct SkeletonNode {
    int id = -1;
    NodeKind kind = NodeKind::endpoint;
    Pixel pos;
    // Cluster members for branch nodes; the lone pixel for isolated
    // endpoints. Endpoint pixels that terminate a chain belong to the
    // chain instead, keeping chains and clusters a partition.
    std::vector<Pixel> pixels;
};

struct SkeletonEdge {
    int id = -1;
    int node_a = -1;
    int node_b = -1;
    std::vector<Pixel> chain; // ordered from the node_a side to node_b
    int length() const { return static_cast<int>(chain.size()); }
};

struct SkeletonGraph {
    int width = 0;
    int height = 0;
    BinaryMask mask;
    std::vector<SkeletonNode> nodes;
    std::vector<SkeletonEdge> edges;

    std::size_t total_pixels() const { return mask.empty() ? 0 : mask.area(); }

    std::vector<int> edges_at(int node_id) const {
        std::vector<int> out;
        for (const auto& e : edges)
            if (e.node_a == node_id || e.node_b == node_id) out.push_back(e.id);
        return out;
    }
    int other_end(const SkeletonEdge& e, int node_id) const {
        return e.node_a == node_id ? e.node_b : e.node_a;
    }
    bool is_endpoint_node(int node_id) const {
        return nodes[node_id].kind == NodeKind::endpoint;
    }
    // True when exactly one end is an endpoint and the other a branch node.
    bool is_branch_to_endpoint(const SkeletonEdge& e) const {
        if (e.node_a < 0 || e.node_b < 0) return false;
        const NodeKind ka = nodes[e.node_a].kind;
        const NodeKind kb = nodes[e.node_b].kind;
        return (ka == NodeKind::endpoint) != (kb == NodeKind::endpoint);
    }
};

// Builds the node/edge decomposition of a thinned mask. Endpoints are
// pixels with one neighbor, branch nodes are 8-connected clusters of
// pixels with three or more neighbors, positioned at the cluster centroid
// rounded to the nearest cluster pixel. Chains are the maximal paths of
// remaining pixels; a chain includes its terminating endpoint pixels but
// not the branch clusters it attaches to.
inline SkeletonGraph extract_graph(const BinaryMask& skel) {
    SkeletonGraph g;
    g.width = skel.width() > 0 ? skel.width() : 0;
    g.height = skel.height() > 0 ? skel.height() : 0;
    g.mask = skel;
    if (skel.width() == 0 || skel.empty()) return g;

    const auto& offs = detail::neighbor_offsets8();
    auto degree = [&](int x, int y) {
        return detail::config_popcount(detail::neighbor_config(skel, x, y));
    };

    const int W = skel.width(), H = skel.height();
    std::vector<int> node_of(static_cast<std::size_t>(W) * H, -1);
    auto idx = [&](int x, int y) { return static_cast<std::size_t>(x) * W + y; };

    // Branch clusters.
    std::vector<std::vector<Pixel>> clusters;
    {
        std::vector<bool> is_branch(static_cast<std::size_t>(W) * H, false);
        for (int x = 0; x < H; ++x)
            for (int y = 0; y < W; ++y)
                if (skel.get(x, y) && degree(x, y) >= 3) is_branch[idx(x, y)] = true;
        std::vector<bool> seen(is_branch.size(), false);
        for (int x = 0; x < H; ++x)
            for (int y = 0; y < W; ++y) {
                if (!is_branch[idx(x, y)] || seen[idx(x, y)]) continue;
                std::vector<Pixel> cluster;
                std::vector<Pixel> stack{{x, y}};
                seen[idx(x, y)] = true;
                while (!stack.empty()) {
                    Pixel p = stack.back();
                    stack.pop_back();
                    cluster.push_back(p);
                    for (const auto& o : offs) {
                        const int nx = p.x + o.x, ny = p.y + o.y;
                        if (nx < 0 || nx >= H || ny < 0 || ny >= W) continue;
                        if (is_branch[idx(nx, ny)] && !seen[idx(nx, ny)]) {
                            seen[idx(nx, ny)] = true;
                            stack.push_back({nx, ny});
                        }
                    }
                }
                std::sort(cluster.begin(), cluster.end());
                clusters.push_back(std::move(cluster));
            }
    }
    for (const auto& cluster : clusters) {
        double cx = 0, cy = 0;
        for (const Pixel& p : cluster) {
            cx += p.x;
            cy += p.y;
        }
        cx /= cluster.size();
        cy /= cluster.size();
        Pixel best = cluster.front();
        double best_d = 1e30;
        for (const Pixel& p : cluster) {
            const double d = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
            if (d < best_d - 1e-12) {
                best_d = d;
                best = p;
            }
        }
        SkeletonNode node;
        node.id = static_cast<int>(g.nodes.size());
        node.kind = NodeKind::branch;
        node.pos = best;
        node.pixels = cluster;
        for (const Pixel& p : cluster) node_of[idx(p.x, p.y)] = node.id;
        g.nodes.push_back(std::move(node));
    }

    auto endpoint_node_at = [&](Pixel p) {
        if (node_of[idx(p.x, p.y)] >= 0) return node_of[idx(p.x, p.y)];
        SkeletonNode node;
        node.id = static_cast<int>(g.nodes.size());
        node.kind = NodeKind::endpoint;
        node.pos = p;
        node_of[idx(p.x, p.y)] = node.id;
        g.nodes.push_back(std::move(node));
        return node.id;
    };

    auto is_branch_pixel = [&](int x, int y) {
        const int n = node_of[idx(x, y)];
        return n >= 0 && g.nodes[n].kind == NodeKind::branch;
    };
    auto chain_member = [&](int x, int y) {
        return skel.get(x, y) && !is_branch_pixel(x, y);
    };
    auto chain_neighbors = [&](Pixel p) {
        std::vector<Pixel> out;
        for (const auto& o : offs) {
            const int nx = p.x + o.x, ny = p.y + o.y;
            if (nx < 0 || nx >= H || ny < 0 || ny >= W) continue;
            if (chain_member(nx, ny)) out.push_back({nx, ny});
        }
        return out;
    };
    auto adjacent_clusters = [&](Pixel p) {
        std::vector<int> out;
        for (const auto& o : offs) {
            const int nx = p.x + o.x, ny = p.y + o.y;
            if (nx < 0 || nx >= H || ny < 0 || ny >= W) continue;
            if (is_branch_pixel(nx, ny)) {
                const int id = node_of[idx(nx, ny)];
                if (std::find(out.begin(), out.end(), id) == out.end())
                    out.push_back(id);
            }
        }
        return out;
    };

    std::vector<bool> visited(static_cast<std::size_t>(W) * H, false);
    auto add_edge = [&](int a, int b, std::vector<Pixel> chain) {
        SkeletonEdge e;
        e.id = static_cast<int>(g.edges.size());
        e.node_a = a;
        e.node_b = b;
        e.chain = std::move(chain);
        g.edges.push_back(std::move(e));
    };

    // Walk open chains starting from terminals.
    for (int x = 0; x < H; ++x) {
        for (int y = 0; y < W; ++y) {
            if (!chain_member(x, y) || visited[idx(x, y)]) continue;
            const Pixel start{x, y};
            const auto sn = chain_neighbors(start);
            if (sn.size() > 1) continue; // interior pixel or cycle member
            const int full_degree = degree(x, y);

            if (sn.empty()) {
                visited[idx(x, y)] = true;
                const auto cls = adjacent_clusters(start);
                if (full_degree == 0) {
                    // Isolated pixel: a bare node, no chain.
                    const int n = endpoint_node_at(start);
                    g.nodes[n].pixels = {start};
                    continue;
                }
                if (cls.size() >= 2) {
                    add_edge(cls[0], cls[1], {start});
                } else if (full_degree == 1) {
                    add_edge(cls[0], endpoint_node_at(start), {start});
                } else {
                    add_edge(cls[0], cls[0], {start}); // sliver self-loop
                }
                continue;
            }

            std::vector<Pixel> chain{start};
            visited[idx(x, y)] = true;
            Pixel cur = start;
            while (true) {
                Pixel next{-1, -1};
                bool found = false;
                for (const Pixel& q : chain_neighbors(cur)) {
                    if (!visited[idx(q.x, q.y)]) {
                        next = q;
                        found = true;
                        break;
                    }
                }
                if (!found) break;
                visited[idx(next.x, next.y)] = true;
                chain.push_back(next);
                cur = next;
            }

            auto attach = [&](Pixel end) {
                const auto cls = adjacent_clusters(end);
                if (!cls.empty()) return cls[0];
                return endpoint_node_at(end);
            };
            const int a = attach(chain.front());
            const int b = attach(chain.back());
            add_edge(a, b, std::move(chain));
        }
    }

    // Remaining unvisited chain pixels form pure cycles; anchor each at its
    // scan-order-first pixel.
    for (int x = 0; x < H; ++x) {
        for (int y = 0; y < W; ++y) {
            if (!chain_member(x, y) || visited[idx(x, y)]) continue;
            const Pixel anchor{x, y};
            visited[idx(x, y)] = true;
            SkeletonNode node;
            node.id = static_cast<int>(g.nodes.size());
            node.kind = NodeKind::branch;
            node.pos = anchor;
            node.pixels = {anchor};
            node_of[idx(x, y)] = node.id;
            const int anchor_id = node.id;
            g.nodes.push_back(std::move(node));

            std::vector<Pixel> chain;
            const auto nbrs = chain_neighbors(anchor);
            Pixel cur = nbrs.front();
            while (true) {
                visited[idx(cur.x, cur.y)] = true;
                chain.push_back(cur);
                bool found = false;
                for (const Pixel& q : chain_neighbors(cur)) {
                    if (!visited[idx(q.x, q.y)]) {
                        cur = q;
                        found = true;
                        break;
                    }
                }
                if (!found) break;
            }
            add_edge(anchor_id, anchor_id, std::move(chain));
        }
    }
    return g;
}

// Rebuilds a graph after erasing the given pixels from its skeleton.
inline SkeletonGraph erase_and_rebuild(const SkeletonGraph& g,
                                       const std::vector<Pixel>& pixels) {
    BinaryMask m = g.mask;
    for (const Pixel& p : pixels) m.set(p.x, p.y, false);
    return extract_graph(m);
}

// Pixels of the whole subtree reachable from `from_node` through `edge_id`
// without passing back through the edge's other end: the chains plus every
// interior node cluster. Used to drop a spur hanging off the stem.
inline std::vector<Pixel> subtree_pixels(const SkeletonGraph& g, int from_node,
                                         int edge_id) {
    std::vector<Pixel> out;
    std::set<int> seen_edges{edge_id};
    std::set<int> seen_nodes{from_node};
    std::vector<int> frontier;
    {
        const auto& e = g.edges[edge_id];
        out.insert(out.end(), e.chain.begin(), e.chain.end());
        const int far = g.other_end(e, from_node);
        if (far != from_node && !seen_nodes.count(far)) frontier.push_back(far);
    }
    while (!frontier.empty()) {
        const int node = frontier.back();
        frontier.pop_back();
        if (seen_nodes.count(node)) continue;
        seen_nodes.insert(node);
        out.insert(out.end(), g.nodes[node].pixels.begin(),
                   g.nodes[node].pixels.end());
        if (g.nodes[node].kind == NodeKind::endpoint && g.nodes[node].pixels.empty())
            continue;
        for (int eid : g.edges_at(node)) {
            if (seen_edges.count(eid)) continue;
            seen_edges.insert(eid);
            const auto& e = g.edges[eid];
            out.insert(out.end(), e.chain.begin(), e.chain.end());
            const int far = g.other_end(e, node);
            if (!seen_nodes.count(far)) frontier.push_back(far);
        }
    }
    return out;
}

enum class LeafLabel { leaf, spur, stem, occluded };
enum class Provenance { detected, reconciled };

// A putative leaf: the edge from a branch point on the stem out to a tip.
// Occluded candidates are predictions carried over from neighboring days
// and have no chain; they may also lack positions entirely.
struct LeafCandidate {
    std::optional<Pixel> branch;
    std::optional<Pixel> tip;
    std::vector<Pixel> chain; // ordered branch side -> tip
    LeafLabel label = LeafLabel::leaf;
    Provenance provenance = Provenance::detected;
    int edge_id = -1;
    int length() const { return static_cast<int>(chain.size()); }
};

struct StemAnalysis {
    int root_node = -1;
    std::vector<int> stem_nodes; // root -> apex
    std::vector<int> stem_edges;
    std::vector<int> branch_nodes_top_down; // every branch node, ascending x
    // Branch nodes lying on the stem path (the collars), ascending x.
    // Thinning artifacts can leave small off-stem clusters along leaf
    // chains; the root-area rules count collars, not those.
    std::vector<int> stem_branch_nodes_top_down;
    std::vector<LeafCandidate> leaves;

    bool edge_on_stem(int edge_id) const {
        return std::find(stem_edges.begin(), stem_edges.end(), edge_id) !=
               stem_edges.end();
    }
    bool node_on_stem(int node_id) const {
        return std::find(stem_nodes.begin(), stem_nodes.end(), node_id) !=
               stem_nodes.end();
    }
};

// Traces the stem from the lowest skeleton point up to an endpoint,
// preferring the most vertical edge at each branch (ties to the longer
// chain), and labels every off-stem branch-to-endpoint edge as a leaf
// candidate.
inline StemAnalysis identify_stem_and_leaves(const SkeletonGraph& g) {
    StemAnalysis res;
    bool any_endpoint = false;
    for (const auto& n : g.nodes)
        if (n.kind == NodeKind::endpoint) any_endpoint = true;
    if (g.nodes.empty() || !any_endpoint)
        throw std::runtime_error("identify_stem_and_leaves: skeleton has no endpoints");

    // Lowest skeleton pixel: maximal x, then minimal y.
    Pixel lowest{-1, -1};
    for (int x = g.height - 1; x >= 0 && lowest.x < 0; --x)
        for (int y = 0; y < g.width; ++y)
            if (g.mask.get(x, y)) {
                lowest = {x, y};
                break;
            }

    // Locate the entity holding the lowest pixel.
    int root = -1;
    for (const auto& n : g.nodes)
        for (const Pixel& p : n.pixels)
            if (p == lowest) root = n.id;
    if (root < 0) {
        for (const auto& e : g.edges) {
            for (std::size_t i = 0; i < e.chain.size(); ++i) {
                if (e.chain[i] != lowest) continue;
                const std::size_t from_a = i;
                const std::size_t from_b = e.chain.size() - 1 - i;
                if (from_a < from_b) root = e.node_a;
                else if (from_b < from_a) root = e.node_b;
                else {
                    const Pixel pa = g.nodes[e.node_a].pos;
                    const Pixel pb = g.nodes[e.node_b].pos;
                    root = pa.x >= pb.x ? e.node_a : e.node_b;
                }
            }
        }
    }
    if (root < 0) root = 0;
    res.root_node = root;

    std::set<int> visited{root};
    res.stem_nodes.push_back(root);
    int cur = root;
    while (true) {
        if (g.nodes[cur].kind == NodeKind::endpoint && cur != root) break;
        int best_edge = -1;
        int best_other = -1;
        double best_vert = -1.0;
        int best_len = -1;
        for (int eid : g.edges_at(cur)) {
            const auto& e = g.edges[eid];
            const int other = g.other_end(e, cur);
            if (other == cur || visited.count(other)) continue;
            if (g.nodes[other].pos.x >= g.nodes[cur].pos.x) continue; // not upward
            const double dx = std::abs(g.nodes[other].pos.x - g.nodes[cur].pos.x);
            const double vert = dx / euclid(g.nodes[other].pos, g.nodes[cur].pos);
            if (vert > best_vert + 1e-12 ||
                (std::abs(vert - best_vert) <= 1e-12 && e.length() > best_len)) {
                best_vert = vert;
                best_len = e.length();
                best_edge = eid;
                best_other = other;
            }
        }
        if (best_edge < 0) break;
        res.stem_edges.push_back(best_edge);
        res.stem_nodes.push_back(best_other);
        visited.insert(best_other);
        cur = best_other;
    }

    for (const auto& n : g.nodes)
        if (n.kind == NodeKind::branch) res.branch_nodes_top_down.push_back(n.id);
    const auto by_position = [&](int a, int b) {
        const Pixel pa = g.nodes[a].pos, pb = g.nodes[b].pos;
        return std::tie(pa.x, pa.y, a) < std::tie(pb.x, pb.y, b);
    };
    std::sort(res.branch_nodes_top_down.begin(), res.branch_nodes_top_down.end(),
              by_position);
    for (int n : res.stem_nodes)
        if (g.nodes[n].kind == NodeKind::branch)
            res.stem_branch_nodes_top_down.push_back(n);
    std::sort(res.stem_branch_nodes_top_down.begin(),
              res.stem_branch_nodes_top_down.end(), by_position);

    for (const auto& e : g.edges) {
        if (!g.is_branch_to_endpoint(e)) continue;
        if (res.edge_on_stem(e.id)) continue;
        const bool a_is_branch = g.nodes[e.node_a].kind == NodeKind::branch;
        const int branch_node = a_is_branch ? e.node_a : e.node_b;
        const int tip_node = a_is_branch ? e.node_b : e.node_a;
        LeafCandidate cand;
        cand.branch = g.nodes[branch_node].pos;
        cand.tip = g.nodes[tip_node].pos;
        cand.chain = e.chain;
        if (!a_is_branch) std::reverse(cand.chain.begin(), cand.chain.end());
        cand.edge_id = e.id;
        res.leaves.push_back(std::move(cand));
    }
    std::sort(res.leaves.begin(), res.leaves.end(),
              [](const LeafCandidate& a, const LeafCandidate& b) {
                  return std::tie(*a.branch, *a.tip) < std::tie(*b.branch, *b.tip);
              });
    return res;
}

} // namespace leaftrack
