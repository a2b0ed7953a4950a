#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "leaftrack/assignment.hpp"
#include "leaftrack/evaluation.hpp"
#include "leaftrack/skeleton.hpp"
#include "leaftrack/timeline.hpp"

namespace leaftrack {

using json = nlohmann::json;

inline json pixel_to_json(const Pixel& p) { return json::array({p.x, p.y}); }
inline Pixel pixel_from_json(const json& j) {
    return {j.at(0).get<int>(), j.at(1).get<int>()};
}

inline json opt_pixel_to_json(const std::optional<Pixel>& p) {
    if (!p) return nullptr;
    return pixel_to_json(*p);
}
inline std::optional<Pixel> opt_pixel_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return pixel_from_json(j);
}

inline const char* to_string(LeafLabel l) {
    switch (l) {
        case LeafLabel::leaf: return "leaf";
        case LeafLabel::spur: return "spur";
        case LeafLabel::stem: return "stem";
        case LeafLabel::occluded: return "occluded";
    }
    return "leaf";
}
inline LeafLabel leaf_label_from_string(const std::string& s) {
    if (s == "spur") return LeafLabel::spur;
    if (s == "stem") return LeafLabel::stem;
    if (s == "occluded") return LeafLabel::occluded;
    return LeafLabel::leaf;
}

inline json leaf_to_json(const LeafCandidate& l) {
    json j;
    j["branch"] = opt_pixel_to_json(l.branch);
    j["tip"] = opt_pixel_to_json(l.tip);
    j["label"] = to_string(l.label);
    j["provenance"] =
        l.provenance == Provenance::reconciled ? "reconciled" : "detected";
    json chain = json::array();
    for (const Pixel& p : l.chain) chain.push_back(pixel_to_json(p));
    j["chain"] = std::move(chain);
    return j;
}
inline LeafCandidate leaf_from_json(const json& j) {
    LeafCandidate l;
    l.branch = opt_pixel_from_json(j.at("branch"));
    l.tip = opt_pixel_from_json(j.at("tip"));
    l.label = leaf_label_from_string(j.at("label").get<std::string>());
    l.provenance = j.at("provenance").get<std::string>() == "reconciled"
                       ? Provenance::reconciled
                       : Provenance::detected;
    for (const auto& c : j.at("chain")) l.chain.push_back(pixel_from_json(c));
    return l;
}

inline json graph_to_json(const SkeletonGraph& g) {
    json j;
    j["width"] = g.width;
    j["height"] = g.height;
    json nodes = json::array();
    for (const auto& n : g.nodes) {
        json jn;
        jn["id"] = n.id;
        jn["kind"] = n.kind == NodeKind::endpoint ? "endpoint" : "branch";
        jn["pos"] = pixel_to_json(n.pos);
        json px = json::array();
        for (const Pixel& p : n.pixels) px.push_back(pixel_to_json(p));
        jn["pixels"] = std::move(px);
        nodes.push_back(std::move(jn));
    }
    j["nodes"] = std::move(nodes);
    json edges = json::array();
    for (const auto& e : g.edges) {
        json je;
        je["id"] = e.id;
        je["a"] = e.node_a;
        je["b"] = e.node_b;
        json chain = json::array();
        for (const Pixel& p : e.chain) chain.push_back(pixel_to_json(p));
        je["chain"] = std::move(chain);
        edges.push_back(std::move(je));
    }
    j["edges"] = std::move(edges);
    return j;
}

inline SkeletonGraph graph_from_json(const json& j) {
    SkeletonGraph g;
    g.width = j.at("width").get<int>();
    g.height = j.at("height").get<int>();
    if (g.width > 0 && g.height > 0) g.mask = BinaryMask(g.width, g.height);
    for (const auto& jn : j.at("nodes")) {
        SkeletonNode n;
        n.id = jn.at("id").get<int>();
        n.kind = jn.at("kind").get<std::string>() == "endpoint"
                     ? NodeKind::endpoint
                     : NodeKind::branch;
        n.pos = pixel_from_json(jn.at("pos"));
        for (const auto& p : jn.at("pixels")) {
            n.pixels.push_back(pixel_from_json(p));
            g.mask.set(n.pixels.back().x, n.pixels.back().y);
        }
        g.nodes.push_back(std::move(n));
    }
    for (const auto& je : j.at("edges")) {
        SkeletonEdge e;
        e.id = je.at("id").get<int>();
        e.node_a = je.at("a").get<int>();
        e.node_b = je.at("b").get<int>();
        for (const auto& p : je.at("chain")) {
            e.chain.push_back(pixel_from_json(p));
            g.mask.set(e.chain.back().x, e.chain.back().y);
        }
        g.edges.push_back(std::move(e));
    }
    return g;
}

inline json audit_to_json(const AuditEntry& a) {
    json j;
    j["rule"] = a.rule;
    j["deleted_edge_branch"] = opt_pixel_to_json(a.branch);
    j["deleted_edge_tip"] = opt_pixel_to_json(a.tip);
    j["was_leaf_candidate"] = a.was_leaf_candidate;
    return j;
}
inline AuditEntry audit_from_json(const json& j) {
    AuditEntry a;
    a.rule = j.at("rule").get<std::string>();
    a.branch = opt_pixel_from_json(j.at("deleted_edge_branch"));
    a.tip = opt_pixel_from_json(j.at("deleted_edge_tip"));
    a.was_leaf_candidate = j.at("was_leaf_candidate").get<bool>();
    return a;
}

inline json leaves_to_json(const std::vector<LeafCandidate>& leaves) {
    json arr = json::array();
    for (const auto& l : leaves) arr.push_back(leaf_to_json(l));
    return arr;
}
inline std::vector<LeafCandidate> leaves_from_json(const json& arr) {
    std::vector<LeafCandidate> out;
    for (const auto& l : arr) out.push_back(leaf_from_json(l));
    return out;
}

inline json record_to_json(const PlantDayRecord& r) {
    json j;
    j["plant"] = r.plant_id;
    j["day"] = r.day;
    j["days_since_emergence"] = r.days_since_emergence;
    j["view"] = r.chosen_view == View::view90 ? 90 : 0;
    j["hull_area0"] = r.hull_area0;
    j["hull_area90"] = r.hull_area90;
    j["processed"] = r.processed;
    j["leaves"] = leaves_to_json(r.leaves);
    j["phases"] = {{"post_skeleton", leaves_to_json(r.phases.post_skeleton)},
                   {"post_dse", leaves_to_json(r.phases.post_dse)},
                   {"post_heuristics", leaves_to_json(r.phases.post_heuristics)}};
    json audit = json::array();
    for (const auto& a : r.audit) audit.push_back(audit_to_json(a));
    j["audit"] = std::move(audit);
    j["skeleton"] = graph_to_json(r.skeleton);
    return j;
}

inline PlantDayRecord record_from_json(const json& j) {
    PlantDayRecord r;
    r.plant_id = j.at("plant").get<std::string>();
    r.day = j.at("day").get<int>();
    r.days_since_emergence = j.at("days_since_emergence").get<int>();
    r.chosen_view = j.at("view").get<int>() == 90 ? View::view90 : View::view0;
    r.hull_area0 = j.at("hull_area0").get<double>();
    r.hull_area90 = j.at("hull_area90").get<double>();
    r.processed = j.at("processed").get<bool>();
    r.leaves = leaves_from_json(j.at("leaves"));
    r.phases.post_skeleton = leaves_from_json(j.at("phases").at("post_skeleton"));
    r.phases.post_dse = leaves_from_json(j.at("phases").at("post_dse"));
    r.phases.post_heuristics =
        leaves_from_json(j.at("phases").at("post_heuristics"));
    for (const auto& a : j.at("audit")) r.audit.push_back(audit_from_json(a));
    r.skeleton = graph_from_json(j.at("skeleton"));
    return r;
}

inline json timeline_to_json(const PlantTimeline& tl) {
    json j;
    j["plant"] = tl.plant_id;
    json recs = json::array();
    for (const auto& r : tl.records) recs.push_back(record_to_json(r));
    j["records"] = std::move(recs);
    return j;
}
inline PlantTimeline timeline_from_json(const json& j) {
    PlantTimeline tl;
    tl.plant_id = j.at("plant").get<std::string>();
    for (const auto& r : j.at("records")) tl.records.push_back(record_from_json(r));
    return tl;
}

// Ground truth file layout:
// {"plants": {"<id>": {"<day>": {"views": {"0": {"count": n} |
//                                          {"leaves": [{"tip":[x,y],
//                                                       "branch":[x,y]}]}}}}}}
inline std::map<std::string, GroundTruth> ground_truth_from_json(const json& j) {
    std::map<std::string, GroundTruth> out;
    for (const auto& [plant, days] : j.at("plants").items()) {
        GroundTruth gt;
        gt.plant_id = plant;
        for (const auto& [day, jd] : days.items()) {
            GroundTruthDay d;
            for (const auto& [view, jv] : jd.at("views").items()) {
                GroundTruthView gv;
                if (jv.contains("count")) gv.count = jv.at("count").get<int>();
                if (jv.contains("leaves"))
                    for (const auto& jl : jv.at("leaves")) {
                        GroundTruthLeaf leaf;
                        if (jl.contains("tip"))
                            leaf.tip = pixel_from_json(jl.at("tip"));
                        if (jl.contains("branch"))
                            leaf.branch = pixel_from_json(jl.at("branch"));
                        gv.leaves.push_back(leaf);
                    }
                d.views[std::stoi(view)] = std::move(gv);
            }
            gt.days[std::stoi(day)] = std::move(d);
        }
        out[plant] = std::move(gt);
    }
    return out;
}

inline json ground_truth_to_json(const std::map<std::string, GroundTruth>& truths) {
    json plants = json::object();
    for (const auto& [plant, gt] : truths) {
        json days = json::object();
        for (const auto& [day, d] : gt.days) {
            json views = json::object();
            for (const auto& [view, gv] : d.views) {
                json jv;
                if (gv.count) jv["count"] = *gv.count;
                if (!gv.leaves.empty()) {
                    json arr = json::array();
                    for (const auto& leaf : gv.leaves) {
                        json jl;
                        if (leaf.tip) jl["tip"] = pixel_to_json(*leaf.tip);
                        if (leaf.branch) jl["branch"] = pixel_to_json(*leaf.branch);
                        arr.push_back(std::move(jl));
                    }
                    jv["leaves"] = std::move(arr);
                }
                views[std::to_string(view)] = std::move(jv);
            }
            days[std::to_string(day)] = {{"views", std::move(views)}};
        }
        plants[plant] = std::move(days);
    }
    return json{{"plants", std::move(plants)}};
}

} // namespace leaftrack
