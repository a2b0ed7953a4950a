#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "leaftrack/assignment.hpp"
#include "leaftrack/dse.hpp"
#include "leaftrack/evaluation.hpp"
#include "leaftrack/heuristics.hpp"
#include "leaftrack/raster.hpp"

namespace leaftrack {

// All tunables of the pipeline in one versioned bundle. Defaults are the
// values used throughout the library's own test fixtures.
struct Config {
    SegmentationParams segmentation;
    int emergence_min_area = 500;
    DseParams dse;
    HeuristicParams heuristics;
    ReconcileParams reconcile;
    EvaluationParams evaluation;

    void validate() const {
        heuristics.validate();
        reconcile.validate();
        if (emergence_min_area <= 0)
            throw std::invalid_argument("Config: emergence_min_area must be positive");
    }
};

inline nlohmann::json config_to_json(const Config& c) {
    nlohmann::json j;
    j["segmentation"] = {{"stage1_floor", c.segmentation.stage1_floor},
                         {"stage2_floor", c.segmentation.stage2_floor},
                         {"stage2_cap", c.segmentation.stage2_cap}};
    j["emergence"] = {{"min_area", c.emergence_min_area}};
    j["dse"] = {{"weight_threshold", c.dse.weight_threshold}};
    j["heuristics"] = {
        {"upper_region_cutoff", c.heuristics.upper_region_cutoff},
        {"min_branch_gap", c.heuristics.min_branch_gap},
        {"max_root_branch_points", c.heuristics.max_root_branch_points},
        {"early_day_limit", c.heuristics.early_day_limit},
        {"boundary_rule_start_day", c.heuristics.boundary_rule_start_day},
        {"leaf_stem_angle_deg", c.heuristics.leaf_stem_angle_deg},
        {"tub_rule_direction",
         c.heuristics.tub_rule_direction == TubRuleDirection::as_written
             ? "as_written"
             : "as_rationalized"},
        {"triple_branch_length_ratio", c.heuristics.triple_branch_length_ratio}};
    j["reconcile"] = {{"window", c.reconcile.window},
                      {"match_accept_threshold", c.reconcile.match_accept_threshold},
                      {"leaf_rate_min", c.reconcile.leaf_rate_min},
                      {"leaf_rate_max", c.reconcile.leaf_rate_max},
                      {"tenth_leaf_cap", c.reconcile.tenth_leaf_cap},
                      {"consensus_quorum", c.reconcile.consensus_quorum}};
    j["evaluation"] = {
        {"positional_tolerance", c.evaluation.positional_tolerance},
        {"use_selected_view_counts", c.evaluation.use_selected_view_counts}};
    return j;
}

inline Config config_from_json(const nlohmann::json& j) {
    Config c;
    if (j.contains("segmentation")) {
        const auto& s = j.at("segmentation");
        if (s.contains("stage1_floor")) c.segmentation.stage1_floor = s.at("stage1_floor");
        if (s.contains("stage2_floor")) c.segmentation.stage2_floor = s.at("stage2_floor");
        if (s.contains("stage2_cap")) c.segmentation.stage2_cap = s.at("stage2_cap");
    }
    if (j.contains("emergence") && j.at("emergence").contains("min_area"))
        c.emergence_min_area = j.at("emergence").at("min_area");
    if (j.contains("dse") && j.at("dse").contains("weight_threshold"))
        c.dse.weight_threshold = j.at("dse").at("weight_threshold");
    if (j.contains("heuristics")) {
        const auto& h = j.at("heuristics");
        auto& p = c.heuristics;
        if (h.contains("upper_region_cutoff")) p.upper_region_cutoff = h.at("upper_region_cutoff");
        if (h.contains("min_branch_gap")) p.min_branch_gap = h.at("min_branch_gap");
        if (h.contains("max_root_branch_points"))
            p.max_root_branch_points = h.at("max_root_branch_points");
        if (h.contains("early_day_limit")) p.early_day_limit = h.at("early_day_limit");
        if (h.contains("boundary_rule_start_day"))
            p.boundary_rule_start_day = h.at("boundary_rule_start_day");
        if (h.contains("leaf_stem_angle_deg"))
            p.leaf_stem_angle_deg = h.at("leaf_stem_angle_deg");
        if (h.contains("tub_rule_direction"))
            p.tub_rule_direction =
                h.at("tub_rule_direction").get<std::string>() == "as_rationalized"
                    ? TubRuleDirection::as_rationalized
                    : TubRuleDirection::as_written;
        if (h.contains("triple_branch_length_ratio"))
            p.triple_branch_length_ratio = h.at("triple_branch_length_ratio");
    }
    if (j.contains("reconcile")) {
        const auto& r = j.at("reconcile");
        auto& p = c.reconcile;
        if (r.contains("window")) p.window = r.at("window");
        if (r.contains("match_accept_threshold"))
            p.match_accept_threshold = r.at("match_accept_threshold");
        if (r.contains("leaf_rate_min")) p.leaf_rate_min = r.at("leaf_rate_min");
        if (r.contains("leaf_rate_max")) p.leaf_rate_max = r.at("leaf_rate_max");
        if (r.contains("tenth_leaf_cap")) p.tenth_leaf_cap = r.at("tenth_leaf_cap");
        if (r.contains("consensus_quorum")) p.consensus_quorum = r.at("consensus_quorum");
    }
    if (j.contains("evaluation")) {
        const auto& e = j.at("evaluation");
        if (e.contains("positional_tolerance"))
            c.evaluation.positional_tolerance = e.at("positional_tolerance");
        if (e.contains("use_selected_view_counts"))
            c.evaluation.use_selected_view_counts = e.at("use_selected_view_counts");
    }
    c.validate();
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

// FNV-1a over the canonical JSON dump; embedded in run outputs so results
// can be traced back to the exact parameter set.
inline std::string config_hash(const Config& c) {
    const std::string dump = config_to_json(c).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

} // namespace leaftrack
