#pragma once

#include <string>
#include <vector>

#include "leaftrack/audit.hpp"
#include "leaftrack/hull.hpp"
#include "leaftrack/skeleton.hpp"

namespace leaftrack {

// Leaf lists captured after each pipeline stage, for stage-wise evaluation.
struct PhaseLeaves {
    std::vector<LeafCandidate> post_skeleton;
    std::vector<LeafCandidate> post_dse;
    std::vector<LeafCandidate> post_heuristics;
};

struct PlantDayRecord {
    std::string plant_id;
    int day = 0;                  // calendar day index within the sequence
    int days_since_emergence = 0; // 1 on the emergence day
    View chosen_view = View::view0;
    double hull_area0 = 0.0;
    double hull_area90 = 0.0;
    SkeletonGraph skeleton;
    std::vector<LeafCandidate> leaves; // current working set
    PhaseLeaves phases;
    std::vector<AuditEntry> audit;
    bool processed = true; // false when the day's images could not be used

    int detected_count() const {
        int n = 0;
        for (const auto& l : leaves)
            if (l.label == LeafLabel::leaf || l.label == LeafLabel::occluded) ++n;
        return n;
    }
};

struct PlantTimeline {
    std::string plant_id;
    std::vector<PlantDayRecord> records; // strictly increasing day
};

} // namespace leaftrack
