#pragma once

#include <optional>
#include <string>

#include "leaftrack/geometry.hpp"

namespace leaftrack {

// One pruning or reconciliation event, for the per-run audit trail.
struct AuditEntry {
    std::string rule;
    std::optional<Pixel> branch; // branch point of the affected edge
    std::optional<Pixel> tip;    // tip of the affected edge
    bool was_leaf_candidate = false;
};

} // namespace leaftrack
