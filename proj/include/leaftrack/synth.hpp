#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "leaftrack/config.hpp"
#include "leaftrack/evaluation.hpp"
#include "leaftrack/raster.hpp"

namespace leaftrack {

// Stylized maize fixture: a vertical stem on a dark chamber background
// with alternating angled leaves, a tub stripe that the second
// segmentation stage must remove, and optional single-day anomalies (one
// hidden leaf, one extra spur) for exercising temporal reconciliation.
// All geometry is deterministic given the seed.
struct SynthSpec {
    std::string plant_id = "synth-01";
    std::uint32_t seed = 1;
    int calendar_days = 27;
    int emergence_calendar_day = 2; // first day the plant is drawn
    int width = 480;
    int height = 640;
    int occlusion_day_from_emergence = 19; // -1 disables
    int spur_day_from_emergence = 22;      // -1 disables
    int hidden_leaf = 3;                   // 1-based leaf skipped that day
    int leaf_interval = 5;                 // days per additional leaf
    int leaf_cap = 5;
};

namespace synth_detail {

constexpr double kPi = 3.14159265358979323846;

inline double leaf_angle_deg(const SynthSpec& s, int k) {
    const std::uint32_t h = s.seed * 2654435761u + static_cast<std::uint32_t>(k) * 40503u;
    return 36.0 + static_cast<double>((h >> 16) % 9u); // 36..44 degrees
}

inline int stem_base_x(const SynthSpec& s) { return s.height - 18; }
inline int stem_axis_y(const SynthSpec& s) { return s.width / 2; }

inline int collar_x(const SynthSpec& s, int k) {
    return stem_base_x(s) - 35 - 28 * (k - 1);
}

inline int leaf_appear_day(const SynthSpec& s, int k) {
    return std::max(1, s.leaf_interval * (k - 1));
}

inline double leaf_length(const SynthSpec& s, int k, int day_from_emergence) {
    const int age = day_from_emergence - leaf_appear_day(s, k) + 1;
    return std::min(110.0, 20.0 + 7.0 * age);
}

// Anti-aliased stroke: coverage falls off linearly across the final pixel,
// giving the smooth boundaries the thinning algorithms expect from camera
// imagery.
inline void draw_thick_line(Raster& img, double x0, double y0, double x1,
                            double y1, double thickness, float r, float g,
                            float b) {
    const double half = thickness / 2.0;
    const int xmin = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - half - 1)));
    const int xmax = std::min(img.height() - 1,
                              static_cast<int>(std::ceil(std::max(x0, x1) + half + 1)));
    const int ymin = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - half - 1)));
    const int ymax = std::min(img.width() - 1,
                              static_cast<int>(std::ceil(std::max(y0, y1) + half + 1)));
    const double dx = x1 - x0, dy = y1 - y0;
    const double len2 = dx * dx + dy * dy;
    for (int x = xmin; x <= xmax; ++x)
        for (int y = ymin; y <= ymax; ++y) {
            double t = len2 > 0 ? ((x - x0) * dx + (y - y0) * dy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            const double px = x0 + t * dx, py = y0 + t * dy;
            const double d = std::hypot(x - px, y - py);
            const float cov =
                static_cast<float>(std::clamp(half + 0.5 - d, 0.0, 1.0));
            if (cov <= 0.0f) continue;
            img.set(x, y, 0, img.at(x, y, 0) * (1 - cov) + r * cov);
            img.set(x, y, 1, img.at(x, y, 1) * (1 - cov) + g * cov);
            img.set(x, y, 2, img.at(x, y, 2) * (1 - cov) + b * cov);
        }
}

struct LeafGeometry {
    Pixel branch;
    Pixel tip;
};

inline LeafGeometry leaf_geometry(const SynthSpec& s, int k,
                                  int day_from_emergence, View view) {
    const double angle = leaf_angle_deg(s, k) * kPi / 180.0;
    const double len = leaf_length(s, k, day_from_emergence);
    const int cx = collar_x(s, k);
    const int ay = stem_axis_y(s);
    const double side = k % 2 == 1 ? -1.0 : 1.0;
    const double yscale = view == View::view90 ? 0.55 : 1.0;
    LeafGeometry geom;
    geom.branch = {cx, ay};
    geom.tip = {static_cast<int>(std::lround(cx - len * std::cos(angle))),
                static_cast<int>(std::lround(ay + side * yscale * len * std::sin(angle)))};
    return geom;
}

} // namespace synth_detail

// Leaves present on a given day from emergence (the generator's truth).
inline int synth_true_count(const SynthSpec& s, int day_from_emergence) {
    if (day_from_emergence < 1) return 0;
    return std::min(s.leaf_cap, 1 + day_from_emergence / s.leaf_interval);
}

inline Raster synth_background(const SynthSpec& s) {
    return Raster(s.width, s.height, 3, 0.10f);
}

// Renders one calendar day of one view. Days before emergence show only
// the chamber and tub.
inline Raster synth_day_image(const SynthSpec& s, int calendar_day, View view) {
    using namespace synth_detail;
    Raster img = synth_background(s);

    // Tub stripe, absent from the background reference image. Bright
    // enough to pass the grayscale stage, too weak in excess green to
    // survive the second stage.
    for (int x = s.height - 52; x < s.height - 42; ++x)
        for (int y = 0; y < s.width; ++y) {
            img.set(x, y, 0, 0.8f);
            img.set(x, y, 1, 0.45f);
            img.set(x, y, 2, 0.2f);
        }

    const int d = calendar_day - s.emergence_calendar_day + 1;
    if (d < 1) return img;

    const float pr = 0.25f, pg = 0.75f, pb = 0.2f;
    const int count = synth_true_count(s, d);
    const int base_x = stem_base_x(s);
    const int axis_y = stem_axis_y(s);
    const double stem_len = 60.0 + 28.0 * (count - 1) + 3.0 * d;
    draw_thick_line(img, base_x, axis_y, base_x - stem_len, axis_y, 5.0, pr, pg, pb);

    for (int k = 1; k <= count; ++k) {
        if (d == s.occlusion_day_from_emergence && k == s.hidden_leaf) continue;
        const LeafGeometry geom = leaf_geometry(s, k, d, view);
        draw_thick_line(img, geom.branch.x, geom.branch.y, geom.tip.x, geom.tip.y,
                        4.0, pr, pg, pb);
    }

    if (d == s.spur_day_from_emergence) {
        const int sx = base_x - 35 - 42; // between the 2nd and 3rd collars
        const double a = 40.0 * kPi / 180.0;
        const double yscale = view == View::view90 ? 0.55 : 1.0;
        draw_thick_line(img, sx, axis_y, sx - 22.0 * std::cos(a),
                        axis_y + yscale * 22.0 * std::sin(a), 3.0, pr, pg, pb);
    }
    return img;
}

// Ground truth for the rendered plant: per-day, per-view positional leaf
// annotations. A hidden leaf is still annotated at its nominal position,
// so counts reflect the plant rather than its visibility.
inline GroundTruth synth_ground_truth(const SynthSpec& s) {
    using namespace synth_detail;
    GroundTruth gt;
    gt.plant_id = s.plant_id;
    for (int day = 1; day <= s.calendar_days; ++day) {
        const int d = day - s.emergence_calendar_day + 1;
        GroundTruthDay gd;
        for (View view : {View::view0, View::view90}) {
            GroundTruthView gv;
            if (d >= 1) {
                const int count = synth_true_count(s, d);
                for (int k = 1; k <= count; ++k) {
                    const LeafGeometry geom = leaf_geometry(s, k, d, view);
                    GroundTruthLeaf leaf;
                    leaf.branch = geom.branch;
                    leaf.tip = geom.tip;
                    gv.leaves.push_back(leaf);
                }
            } else {
                gv.count = 0;
            }
            gd.views[view == View::view90 ? 90 : 0] = std::move(gv);
        }
        gt.days[day] = std::move(gd);
    }
    return gt;
}

// Pipeline configuration matched to the fixture's scale: the root region
// and emergence area are sized for the small canvas.
inline Config synth_config() {
    Config c;
    c.emergence_min_area = 250;
    c.heuristics.upper_region_cutoff = 40;
    return c;
}

} // namespace leaftrack
