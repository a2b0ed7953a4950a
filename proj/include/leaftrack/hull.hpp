#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "leaftrack/geometry.hpp"
#include "leaftrack/raster.hpp"

namespace leaftrack {

// Convex polygon over pixel centers, vertices in counter-clockwise order
// (positive shoelace sum under the (x, y) axis convention). Degenerate
// inputs yield one- or two-vertex polygons.
struct Polygon {
    std::vector<Pixel> vertices;
};

enum class View { view0 = 0, view90 = 90 };

struct ViewChoice {
    View view = View::view0;
    double area0 = 0.0;
    double area90 = 0.0;
};

// Monotone-chain convex hull of the foreground pixel centers. Collinear
// points interior to hull edges are dropped, so no three consecutive
// vertices are collinear.
inline Polygon convex_hull(const BinaryMask& mask) {
    std::vector<Pixel> pts = mask.foreground();
    if (pts.empty())
        throw std::invalid_argument("convex_hull: empty mask");
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    const std::size_t n = pts.size();
    if (n <= 2) return {pts};

    std::vector<Pixel> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() == 2 && hull[0] == hull[1]) hull.resize(1);
    return {hull};
}

// Shoelace area; polygons with fewer than 3 vertices have zero area.
inline double polygon_area(const Polygon& p) {
    const std::size_t n = p.vertices.size();
    if (n < 3) return 0.0;
    long long twice = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Pixel& a = p.vertices[i];
        const Pixel& b = p.vertices[(i + 1) % n];
        twice += static_cast<long long>(a.x) * b.y -
                 static_cast<long long>(b.x) * a.y;
    }
    return std::abs(static_cast<double>(twice)) / 2.0;
}

// Chooses the side view whose silhouette convex hull has the larger area.
// Ties go to view 0; if exactly one view is empty the other is chosen.
inline ViewChoice select_view(const BinaryMask& mask0, const BinaryMask& mask90) {
    const bool e0 = mask0.empty();
    const bool e90 = mask90.empty();
    if (e0 && e90)
        throw std::invalid_argument("select_view: both views empty");

    ViewChoice choice;
    choice.area0 = e0 ? 0.0 : polygon_area(convex_hull(mask0));
    choice.area90 = e90 ? 0.0 : polygon_area(convex_hull(mask90));
    if (e0) {
        choice.view = View::view90;
    } else if (e90) {
        choice.view = View::view0;
    } else {
        choice.view = choice.area90 > choice.area0 ? View::view90 : View::view0;
    }
    return choice;
}

} // namespace leaftrack
