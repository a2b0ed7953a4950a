#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "leaftrack/hull.hpp"

using namespace leaftrack;

namespace {

long long cross3(Pixel a, Pixel b, Pixel c) {
    return static_cast<long long>(b.x - a.x) * (c.y - a.y) -
           static_cast<long long>(b.y - a.y) * (c.x - a.x);
}

bool point_in_triangle(Pixel p, Pixel a, Pixel b, Pixel c) {
    const long long d1 = cross3(a, b, p);
    const long long d2 = cross3(b, c, p);
    const long long d3 = cross3(c, a, p);
    const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
    const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
    return !(has_neg && has_pos);
}

bool point_on_segment(Pixel p, Pixel a, Pixel b) {
    if (cross3(a, b, p) != 0) return false;
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// Brute-force hull vertex test: a point is a vertex iff it is not contained
// in the hull of the remaining points, checked directly against every
// triangle and segment of the others. O(n^4).
std::set<Pixel> hull_vertices_bruteforce(const std::vector<Pixel>& pts) {
    std::set<Pixel> verts;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool inside = false;
        for (std::size_t a = 0; a < pts.size() && !inside; ++a) {
            if (a == i) continue;
            for (std::size_t b = a + 1; b < pts.size() && !inside; ++b) {
                if (b == i) continue;
                if (point_on_segment(pts[i], pts[a], pts[b])) inside = true;
                for (std::size_t c = b + 1; c < pts.size() && !inside; ++c) {
                    if (c == i) continue;
                    if (point_in_triangle(pts[i], pts[a], pts[b], pts[c]))
                        inside = true;
                }
            }
        }
        if (!inside) verts.insert(pts[i]);
    }
    return verts;
}

BinaryMask mask_of(int w, int h, const std::vector<Pixel>& pts) {
    BinaryMask m(w, h);
    for (const Pixel& p : pts) m.set(p.x, p.y);
    return m;
}

} // namespace

TEST_CASE("convex hull basics", "[hull]") {
    SECTION("interior point excluded") {
        const BinaryMask m =
            mask_of(10, 10, {{0, 0}, {0, 4}, {4, 4}, {4, 0}, {2, 2}});
        const Polygon hull = convex_hull(m);
        REQUIRE(hull.vertices.size() == 4);
        const std::set<Pixel> got(hull.vertices.begin(), hull.vertices.end());
        CHECK(got == std::set<Pixel>{{0, 0}, {0, 4}, {4, 4}, {4, 0}});
    }
    SECTION("collinear points give a segment") {
        const BinaryMask m = mask_of(10, 10, {{1, 1}, {1, 3}, {1, 5}});
        const Polygon hull = convex_hull(m);
        REQUIRE(hull.vertices.size() == 2);
        CHECK(polygon_area(hull) == 0.0);
    }
    SECTION("single pixel degenerates to one vertex") {
        const BinaryMask m = mask_of(5, 5, {{2, 2}});
        CHECK(convex_hull(m).vertices.size() == 1);
    }
    SECTION("empty mask throws") {
        BinaryMask m(4, 4);
        CHECK_THROWS_AS(convex_hull(m), std::invalid_argument);
    }
}

TEST_CASE("convex hull equals brute force on random masks", "[hull]") {
    std::mt19937 rng(23);
    std::uniform_int_distribution<int> coord(0, 29);
    for (int trial = 0; trial < 20; ++trial) {
        std::set<Pixel> unique_pts;
        while (unique_pts.size() < 50) unique_pts.insert({coord(rng), coord(rng)});
        const std::vector<Pixel> pts(unique_pts.begin(), unique_pts.end());
        const BinaryMask m = mask_of(30, 30, pts);
        const Polygon hull = convex_hull(m);

        const std::set<Pixel> expect = hull_vertices_bruteforce(pts);
        const std::set<Pixel> got(hull.vertices.begin(), hull.vertices.end());
        CHECK(got == expect);

        // counter-clockwise order, no three consecutive collinear
        const auto& v = hull.vertices;
        REQUIRE(v.size() >= 3);
        for (std::size_t i = 0; i < v.size(); ++i)
            CHECK(cross3(v[i], v[(i + 1) % v.size()], v[(i + 2) % v.size()]) > 0);

        // hull contains every input point
        for (const Pixel& p : pts) {
            bool outside = false;
            for (std::size_t i = 0; i < v.size(); ++i)
                if (cross3(v[i], v[(i + 1) % v.size()], p) < 0) outside = true;
            CHECK_FALSE(outside);
        }

        // idempotence: hull of the hull's vertices is the hull
        const BinaryMask hm = mask_of(30, 30, hull.vertices);
        CHECK(convex_hull(hm).vertices == hull.vertices);
    }
}

TEST_CASE("polygon area", "[hull]") {
    CHECK(polygon_area({{{0, 0}, {0, 1}, {1, 1}, {1, 0}}}) == 1.0);
    CHECK(polygon_area({{{0, 0}, {5, 5}}}) == 0.0);
    CHECK(polygon_area({{{0, 0}, {0, 4}, {3, 0}}}) == 6.0);
}

TEST_CASE("view selection", "[hull]") {
    // wide blob vs narrow blob
    BinaryMask wide(30, 30), narrow(30, 30);
    for (int x = 5; x < 20; ++x)
        for (int y = 2; y < 26; ++y) wide.set(x, y);
    for (int x = 5; x < 20; ++x)
        for (int y = 10; y < 16; ++y) narrow.set(x, y);

    SECTION("larger hull wins") {
        const ViewChoice c = select_view(wide, narrow);
        CHECK(c.view == View::view0);
        CHECK(c.area0 > c.area90);
        const ViewChoice swapped = select_view(narrow, wide);
        CHECK(swapped.view == View::view90);
    }
    SECTION("tie goes to view 0") {
        const ViewChoice c = select_view(wide, wide);
        CHECK(c.view == View::view0);
        CHECK(c.area0 == c.area90);
    }
    SECTION("an empty view loses") {
        BinaryMask empty(30, 30);
        CHECK(select_view(wide, empty).view == View::view0);
        CHECK(select_view(empty, wide).view == View::view90);
        CHECK_THROWS_AS(select_view(empty, empty), std::invalid_argument);
    }
}
