#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "leaftrack/raster.hpp"

using namespace leaftrack;

namespace {

// Independent Otsu oracle: exhaustively scans all 256 split points and
// compares the between-class variance D^2/(w0*w1) as exact rationals
// (128-bit cross multiplication), so no floating point is involved.
int otsu_argmax_bruteforce(const Histogram256& hist) {
    long long total = 0;
    for (auto h : hist) total += static_cast<long long>(h);
    __int128 best_num = -1;
    unsigned long long best_den = 1;
    int best_bin = -1;
    for (int t = 0; t < 256; ++t) {
        long long w0 = 0, s0 = 0, w1 = 0, s1 = 0;
        for (int k = 0; k <= t; ++k) {
            w0 += static_cast<long long>(hist[k]);
            s0 += static_cast<long long>(k) * static_cast<long long>(hist[k]);
        }
        for (int k = t + 1; k < 256; ++k) {
            w1 += static_cast<long long>(hist[k]);
            s1 += static_cast<long long>(k) * static_cast<long long>(hist[k]);
        }
        if (w0 == 0 || w1 == 0) continue;
        const __int128 d = static_cast<__int128>(s0) * w1 -
                           static_cast<__int128>(s1) * w0;
        const __int128 num = d * d;
        const unsigned long long den =
            static_cast<unsigned long long>(w0) * static_cast<unsigned long long>(w1);
        // num/den > best_num/best_den  <=>  num*best_den > best_num*den
        if (best_bin < 0 ||
            num * static_cast<__int128>(best_den) >
                best_num * static_cast<__int128>(den)) {
            best_num = num;
            best_den = den;
            best_bin = t;
        }
    }
    (void)total;
    return best_bin;
}

double oracle_threshold(const Histogram256& hist) {
    return (otsu_argmax_bruteforce(hist) + 0.5) / 255.0;
}

Raster solid_rgb(int w, int h, float r, float g, float b) {
    Raster img(w, h, 3);
    for (int x = 0; x < h; ++x)
        for (int y = 0; y < w; ++y) {
            img.set(x, y, 0, r);
            img.set(x, y, 1, g);
            img.set(x, y, 2, b);
        }
    return img;
}

} // namespace

TEST_CASE("grayscale conversion", "[raster]") {
    Raster black = solid_rgb(4, 4, 0, 0, 0);
    Raster g = to_grayscale(black);
    for (float v : g.data()) CHECK(v == 0.0f);

    Raster gray = solid_rgb(2, 2, 0.5f, 0.5f, 0.5f);
    CHECK(to_grayscale(gray).at(0, 0) == Catch::Approx(0.5));

    Raster red = solid_rgb(2, 2, 1.0f, 0.0f, 0.0f);
    CHECK(to_grayscale(red).at(1, 1) == Catch::Approx(0.299));

    Raster one_channel(2, 2, 1);
    CHECK_THROWS_AS(to_grayscale(one_channel), std::invalid_argument);
}

TEST_CASE("background subtraction", "[raster]") {
    Raster img = solid_rgb(3, 3, 0.4f, 0.6f, 0.2f);
    Raster diff = subtract_background(img, img);
    for (float v : diff.data()) CHECK(v == 0.0f);

    Raster ones = solid_rgb(3, 3, 1.0f, 1.0f, 1.0f);
    Raster quarter = solid_rgb(3, 3, 0.25f, 0.25f, 0.25f);
    for (float v : subtract_background(ones, quarter).data())
        CHECK(v == Catch::Approx(0.75));

    Raster checker(4, 4, 3), inverse(4, 4, 3);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y)
            for (int c = 0; c < 3; ++c) {
                const float v = (x + y) % 2 ? 1.0f : 0.0f;
                checker.set(x, y, c, v);
                inverse.set(x, y, c, 1.0f - v);
            }
    for (float v : subtract_background(checker, inverse).data())
        CHECK(v == 1.0f);

    Raster small = solid_rgb(2, 2, 0, 0, 0);
    CHECK_THROWS_AS(subtract_background(img, small), std::invalid_argument);
}

TEST_CASE("excess green", "[raster]") {
    Raster px = solid_rgb(1, 1, 0.2f, 0.5f, 0.1f);
    CHECK(excess_green(px).at(0, 0) == Catch::Approx(0.7));

    Raster gray = solid_rgb(1, 1, 0.3f, 0.3f, 0.3f);
    CHECK(excess_green(gray).at(0, 0) == Catch::Approx(0.0).margin(1e-7));

    Raster magenta = solid_rgb(1, 1, 0.9f, 0.1f, 0.9f);
    CHECK(excess_green(magenta).at(0, 0) == 0.0f);

    Raster one_channel(2, 2, 1);
    CHECK_THROWS_AS(excess_green(one_channel), std::invalid_argument);
}

TEST_CASE("excess green and subtraction are pixel-local", "[raster]") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    Raster a(6, 5, 3), b(6, 5, 3);
    for (auto& v : a.data()) v = uni(rng);
    for (auto& v : b.data()) v = uni(rng);

    // Swap two pixels in both inputs; outputs must swap identically.
    auto swap_px = [](Raster& img, Pixel p, Pixel q) {
        for (int c = 0; c < img.channels(); ++c) {
            const float t = img.at(p.x, p.y, c);
            img.set(p.x, p.y, c, img.at(q.x, q.y, c));
            img.set(q.x, q.y, c, t);
        }
    };
    const Pixel p{1, 2}, q{4, 0};
    Raster a2 = a, b2 = b;
    swap_px(a2, p, q);
    swap_px(b2, p, q);

    const Raster d1 = subtract_background(a, b);
    const Raster d2 = subtract_background(a2, b2);
    for (int c = 0; c < 3; ++c) {
        CHECK(d1.at(p.x, p.y, c) == d2.at(q.x, q.y, c));
        CHECK(d1.at(q.x, q.y, c) == d2.at(p.x, p.y, c));
    }
    const Raster e1 = excess_green(a);
    const Raster e2 = excess_green(a2);
    CHECK(e1.at(p.x, p.y) == e2.at(q.x, q.y));
    CHECK(e1.at(q.x, q.y) == e2.at(p.x, p.y));
}

TEST_CASE("otsu threshold against exhaustive oracle", "[raster]") {
    SECTION("degenerate constant image") {
        Raster flat(4, 4, 1, 0.4f);
        const OtsuResult r = otsu_threshold(flat);
        CHECK(r.degenerate);
        CHECK(r.threshold == 0.0);
    }
    SECTION("empty histogram") {
        Histogram256 h{};
        CHECK_THROWS_AS(otsu_threshold(h), std::invalid_argument);
    }
    SECTION("bimodal") {
        Histogram256 h{};
        h[intensity_bin(0.1f)] = 50;
        h[intensity_bin(0.9f)] = 50;
        const OtsuResult r = otsu_threshold(h);
        CHECK_FALSE(r.degenerate);
        CHECK(r.threshold == oracle_threshold(h));
    }
    SECTION("three modes") {
        Histogram256 h{};
        h[intensity_bin(0.1f)] = 40;
        h[intensity_bin(0.5f)] = 20;
        h[intensity_bin(0.9f)] = 40;
        CHECK(otsu_threshold(h).threshold == oracle_threshold(h));
    }
    SECTION("random histograms") {
        std::mt19937 rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            Histogram256 h{};
            std::uniform_int_distribution<int> bins(2, 40);
            std::uniform_int_distribution<int> bin_of(0, 255);
            std::uniform_int_distribution<int> count(1, 500);
            const int n = bins(rng);
            for (int i = 0; i < n; ++i) h[bin_of(rng)] += count(rng);
            const OtsuResult r = otsu_threshold(h);
            REQUIRE_FALSE(r.degenerate);
            CHECK(r.threshold == oracle_threshold(h));
        }
    }
}

namespace {

// Straight-line restatement of the two-stage segmentation, evaluated
// per pixel, as the oracle for segment_plant.
BinaryMask segmentation_oracle(const Raster& img, const Raster& bg,
                               const SegmentationParams& p) {
    const Raster fg = subtract_background(img, bg);
    const Raster gray = to_grayscale(fg);
    const double t1 = std::max(static_cast<double>(p.stage1_floor),
                               otsu_threshold(gray).threshold);
    BinaryMask mask1(img.width(), img.height());
    for (int x = 0; x < img.height(); ++x)
        for (int y = 0; y < img.width(); ++y)
            if (gray.at(x, y) > t1) mask1.set(x, y);
    if (mask1.empty()) return mask1;
    const Raster exg = excess_green(fg);
    std::vector<float> vals;
    for (int x = 0; x < img.height(); ++x)
        for (int y = 0; y < img.width(); ++y)
            if (mask1.get(x, y)) vals.push_back(exg.at(x, y));
    const double to = otsu_threshold(build_histogram(vals)).threshold;
    const double t2 = std::max(static_cast<double>(p.stage2_floor),
                               std::min(to, static_cast<double>(p.stage2_cap)));
    BinaryMask final_mask(img.width(), img.height());
    for (int x = 0; x < img.height(); ++x)
        for (int y = 0; y < img.width(); ++y)
            if (mask1.get(x, y) && exg.at(x, y) > t2) final_mask.set(x, y);
    return largest_component(final_mask);
}

// Green plant blob on a dark background with a brighter tub stripe that the
// first stage accepts and the second stage must remove.
struct PlantScene {
    Raster img;
    Raster bg;
};

PlantScene make_plant_scene() {
    PlantScene s{solid_rgb(40, 40, 0.1f, 0.1f, 0.1f),
                 solid_rgb(40, 40, 0.1f, 0.1f, 0.1f)};
    // plant: vertical bar with a nub, clearly green
    for (int x = 8; x < 32; ++x)
        for (int y = 18; y < 22; ++y) {
            s.img.set(x, y, 0, 0.25f);
            s.img.set(x, y, 1, 0.75f);
            s.img.set(x, y, 2, 0.2f);
        }
    // tub stripe: bright but weak in excess green, crossing the plant
    for (int x = 33; x < 36; ++x)
        for (int y = 0; y < 40; ++y) {
            s.img.set(x, y, 0, 0.8f);
            s.img.set(x, y, 1, 0.62f);
            s.img.set(x, y, 2, 0.25f);
        }
    return s;
}

} // namespace

TEST_CASE("two-stage segmentation", "[raster]") {
    const SegmentationParams params;

    SECTION("identical image and background give an empty mask") {
        Raster img = solid_rgb(10, 10, 0.3f, 0.5f, 0.2f);
        CHECK(segment_plant(img, img, params).empty());
    }
    SECTION("tub stripe passes stage 1 and is removed by stage 2") {
        const PlantScene s = make_plant_scene();
        SegmentationDebug dbg;
        const BinaryMask mask = segment_plant(s.img, s.bg, params, &dbg);
        // stripe pixels survive stage 1 ...
        CHECK(dbg.stage1_mask.get(34, 5));
        // ... but not stage 2
        CHECK_FALSE(mask.get(34, 5));
        CHECK(mask.get(20, 19));
        CHECK(mask == segmentation_oracle(s.img, s.bg, params));
    }
    SECTION("stage-1 floor binds when the Otsu value is below it") {
        // Dim scene: foreground gray values all below 0.27 except a faint
        // blob, so Otsu alone would let background through.
        Raster img = solid_rgb(20, 20, 0.12f, 0.12f, 0.12f);
        Raster bg = solid_rgb(20, 20, 0.02f, 0.02f, 0.02f);
        for (int x = 5; x < 15; ++x)
            for (int y = 8; y < 12; ++y) {
                img.set(x, y, 0, 0.2f);
                img.set(x, y, 1, 0.5f);
                img.set(x, y, 2, 0.15f);
            }
        SegmentationDebug dbg;
        const BinaryMask mask = segment_plant(img, bg, params, &dbg);
        CHECK(dbg.stage1_otsu.threshold < 0.27);
        CHECK(dbg.stage1_threshold == 0.27);
        CHECK(mask == segmentation_oracle(img, bg, params));
    }
    SECTION("output is a subset of the stage-1 mask") {
        const PlantScene s = make_plant_scene();
        SegmentationDebug dbg;
        const BinaryMask mask = segment_plant(s.img, s.bg, params, &dbg);
        for (int x = 0; x < mask.height(); ++x)
            for (int y = 0; y < mask.width(); ++y)
                if (mask.get(x, y)) CHECK(dbg.stage1_mask.get(x, y));
    }
    SECTION("raising the stage-1 floor never adds pixels") {
        const PlantScene s = make_plant_scene();
        SegmentationParams lo = params, hi = params;
        lo.stage1_floor = 0.2f;
        hi.stage1_floor = 0.45f;
        const BinaryMask m_lo = segment_plant(s.img, s.bg, lo);
        const BinaryMask m_hi = segment_plant(s.img, s.bg, hi);
        for (int x = 0; x < m_hi.height(); ++x)
            for (int y = 0; y < m_hi.width(); ++y)
                if (m_hi.get(x, y)) CHECK(m_lo.get(x, y));
    }
    SECTION("dimension mismatch") {
        Raster img = solid_rgb(10, 10, 0, 0, 0);
        Raster bg = solid_rgb(9, 10, 0, 0, 0);
        CHECK_THROWS_AS(segment_plant(img, bg, params), std::invalid_argument);
    }
}

TEST_CASE("largest component keeps the biggest blob", "[raster]") {
    BinaryMask m(20, 10);
    for (int y = 1; y < 8; ++y) m.set(2, y);  // 7 px
    for (int y = 12; y < 15; ++y) m.set(5, y); // 3 px
    const BinaryMask kept = largest_component(m);
    CHECK(kept.area() == 7);
    CHECK(kept.get(2, 3));
    CHECK_FALSE(kept.get(5, 13));
    CHECK(count_components(m) == 2);
    CHECK(count_components(kept) == 1);
}
