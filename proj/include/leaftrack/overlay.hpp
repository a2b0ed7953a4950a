#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "leaftrack/raster.hpp"
#include "leaftrack/timeline.hpp"

namespace leaftrack {

namespace detail {

inline void put_rgb(Raster& img, int x, int y, float r, float g, float b) {
    if (x < 0 || x >= img.height() || y < 0 || y >= img.width()) return;
    img.set(x, y, 0, r);
    img.set(x, y, 1, g);
    img.set(x, y, 2, b);
}

inline void draw_square(Raster& img, Pixel c, int half, float r, float g, float b,
                        bool dashed = false) {
    for (int dx = -half; dx <= half; ++dx)
        for (int dy = -half; dy <= half; ++dy) {
            if (std::max(std::abs(dx), std::abs(dy)) != half) continue;
            if (dashed && (dx + dy) % 2 != 0) continue;
            put_rgb(img, c.x + dx, c.y + dy, r, g, b);
        }
}

// 3x5 digit glyphs, one bit per pixel, row-major top to bottom.
inline const std::array<std::array<std::uint8_t, 5>, 10>& digit_font() {
    static const std::array<std::array<std::uint8_t, 5>, 10> font = {{
        {0b111, 0b101, 0b101, 0b101, 0b111}, // 0
        {0b010, 0b110, 0b010, 0b010, 0b111}, // 1
        {0b111, 0b001, 0b111, 0b100, 0b111}, // 2
        {0b111, 0b001, 0b111, 0b001, 0b111}, // 3
        {0b101, 0b101, 0b111, 0b001, 0b001}, // 4
        {0b111, 0b100, 0b111, 0b001, 0b111}, // 5
        {0b111, 0b100, 0b111, 0b101, 0b111}, // 6
        {0b111, 0b001, 0b010, 0b010, 0b010}, // 7
        {0b111, 0b101, 0b111, 0b101, 0b111}, // 8
        {0b111, 0b101, 0b111, 0b001, 0b111}, // 9
    }};
    return font;
}

inline void draw_number(Raster& img, Pixel at, int value, float r, float g, float b) {
    const std::string digits = std::to_string(value);
    int offset = 0;
    for (char ch : digits) {
        const auto& glyph = digit_font()[ch - '0'];
        for (int gx = 0; gx < 5; ++gx)
            for (int gy = 0; gy < 3; ++gy)
                if ((glyph[gx] >> (2 - gy)) & 1)
                    put_rgb(img, at.x + gx, at.y + offset + gy, r, g, b);
        offset += 4;
    }
}

} // namespace detail

// Draws the record's skeleton and its detected structure over a base
// image: skeleton pixels red, branch nodes blue, endpoints green, leaf
// indices white near each tip, and occluded predictions as dashed magenta
// squares.
inline Raster render_overlay(const PlantDayRecord& record, const Raster& base) {
    const SkeletonGraph& g = record.skeleton;
    if (g.width != 0 &&
        (g.width != base.width() || g.height != base.height()))
        throw std::invalid_argument("render_overlay: skeleton/base size mismatch");

    Raster out(base.width(), base.height(), 3);
    for (int x = 0; x < base.height(); ++x)
        for (int y = 0; y < base.width(); ++y) {
            if (base.channels() == 3) {
                out.set(x, y, 0, base.at(x, y, 0));
                out.set(x, y, 1, base.at(x, y, 1));
                out.set(x, y, 2, base.at(x, y, 2));
            } else {
                const float v = base.at(x, y);
                out.set(x, y, 0, v);
                out.set(x, y, 1, v);
                out.set(x, y, 2, v);
            }
        }
    if (g.width == 0 || g.mask.empty()) {
        // Occluded markers may still apply even without a skeleton.
    } else {
        for (int x = 0; x < g.height; ++x)
            for (int y = 0; y < g.width; ++y)
                if (g.mask.get(x, y)) detail::put_rgb(out, x, y, 1.0f, 0.0f, 0.0f);
        for (const auto& n : g.nodes) {
            if (n.kind == NodeKind::branch)
                detail::draw_square(out, n.pos, 2, 0.1f, 0.3f, 1.0f);
            else
                detail::draw_square(out, n.pos, 1, 0.0f, 1.0f, 0.2f);
        }
    }

    int index = 1;
    for (const auto& leaf : record.leaves) {
        if (leaf.label == LeafLabel::occluded) {
            if (leaf.tip)
                detail::draw_square(out, *leaf.tip, 4, 1.0f, 0.1f, 1.0f, true);
            if (leaf.branch)
                detail::draw_square(out, *leaf.branch, 2, 1.0f, 0.1f, 1.0f, true);
        }
        if (leaf.tip && (leaf.label == LeafLabel::leaf ||
                         leaf.label == LeafLabel::occluded))
            detail::draw_number(out, {leaf.tip->x - 8, leaf.tip->y + 3}, index,
                                1.0f, 1.0f, 1.0f);
        ++index;
    }
    return out;
}

} // namespace leaftrack
