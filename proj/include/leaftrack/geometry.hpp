#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>

namespace leaftrack {

// Image coordinates: origin at the upper-left pixel, x runs down rows
// (the height direction), y runs across columns (the width direction).
struct Pixel {
    int x = 0;
    int y = 0;

    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

inline double euclid(const Pixel& a, const Pixel& b) {
    const double dx = static_cast<double>(a.x) - b.x;
    const double dy = static_cast<double>(a.y) - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

struct PixelHash {
    std::size_t operator()(const Pixel& p) const noexcept {
        return std::hash<std::uint64_t>{}(
            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.x)) << 32) |
            static_cast<std::uint32_t>(p.y));
    }
};

// Cross product of (b-a) x (c-a); positive for a counter-clockwise turn
// under the (x, y) axis order used throughout.
inline long long cross(const Pixel& a, const Pixel& b, const Pixel& c) {
    const long long abx = b.x - a.x;
    const long long aby = b.y - a.y;
    const long long acx = c.x - a.x;
    const long long acy = c.y - a.y;
    return abx * acy - aby * acx;
}

} // namespace leaftrack
