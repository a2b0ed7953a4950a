#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "leaftrack/geometry.hpp"

namespace leaftrack {

// Multi-channel image with intensities normalized to [0,1]. Row-major,
// indexed as (x, y, c) where x is the row (vertical) and y the column.
class Raster {
public:
    Raster(int width, int height, int channels, float fill = 0.0f)
        : width_(width), height_(height), channels_(channels) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("Raster: dimensions must be positive");
        if (channels != 1 && channels != 3)
            throw std::invalid_argument("Raster: channels must be 1 or 3");
        data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }

    float at(int x, int y, int c = 0) const {
        return data_[index(x, y, c)];
    }
    void set(int x, int y, int c, float v) {
        data_[index(x, y, c)] = v;
    }
    void set(int x, int y, float v) { set(x, y, 0, v); }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < height_ && y >= 0 && y < width_;
    }

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(x) * width_ + y) * channels_ + c;
    }

    int width_;
    int height_;
    int channels_;
    std::vector<float> data_;
};

// Row-major boolean occupancy grid sharing the Raster coordinate convention.
class BinaryMask {
public:
    BinaryMask() : width_(0), height_(0) {}
    BinaryMask(int width, int height)
        : width_(width), height_(height) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("BinaryMask: dimensions must be positive");
        bits_.assign(static_cast<std::size_t>(width) * height, 0);
    }

    int width() const { return width_; }
    int height() const { return height_; }

    bool get(int x, int y) const {
        return bits_[static_cast<std::size_t>(x) * width_ + y] != 0;
    }
    // Out-of-bounds reads count as background.
    bool get_safe(int x, int y) const {
        return x >= 0 && x < height_ && y >= 0 && y < width_ && get(x, y);
    }
    void set(int x, int y, bool v = true) {
        bits_[static_cast<std::size_t>(x) * width_ + y] = v ? 1 : 0;
    }

    std::size_t area() const {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
    }
    bool empty() const { return area() == 0; }

    std::vector<Pixel> foreground() const {
        std::vector<Pixel> out;
        for (int x = 0; x < height_; ++x)
            for (int y = 0; y < width_; ++y)
                if (get(x, y)) out.push_back({x, y});
        return out;
    }

    friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.bits_ == b.bits_;
    }

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> bits_;
};

struct SegmentationParams {
    float stage1_floor = 0.27f;
    float stage2_floor = 0.1f;
    float stage2_cap = 0.5f;
};

struct OtsuResult {
    double threshold = 0.0;
    bool degenerate = false;
};

inline void require_same_shape(const Raster& a, const Raster& b, const char* op) {
    if (a.width() != b.width() || a.height() != b.height() ||
        a.channels() != b.channels())
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

// Rec. 601 luminance (0.299 R + 0.587 G + 0.114 B), the fixed grayscale
// convention for this library.
inline Raster to_grayscale(const Raster& img) {
    if (img.channels() != 3)
        throw std::invalid_argument("to_grayscale: expected 3 channels");
    Raster out(img.width(), img.height(), 1);
    for (int x = 0; x < img.height(); ++x)
        for (int y = 0; y < img.width(); ++y) {
            const float v = 0.299f * img.at(x, y, 0) + 0.587f * img.at(x, y, 1) +
                            0.114f * img.at(x, y, 2);
            out.set(x, y, std::clamp(v, 0.0f, 1.0f));
        }
    return out;
}

// Per-pixel, per-channel absolute difference.
inline Raster subtract_background(const Raster& img, const Raster& bg) {
    require_same_shape(img, bg, "subtract_background");
    Raster out(img.width(), img.height(), img.channels());
    for (int x = 0; x < img.height(); ++x)
        for (int y = 0; y < img.width(); ++y)
            for (int c = 0; c < img.channels(); ++c) {
                const float v = std::fabs(img.at(x, y, c) - bg.at(x, y, c));
                out.set(x, y, c, std::clamp(v, 0.0f, 1.0f));
            }
    return out;
}

// Excess green index 2G - R - B, negatives clamped to zero.
inline Raster excess_green(const Raster& img) {
    if (img.channels() != 3)
        throw std::invalid_argument("excess_green: expected 3 channels");
    Raster out(img.width(), img.height(), 1);
    for (int x = 0; x < img.height(); ++x)
        for (int y = 0; y < img.width(); ++y) {
            const float v =
                2.0f * img.at(x, y, 1) - img.at(x, y, 0) - img.at(x, y, 2);
            out.set(x, y, std::clamp(v, 0.0f, 1.0f));
        }
    return out;
}

using Histogram256 = std::array<std::uint64_t, 256>;

// Quantizes a normalized intensity to its 8-bit bin.
inline int intensity_bin(float v) {
    const int q = static_cast<int>(std::lround(static_cast<double>(v) * 255.0));
    return std::clamp(q, 0, 255);
}

inline Histogram256 build_histogram(const std::vector<float>& values) {
    Histogram256 h{};
    for (float v : values) ++h[intensity_bin(v)];
    return h;
}

// Otsu's method over a 256-bin histogram: picks the split maximizing the
// between-class variance; the smallest maximizing bin wins ties. The
// variance is evaluated as D^2/(w0*w1) with D = s0*w1 - s1*w0, which keeps
// every intermediate an exactly-represented integer for image-sized counts.
// The returned intensity sits half a bin above the argmax bin, so that
// `value > threshold` reproduces the histogram split exactly for
// 8-bit-derived data instead of depending on rounding at the bin edge.
// A histogram with all mass in one bin is degenerate: threshold 0 plus flag.
inline OtsuResult otsu_threshold(const Histogram256& hist) {
    std::uint64_t total = 0, grand_sum = 0;
    for (int k = 0; k < 256; ++k) {
        total += hist[k];
        grand_sum += static_cast<std::uint64_t>(k) * hist[k];
    }
    if (total == 0)
        throw std::invalid_argument("otsu_threshold: empty histogram");

    double best = -1.0;
    int best_bin = -1;
    std::uint64_t w0 = 0, s0 = 0;
    for (int t = 0; t < 256; ++t) {
        w0 += hist[t];
        s0 += static_cast<std::uint64_t>(t) * hist[t];
        if (w0 == 0) continue;
        const std::uint64_t w1 = total - w0;
        if (w1 == 0) break;
        const std::uint64_t s1 = grand_sum - s0;
        const double d = static_cast<double>(s0) * static_cast<double>(w1) -
                         static_cast<double>(s1) * static_cast<double>(w0);
        const double sigma = d * d / (static_cast<double>(w0) * static_cast<double>(w1));
        if (sigma > best) {
            best = sigma;
            best_bin = t;
        }
    }
    if (best_bin < 0) return {0.0, true};
    return {(best_bin + 0.5) / 255.0, false};
}

inline OtsuResult otsu_threshold(const Raster& gray) {
    if (gray.channels() != 1)
        throw std::invalid_argument("otsu_threshold: expected 1 channel");
    Histogram256 h{};
    for (float v : gray.data()) ++h[intensity_bin(v)];
    return otsu_threshold(h);
}

inline BinaryMask threshold_mask(const Raster& gray, double t) {
    BinaryMask m(gray.width(), gray.height());
    for (int x = 0; x < gray.height(); ++x)
        for (int y = 0; y < gray.width(); ++y)
            if (gray.at(x, y) > t) m.set(x, y);
    return m;
}

namespace detail {

inline const std::array<Pixel, 8>& neighbor_offsets8() {
    static const std::array<Pixel, 8> k = {{{-1, 0},
                                            {-1, 1},
                                            {0, 1},
                                            {1, 1},
                                            {1, 0},
                                            {1, -1},
                                            {0, -1},
                                            {-1, -1}}};
    return k;
}

} // namespace detail

// Labels 8-connected foreground components; returns the component count and
// fills `labels` (same layout as the mask, 0 = background, 1.. = component).
inline int label_components(const BinaryMask& m, std::vector<int>& labels) {
    labels.assign(static_cast<std::size_t>(m.width()) * m.height(), 0);
    int next = 0;
    std::vector<Pixel> stack;
    for (int x = 0; x < m.height(); ++x) {
        for (int y = 0; y < m.width(); ++y) {
            const std::size_t idx = static_cast<std::size_t>(x) * m.width() + y;
            if (!m.get(x, y) || labels[idx] != 0) continue;
            ++next;
            labels[idx] = next;
            stack.push_back({x, y});
            while (!stack.empty()) {
                Pixel p = stack.back();
                stack.pop_back();
                for (const auto& o : detail::neighbor_offsets8()) {
                    const int nx = p.x + o.x, ny = p.y + o.y;
                    if (nx < 0 || nx >= m.height() || ny < 0 || ny >= m.width())
                        continue;
                    const std::size_t nidx =
                        static_cast<std::size_t>(nx) * m.width() + ny;
                    if (m.get(nx, ny) && labels[nidx] == 0) {
                        labels[nidx] = next;
                        stack.push_back({nx, ny});
                    }
                }
            }
        }
    }
    return next;
}

inline int count_components(const BinaryMask& m) {
    std::vector<int> labels;
    return label_components(m, labels);
}

// Keeps only the largest 8-connected component (ties: first in scan order).
inline BinaryMask largest_component(const BinaryMask& m) {
    std::vector<int> labels;
    const int n = label_components(m, labels);
    if (n <= 1) return m;
    std::vector<std::size_t> sizes(n + 1, 0);
    for (int l : labels)
        if (l > 0) ++sizes[l];
    int best = 1;
    for (int l = 2; l <= n; ++l)
        if (sizes[l] > sizes[best]) best = l;
    BinaryMask out(m.width(), m.height());
    for (int x = 0; x < m.height(); ++x)
        for (int y = 0; y < m.width(); ++y)
            if (labels[static_cast<std::size_t>(x) * m.width() + y] == best)
                out.set(x, y);
    return out;
}

// Intermediate values of segment_plant, for logging and inspection.
struct SegmentationDebug {
    OtsuResult stage1_otsu;
    double stage1_threshold = 0.0;
    OtsuResult stage2_otsu;
    double stage2_threshold = 0.0;
    BinaryMask stage1_mask;
};

// Two-stage plant segmentation: background subtraction and grayscale Otsu
// (floored at stage1_floor), then excess-green re-thresholding of the
// surviving pixels with t = max(stage2_floor, min(otsu, stage2_cap)).
// The largest 8-connected component of the result is kept.
inline BinaryMask segment_plant(const Raster& img, const Raster& bg,
                                const SegmentationParams& params,
                                SegmentationDebug* debug = nullptr) {
    require_same_shape(img, bg, "segment_plant");
    if (img.channels() != 3)
        throw std::invalid_argument("segment_plant: expected 3 channels");

    const Raster fg = subtract_background(img, bg);
    const Raster gray = to_grayscale(fg);
    const OtsuResult o1 = otsu_threshold(gray);
    const double t1 = std::max(static_cast<double>(params.stage1_floor), o1.threshold);
    BinaryMask mask1 = threshold_mask(gray, t1);

    if (debug) {
        debug->stage1_otsu = o1;
        debug->stage1_threshold = t1;
        debug->stage1_mask = mask1;
    }
    if (mask1.empty()) return mask1;

    const Raster exg = excess_green(fg);
    std::vector<float> exg_values;
    exg_values.reserve(mask1.area());
    for (int x = 0; x < mask1.height(); ++x)
        for (int y = 0; y < mask1.width(); ++y)
            if (mask1.get(x, y)) exg_values.push_back(exg.at(x, y));
    const OtsuResult o2 = otsu_threshold(build_histogram(exg_values));
    const double t2 =
        std::max(static_cast<double>(params.stage2_floor),
                 std::min(o2.threshold, static_cast<double>(params.stage2_cap)));

    BinaryMask final_mask(img.width(), img.height());
    for (int x = 0; x < mask1.height(); ++x)
        for (int y = 0; y < mask1.width(); ++y)
            if (mask1.get(x, y) && exg.at(x, y) > t2) final_mask.set(x, y);

    if (debug) {
        debug->stage2_otsu = o2;
        debug->stage2_threshold = t2;
    }
    return largest_component(final_mask);
}

} // namespace leaftrack
