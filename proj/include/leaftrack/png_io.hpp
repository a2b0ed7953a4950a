#pragma once

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "leaftrack/raster.hpp"

namespace leaftrack {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace detail

// Reads an 8-bit PNG as a normalized Raster (1 or 3 channels). Palette,
// gray, and alpha variants are expanded; alpha is dropped.
inline Raster read_png(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("read_png: cannot open " + path);

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("read_png: init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("read_png: init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: failed reading " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: unsupported channel count in " + path);
    }

    std::vector<png_byte> row(static_cast<std::size_t>(w) * channels);
    Raster img(static_cast<int>(w), static_cast<int>(h), channels);
    for (png_uint_32 x = 0; x < h; ++x) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 y = 0; y < w; ++y)
            for (int c = 0; c < channels; ++c)
                img.set(static_cast<int>(x), static_cast<int>(y), c,
                        row[y * channels + c] / 255.0f);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline void write_png(const std::string& path, const Raster& img) {
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("write_png: cannot open " + path);

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("write_png: init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("write_png: init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png: failed writing " + path);
    }
    png_init_io(png, fp.get());
    const int color = img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width(), img.height(), 8, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<std::size_t>(img.width()) * img.channels());
    for (int x = 0; x < img.height(); ++x) {
        for (int y = 0; y < img.width(); ++y)
            for (int c = 0; c < img.channels(); ++c) {
                const float v = std::clamp(img.at(x, y, c), 0.0f, 1.0f);
                row[static_cast<std::size_t>(y) * img.channels() + c] =
                    static_cast<png_byte>(std::lround(v * 255.0f));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Masks round-trip as 0/255 single-channel PNGs.
inline void write_mask_png(const std::string& path, const BinaryMask& mask) {
    Raster img(mask.width(), mask.height(), 1);
    for (int x = 0; x < mask.height(); ++x)
        for (int y = 0; y < mask.width(); ++y)
            img.set(x, y, mask.get(x, y) ? 1.0f : 0.0f);
    write_png(path, img);
}

inline BinaryMask read_mask_png(const std::string& path) {
    const Raster img = read_png(path);
    if (img.channels() != 1)
        throw std::runtime_error("read_mask_png: expected grayscale " + path);
    BinaryMask mask(img.width(), img.height());
    for (int x = 0; x < img.height(); ++x)
        for (int y = 0; y < img.width(); ++y)
            if (img.at(x, y) > 0.5f) mask.set(x, y);
    return mask;
}

} // namespace leaftrack
