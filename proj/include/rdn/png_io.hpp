#pragma once

// 8-bit PNG read/write through libpng's simplified API.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rdn/error.hpp"
#include "rdn/image.hpp"

namespace rdn {

/// Reads an 8-bit PNG. Gray inputs give 1 channel; everything else is converted to RGB
/// (alpha is composited away by libpng).
inline Image read_png(const std::filesystem::path& path) {
    png_image pi{};
    pi.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&pi, path.string().c_str())) {
        throw DataError("cannot read PNG " + path.string() + ": " + pi.message);
    }
    const bool gray = (pi.format & PNG_FORMAT_FLAG_COLOR) == 0;
    pi.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(pi));
    if (!png_image_finish_read(&pi, nullptr, buf.data(), 0, nullptr)) {
        std::string msg = pi.message;
        png_image_free(&pi);
        throw DataError("cannot decode PNG " + path.string() + ": " + msg);
    }
    const std::size_t c = gray ? 1 : 3;
    Image img(c, pi.height, pi.width);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x)
            for (std::size_t ch = 0; ch < c; ++ch)
                img.at(ch, y, x) = static_cast<float>(buf[(y * img.width + x) * c + ch]) / 255.0f;
    return img;
}

/// Writes img as 8-bit gray or RGB PNG, rounding after clipping to [0, 1].
inline void write_png(const std::filesystem::path& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3) {
        throw ShapeError("write_png: unsupported channel count " + std::to_string(img.channels));
    }
    std::vector<std::uint8_t> buf(img.data.size());
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x)
            for (std::size_t ch = 0; ch < img.channels; ++ch) {
                const float v = std::clamp(img.at(ch, y, x), 0.0f, 1.0f);
                buf[(y * img.width + x) * img.channels + ch] =
                    static_cast<std::uint8_t>(std::lround(v * 255.0f));
            }
    png_image pi{};
    pi.version = PNG_IMAGE_VERSION;
    pi.width = static_cast<png_uint_32>(img.width);
    pi.height = static_cast<png_uint_32>(img.height);
    pi.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&pi, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
        throw DataError("cannot write PNG " + path.string() + ": " + pi.message);
    }
}

}  // namespace rdn
