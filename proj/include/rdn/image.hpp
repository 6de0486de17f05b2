#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rdn/error.hpp"
#include "rdn/tensor.hpp"

namespace rdn {

/// Planar (C, H, W) float image. Values live in [0, 1].
struct Image {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> data;

    Image() = default;
    Image(std::size_t c, std::size_t h, std::size_t w, float fill = 0.0f)
        : channels(c), height(h), width(w), data(c * h * w, fill) {}

    std::size_t plane() const noexcept { return height * width; }
    bool empty() const noexcept { return data.empty(); }

    float& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
    float at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }

    bool same_shape(const Image& o) const noexcept {
        return channels == o.channels && height == o.height && width == o.width;
    }

    std::string shape_str() const {
        return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
    }

    bool operator==(const Image&) const = default;
};

inline void clip01(Image& img) {
    for (auto& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
}

/// Round to the nearest 8-bit level (after clipping) and map back to [0, 1].
inline Image quantize8(const Image& img) {
    Image out = img;
    for (auto& v : out.data) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
    return out;
}

inline Image crop(const Image& img, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) {
    if (y0 + h > img.height || x0 + w > img.width) {
        throw ShapeError("crop window exceeds image " + img.shape_str());
    }
    Image out(img.channels, h, w);
    for (std::size_t c = 0; c < img.channels; ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y0 + y, x0 + x);
    return out;
}

/// Single channel c as a 1-channel image.
inline Image extract_channel(const Image& img, std::size_t c) {
    if (c >= img.channels) throw ShapeError("channel index out of range for " + img.shape_str());
    Image out(1, img.height, img.width);
    std::copy(img.data.begin() + static_cast<std::ptrdiff_t>(c * img.plane()),
              img.data.begin() + static_cast<std::ptrdiff_t>((c + 1) * img.plane()), out.data.begin());
    return out;
}

/// Drop bottom/right rows and columns so both dimensions are multiples of m.
inline Image crop_to_multiple(const Image& img, std::size_t m) {
    if (m == 0) throw Error("crop_to_multiple: modulus must be positive");
    return crop(img, 0, 0, img.height - img.height % m, img.width - img.width % m);
}

/// Remove a border of the given width from every side.
inline Image shave(const Image& img, std::size_t border) {
    if (2 * border >= img.height || 2 * border >= img.width) {
        throw ShapeError("shave " + std::to_string(border) + " leaves nothing of " + img.shape_str());
    }
    return crop(img, border, border, img.height - 2 * border, img.width - 2 * border);
}

inline Tensor to_tensor(const Image& img) {
    return Tensor::from_data({1, img.channels, img.height, img.width}, img.data);
}

/// Batch entry n of t as an image (values unclipped).
inline Image to_image(const Tensor& t, std::size_t n = 0) {
    const Shape4 s = t.shape();
    if (n >= s.n) throw ShapeError("to_image: batch index out of range for " + s.str());
    Image out(s.c, s.h, s.w);
    const auto src = t.data().subspan(n * s.c * s.plane(), s.c * s.plane());
    std::copy(src.begin(), src.end(), out.data.begin());
    return out;
}

/// Stack equally shaped images into one (N, C, H, W) tensor.
inline Tensor stack(const std::vector<Image>& imgs) {
    if (imgs.empty()) throw ShapeError("stack: no images");
    const Image& f = imgs.front();
    std::vector<float> data;
    data.reserve(imgs.size() * f.data.size());
    for (const auto& im : imgs) {
        if (!im.same_shape(f)) throw ShapeError("stack: " + im.shape_str() + " vs " + f.shape_str());
        data.insert(data.end(), im.data.begin(), im.data.end());
    }
    return Tensor::from_data({imgs.size(), f.channels, f.height, f.width}, std::move(data));
}

}  // namespace rdn
