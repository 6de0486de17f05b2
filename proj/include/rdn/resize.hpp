#pragma once

// Bicubic resampling compatible with MATLAB imresize(..., 'bicubic'):
// Keys cubic with a = -0.5, kernel stretched by 1/factor when shrinking (antialias),
// half-pixel aligned grid, symmetric boundary extension, height pass before width
// pass when the factors tie.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rdn/error.hpp"
#include "rdn/image.hpp"

namespace rdn {

/// Positive rational resize factor num/den.
struct Ratio {
    std::int64_t num = 1;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    /// ceil(n * num / den) in exact integer arithmetic.
    std::size_t apply_ceil(std::size_t n) const {
        const auto p = static_cast<std::int64_t>(n) * num;
        return static_cast<std::size_t>((p + den - 1) / den);
    }
};

enum class Boundary { Symmetric, Replicate };

struct ResizeOptions {
    Boundary boundary = Boundary::Symmetric;
    /// Round every pass to 8-bit levels, as imresize does on uint8 input.
    bool quantize_8bit = false;
};

inline double cubic_kernel(double x) {
    const double ax = std::abs(x);
    const double ax2 = ax * ax;
    const double ax3 = ax2 * ax;
    if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
    if (ax <= 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
    return 0.0;
}

/// Sparse resampling matrix along one axis: output i reads taps inputs starting at
/// index[i * taps] with weights weight[i * taps ...].
struct ResampleWeights {
    std::size_t in_len = 0;
    std::size_t out_len = 0;
    std::size_t taps = 0;
    std::vector<std::size_t> index;
    std::vector<double> weight;
};

inline std::size_t boundary_index(std::int64_t i, std::size_t len, Boundary b) {
    const auto n = static_cast<std::int64_t>(len);
    if (b == Boundary::Replicate) return static_cast<std::size_t>(std::clamp<std::int64_t>(i, 0, n - 1));
    // Mirror including the edge sample: ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
    const std::int64_t period = 2 * n;
    std::int64_t m = i % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < n ? m : period - 1 - m);
}

inline ResampleWeights resample_weights(std::size_t in_len, Ratio factor, Boundary b = Boundary::Symmetric) {
    if (factor.num <= 0 || factor.den <= 0) throw Error("resize factor must be positive");
    const std::size_t out_len = factor.apply_ceil(in_len);
    if (in_len == 0 || out_len == 0) throw ShapeError("resize produces an empty axis");
    const double scale = factor.value();
    const bool shrink = scale < 1.0;
    const double kernel_width = shrink ? 4.0 / scale : 4.0;
    const std::size_t taps = static_cast<std::size_t>(std::ceil(kernel_width)) + 2;

    ResampleWeights rw;
    rw.in_len = in_len;
    rw.out_len = out_len;
    rw.taps = taps;
    rw.index.resize(out_len * taps);
    rw.weight.resize(out_len * taps);
    for (std::size_t i = 0; i < out_len; ++i) {
        // 1-based output coordinate mapped into 1-based input coordinates.
        const double x = static_cast<double>(i + 1);
        const double u = x / scale + 0.5 * (1.0 - 1.0 / scale);
        const auto left = static_cast<std::int64_t>(std::floor(u - kernel_width / 2.0));
        double total = 0.0;
        for (std::size_t j = 0; j < taps; ++j) {
            const std::int64_t idx = left + static_cast<std::int64_t>(j);
            const double d = u - static_cast<double>(idx);
            const double wgt = shrink ? scale * cubic_kernel(scale * d) : cubic_kernel(d);
            rw.weight[i * taps + j] = wgt;
            rw.index[i * taps + j] = boundary_index(idx - 1, in_len, b);
            total += wgt;
        }
        for (std::size_t j = 0; j < taps; ++j) rw.weight[i * taps + j] /= total;
    }
    return rw;
}

namespace detail {

inline void quantize_in_place(Image& img) {
    for (auto& v : img.data) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
}

inline Image resize_height(const Image& in, const ResampleWeights& rw) {
    Image out(in.channels, rw.out_len, in.width);
    for (std::size_t c = 0; c < in.channels; ++c)
        for (std::size_t y = 0; y < rw.out_len; ++y)
            for (std::size_t x = 0; x < in.width; ++x) {
                double acc = 0.0;
                for (std::size_t j = 0; j < rw.taps; ++j)
                    acc += rw.weight[y * rw.taps + j] * in.at(c, rw.index[y * rw.taps + j], x);
                out.at(c, y, x) = static_cast<float>(acc);
            }
    return out;
}

inline Image resize_width(const Image& in, const ResampleWeights& rw) {
    Image out(in.channels, in.height, rw.out_len);
    for (std::size_t c = 0; c < in.channels; ++c)
        for (std::size_t y = 0; y < in.height; ++y)
            for (std::size_t x = 0; x < rw.out_len; ++x) {
                double acc = 0.0;
                for (std::size_t j = 0; j < rw.taps; ++j)
                    acc += rw.weight[x * rw.taps + j] * in.at(c, y, rw.index[x * rw.taps + j]);
                out.at(c, y, x) = static_cast<float>(acc);
            }
    return out;
}

}  // namespace detail

/// Resize both axes by factor. Output size is ceil(input * factor). Values are not clipped
/// unless quantize_8bit is set.
inline Image resize_bicubic(const Image& img, Ratio factor, const ResizeOptions& opt = {}) {
    if (img.empty()) throw ShapeError("resize_bicubic: empty image");
    const auto rh = resample_weights(img.height, factor, opt.boundary);
    const auto rw = resample_weights(img.width, factor, opt.boundary);
    Image tmp = detail::resize_height(img, rh);
    if (opt.quantize_8bit) detail::quantize_in_place(tmp);
    Image out = detail::resize_width(tmp, rw);
    if (opt.quantize_8bit) detail::quantize_in_place(out);
    return out;
}

}  // namespace rdn
