#pragma once

// LR synthesis: bicubic downsampling (BI), Gaussian blur + decimation (BD), and
// bicubic downsampling + additive Gaussian noise (DN).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rdn/error.hpp"
#include "rdn/image.hpp"
#include "rdn/resize.hpp"

namespace rdn {

enum class DegradationKind { BI, BD, DN };

inline std::string to_string(DegradationKind k) {
    switch (k) {
        case DegradationKind::BI: return "BI";
        case DegradationKind::BD: return "BD";
        case DegradationKind::DN: return "DN";
    }
    return "?";
}

inline DegradationKind parse_degradation_kind(const std::string& s) {
    if (s == "BI" || s == "bi") return DegradationKind::BI;
    if (s == "BD" || s == "bd") return DegradationKind::BD;
    if (s == "DN" || s == "dn") return DegradationKind::DN;
    throw ConfigError({"unknown degradation kind '" + s + "' (expected BI, BD or DN)"});
}

struct DegradationSpec {
    DegradationKind kind = DegradationKind::BI;
    int scale = 2;
    double blur_sigma = 1.6;   // BD
    double noise_sigma = 30.0; // DN, on the 0..255 scale
    std::uint64_t seed = 0;    // DN

    static DegradationSpec bi(int r) { return {DegradationKind::BI, r}; }
    static DegradationSpec bd() { return {DegradationKind::BD, 3}; }
    static DegradationSpec dn(std::uint64_t seed, double sigma = 30.0) {
        return {DegradationKind::DN, 3, 1.6, sigma, seed};
    }

    std::vector<std::string> problems() const {
        std::vector<std::string> out;
        if (kind == DegradationKind::BI && (scale < 2 || scale > 4)) {
            out.push_back("degrade.scale must be 2, 3 or 4 for BI, got " + std::to_string(scale));
        }
        if (kind != DegradationKind::BI && scale != 3) {
            out.push_back("degrade.scale must be 3 for " + to_string(kind) + ", got " + std::to_string(scale));
        }
        if (noise_sigma < 0.0) out.push_back("degrade.noise_sigma must be >= 0");
        if (blur_sigma <= 0.0) out.push_back("degrade.blur_sigma must be > 0");
        return out;
    }

    void validate() const {
        if (auto p = problems(); !p.empty()) throw ConfigError(std::move(p));
    }
};

/// Normalized 7x7 Gaussian, row-major.
inline std::array<double, 49> gaussian_kernel7(double sigma) {
    std::array<double, 49> k{};
    double total = 0.0;
    for (int y = -3; y <= 3; ++y)
        for (int x = -3; x <= 3; ++x) {
            const double v = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
            k[static_cast<std::size_t>((y + 3) * 7 + x + 3)] = v;
            total += v;
        }
    for (auto& v : k) v /= total;
    return k;
}

/// 2-D filtering with replicated borders.
inline Image blur7(const Image& img, double sigma) {
    const auto k = gaussian_kernel7(sigma);
    Image out(img.channels, img.height, img.width);
    const auto h = static_cast<std::int64_t>(img.height);
    const auto w = static_cast<std::int64_t>(img.width);
    for (std::size_t c = 0; c < img.channels; ++c)
        for (std::int64_t y = 0; y < h; ++y)
            for (std::int64_t x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int dy = -3; dy <= 3; ++dy) {
                    const auto sy = static_cast<std::size_t>(std::clamp<std::int64_t>(y + dy, 0, h - 1));
                    for (int dx = -3; dx <= 3; ++dx) {
                        const auto sx = static_cast<std::size_t>(std::clamp<std::int64_t>(x + dx, 0, w - 1));
                        acc += k[static_cast<std::size_t>((dy + 3) * 7 + dx + 3)] * img.at(c, sy, sx);
                    }
                }
                out.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = static_cast<float>(acc);
            }
    return out;
}

/// Keep every r-th pixel starting at the top-left corner.
inline Image decimate(const Image& img, std::size_t r) {
    Image out(img.channels, img.height / r, img.width / r);
    for (std::size_t c = 0; c < img.channels; ++c)
        for (std::size_t y = 0; y < out.height; ++y)
            for (std::size_t x = 0; x < out.width; ++x) out.at(c, y, x) = img.at(c, y * r, x * r);
    return out;
}

inline Image degrade_bi(const Image& hr, int r, const ResizeOptions& opt = {}) {
    const Image cropped = crop_to_multiple(hr, static_cast<std::size_t>(r));
    Image lr = resize_bicubic(cropped, Ratio{1, r}, opt);
    clip01(lr);
    return lr;
}

/// Blur then decimate, without the final clip (used to check shift behaviour).
inline Image blur_decimate(const Image& hr, double sigma, int r) {
    const Image cropped = crop_to_multiple(hr, static_cast<std::size_t>(r));
    return decimate(blur7(cropped, sigma), static_cast<std::size_t>(r));
}

inline Image degrade_bd(const Image& hr, double sigma = 1.6, int r = 3) {
    Image lr = blur_decimate(hr, sigma, r);
    clip01(lr);
    return lr;
}

inline void add_gaussian_noise(Image& img, double sigma01, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma01);
    for (auto& v : img.data) v = static_cast<float>(v + noise(rng));
}

inline Image degrade_dn(const Image& hr, std::uint64_t seed, double noise_sigma = 30.0,
                        const ResizeOptions& opt = {}) {
    Image lr = degrade_bi(hr, 3, opt);
    if (noise_sigma > 0.0) add_gaussian_noise(lr, noise_sigma / 255.0, seed);
    clip01(lr);
    return lr;
}

inline Image degrade(const Image& hr, const DegradationSpec& spec, const ResizeOptions& opt = {}) {
    spec.validate();
    switch (spec.kind) {
        case DegradationKind::BI: return degrade_bi(hr, spec.scale, opt);
        case DegradationKind::BD: return degrade_bd(hr, spec.blur_sigma, spec.scale);
        case DegradationKind::DN: return degrade_dn(hr, spec.seed, spec.noise_sigma, opt);
    }
    throw Error("unreachable degradation kind");
}

}  // namespace rdn
