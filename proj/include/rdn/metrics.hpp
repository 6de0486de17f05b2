#pragma once

// PSNR / SSIM on the luminance channel, with border shaving and dataset aggregation.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rdn/error.hpp"
#include "rdn/image.hpp"
#include "rdn/png_io.hpp"

namespace rdn {

inline constexpr double kPsnrCap = 99.0;

/// BT.601 studio-swing luma of a unit-range RGB image; 1-channel input passes through.
inline Image rgb_to_y(const Image& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3) {
        throw ShapeError("rgb_to_y: expected 3 channels, got " + std::to_string(img.channels));
    }
    Image y(1, img.height, img.width);
    for (std::size_t i = 0; i < img.plane(); ++i) {
        const double r = img.data[i];
        const double g = img.data[img.plane() + i];
        const double b = img.data[2 * img.plane() + i];
        y.data[i] = static_cast<float>((16.0 + 65.481 * r + 128.553 * g + 24.966 * b) / 255.0);
    }
    return y;
}

inline double mse(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw ShapeError("metric inputs differ: " + a.shape_str() + " vs " + b.shape_str());
    if (a.empty()) throw ShapeError("metric on empty image");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

/// 10 log10(peak^2 / MSE), capped at 99 dB for identical inputs.
inline double psnr(const Image& a, const Image& b, double peak = 1.0) {
    const double m = mse(a, b);
    if (m <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / m));
}

namespace detail {

inline std::array<double, 121> ssim_window() {
    std::array<double, 121> w{};
    double total = 0.0;
    for (int y = -5; y <= 5; ++y)
        for (int x = -5; x <= 5; ++x) {
            const double v = std::exp(-(x * x + y * y) / (2.0 * 1.5 * 1.5));
            w[static_cast<std::size_t>((y + 5) * 11 + x + 5)] = v;
            total += v;
        }
    for (auto& v : w) v /= total;
    return w;
}

}  // namespace detail

/// Mean SSIM over every fully covered 11x11 Gaussian (sigma 1.5) window, single channel.
inline double ssim(const Image& a, const Image& b, double peak = 1.0) {
    if (!a.same_shape(b)) throw ShapeError("ssim inputs differ: " + a.shape_str() + " vs " + b.shape_str());
    if (a.channels != 1) throw ShapeError("ssim expects a single channel, got " + std::to_string(a.channels));
    if (a.height < 11 || a.width < 11) throw ShapeError("ssim: image " + a.shape_str() + " smaller than 11x11 window");
    const auto win = detail::ssim_window();
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t y = 0; y + 11 <= a.height; ++y) {
        for (std::size_t x = 0; x + 11 <= a.width; ++x) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (std::size_t dy = 0; dy < 11; ++dy)
                for (std::size_t dx = 0; dx < 11; ++dx) {
                    const double wv = win[dy * 11 + dx];
                    const double va = a.at(0, y + dy, x + dx);
                    const double vb = b.at(0, y + dy, x + dx);
                    ma += wv * va;
                    mb += wv * vb;
                    saa += wv * va * va;
                    sbb += wv * vb * vb;
                    sab += wv * va * vb;
                }
            const double va = saa - ma * ma;
            const double vb = sbb - mb * mb;
            const double cov = sab - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

struct EvalProtocol {
    std::size_t shave = 0;
    bool y_only = true;
};

struct ImageScore {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
};

/// Both images are rounded to 8-bit levels first, as if read back from files.
inline ImageScore evaluate_pair(const std::string& name, const Image& sr, const Image& hr, const EvalProtocol& p) {
    if (!sr.same_shape(hr)) {
        throw ShapeError("evaluate " + name + ": SR " + sr.shape_str() + " vs HR " + hr.shape_str());
    }
    Image a = quantize8(sr);
    Image b = quantize8(hr);
    if (p.y_only) {
        a = rgb_to_y(a);
        b = rgb_to_y(b);
    }
    if (p.shave > 0) {
        a = shave(a, p.shave);
        b = shave(b, p.shave);
    }
    ImageScore s{name, psnr(a, b), 0.0};
    if (a.channels == 1) {
        s.ssim = ssim(a, b);
    } else {
        double acc = 0.0;
        for (std::size_t c = 0; c < a.channels; ++c) {
            acc += ssim(extract_channel(a, c), extract_channel(b, c));
        }
        s.ssim = acc / static_cast<double>(a.channels);
    }
    return s;
}

struct EvalReport {
    EvalProtocol protocol;
    std::vector<ImageScore> images;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double seconds = 0.0;

    void finalize() {
        mean_psnr = mean_ssim = 0.0;
        for (const auto& s : images) {
            mean_psnr += s.psnr;
            mean_ssim += s.ssim;
        }
        if (!images.empty()) {
            mean_psnr /= static_cast<double>(images.size());
            mean_ssim /= static_cast<double>(images.size());
        }
    }

    /// Human-readable table.
    void write_text(std::ostream& os) const {
        os << std::fixed;
        os << std::left << std::setw(24) << "image" << std::right << std::setw(10) << "PSNR" << std::setw(10) << "SSIM"
           << "\n";
        for (const auto& s : images) {
            os << std::left << std::setw(24) << s.name << std::right << std::setprecision(2) << std::setw(10) << s.psnr
               << std::setprecision(4) << std::setw(10) << s.ssim << "\n";
        }
        os << std::left << std::setw(24) << "mean" << std::right << std::setprecision(2) << std::setw(10) << mean_psnr
           << std::setprecision(4) << std::setw(10) << mean_ssim << "\n";
        os << std::defaultfloat;
    }

    /// One key=value record per image plus a trailing `mean` record.
    void write_records(std::ostream& os) const {
        os << std::setprecision(10);
        for (const auto& s : images) {
            os << "image name=" << s.name << " psnr=" << s.psnr << " ssim=" << s.ssim << "\n";
        }
        os << "mean psnr=" << mean_psnr << " ssim=" << mean_ssim << " count=" << images.size()
           << " shave=" << protocol.shave << " y_only=" << (protocol.y_only ? 1 : 0) << "\n";
    }
};

/// Sorted *.png files in dir, keyed by stem.
inline std::map<std::string, std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::map<std::string, std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (ext == ".png") out.emplace(e.path().stem().string(), e.path());
    }
    return out;
}

/// Pairs SR and HR PNGs by file stem. HR images are cropped to the SR size when they
/// exceed it by less than `scale` pixels (the crop-to-multiple rule).
inline EvalReport evaluate_dataset(const std::filesystem::path& sr_dir, const std::filesystem::path& hr_dir,
                                   const EvalProtocol& protocol, std::size_t scale = 1) {
    const auto srs = list_pngs(sr_dir);
    const auto hrs = list_pngs(hr_dir);
    std::vector<std::string> unpaired;
    for (const auto& [k, _] : srs)
        if (!hrs.count(k)) unpaired.push_back("SR only: " + k);
    for (const auto& [k, _] : hrs)
        if (!srs.count(k)) unpaired.push_back("HR only: " + k);
    if (!unpaired.empty()) {
        std::string msg = "unpaired files:";
        for (const auto& u : unpaired) msg += " [" + u + "]";
        throw DataError(msg);
    }
    EvalReport report;
    report.protocol = protocol;
    for (const auto& [name, sr_path] : srs) {
        const Image sr = read_png(sr_path);
        Image hr = read_png(hrs.at(name));
        if (!hr.same_shape(sr) && hr.channels == sr.channels && hr.height >= sr.height && hr.width >= sr.width &&
            hr.height - sr.height < std::max<std::size_t>(scale, 1) && hr.width - sr.width < std::max<std::size_t>(scale, 1)) {
            hr = crop(hr, 0, 0, sr.height, sr.width);
        }
        report.images.push_back(evaluate_pair(name, sr, hr, protocol));
    }
    report.finalize();
    return report;
}

}  // namespace rdn
