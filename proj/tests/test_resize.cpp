#include <gtest/gtest.h>

#include <cmath>

#include "rdn/resize.hpp"
#include "support/synthetic.hpp"

using namespace rdn;

namespace {

// Straightforward imresize model: every output pixel is a 2-D weighted sum over the
// input, weights from the (possibly stretched) Keys kernel, mirrored borders.
double keys(double t) {
    t = std::fabs(t);
    if (t < 1) return (1.5 * t - 2.5) * t * t + 1;
    if (t < 2) return ((-0.5 * t + 2.5) * t - 4) * t + 2;
    return 0;
}

long mirror(long i, long n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
}

std::vector<std::pair<long, double>> axis_weights(long out_i, long in_len, double s) {
    const double centre = (static_cast<double>(out_i) + 0.5) / s - 0.5;  // 0-based
    const double stretch = s < 1 ? s : 1.0;
    const double half = 2.0 / stretch;
    std::vector<std::pair<long, double>> w;
    double total = 0;
    for (long j = static_cast<long>(std::floor(centre - half)) - 1; j <= static_cast<long>(std::ceil(centre + half)) + 1;
         ++j) {
        const double v = stretch * keys(stretch * (centre - static_cast<double>(j)));
        if (v == 0) continue;
        w.emplace_back(mirror(j, in_len), v);
        total += v;
    }
    for (auto& p : w) p.second /= total;
    return w;
}

Image oracle_resize(const Image& in, double s, std::size_t out_h, std::size_t out_w) {
    Image out(in.channels, out_h, out_w);
    for (std::size_t y = 0; y < out_h; ++y) {
        const auto wy = axis_weights(static_cast<long>(y), static_cast<long>(in.height), s);
        for (std::size_t x = 0; x < out_w; ++x) {
            const auto wx = axis_weights(static_cast<long>(x), static_cast<long>(in.width), s);
            for (std::size_t c = 0; c < in.channels; ++c) {
                double acc = 0;
                for (const auto& [iy, vy] : wy)
                    for (const auto& [ix, vx] : wx)
                        acc += vy * vx * in.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                out.at(c, y, x) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

double max_abs_diff(const Image& a, const Image& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(static_cast<double>(a.data[i]) - b.data[i]));
    return m;
}

}  // namespace

TEST(CubicKernel, KeysValues) {
    EXPECT_EQ(cubic_kernel(0.0), 1.0);
    EXPECT_EQ(cubic_kernel(1.0), 0.0);
    EXPECT_EQ(cubic_kernel(2.0), 0.0);
    EXPECT_EQ(cubic_kernel(-2.5), 0.0);
    EXPECT_DOUBLE_EQ(cubic_kernel(0.5), 0.5625);
    EXPECT_DOUBLE_EQ(cubic_kernel(1.5), -0.0625);
}

TEST(Resize, OutputSizeIsCeil) {
    const Image img(1, 7, 10);
    EXPECT_EQ(resize_bicubic(img, Ratio{1, 2}).height, 4u);
    EXPECT_EQ(resize_bicubic(img, Ratio{1, 2}).width, 5u);
    EXPECT_EQ(resize_bicubic(img, Ratio{1, 3}).height, 3u);
    EXPECT_EQ(resize_bicubic(img, Ratio{3, 1}).width, 30u);
    EXPECT_EQ(resize_bicubic(img, Ratio{2, 3}).height, 5u);
}

TEST(Resize, FactorOneIsIdentity) {
    const Image img = oracle::random_image(3, 9, 13, 1);
    EXPECT_LE(max_abs_diff(resize_bicubic(img, Ratio{1, 1}), img), 1e-6);
}

TEST(Resize, ConstantStaysConstant) {
    const Image img(2, 12, 18, 0.37f);
    for (Ratio r : {Ratio{1, 2}, Ratio{1, 3}, Ratio{1, 4}, Ratio{2, 1}, Ratio{3, 1}, Ratio{4, 1}, Ratio{2, 3}}) {
        for (auto b : {Boundary::Symmetric, Boundary::Replicate}) {
            const Image out = resize_bicubic(img, r, {b, false});
            for (float v : out.data) EXPECT_NEAR(v, 0.37f, 1e-6);
        }
    }
}

TEST(Resize, WeightsArePartitionOfUnity) {
    for (std::size_t len : {1u, 2u, 5u, 17u, 64u}) {
        for (Ratio r : {Ratio{1, 2}, Ratio{1, 3}, Ratio{1, 4}, Ratio{2, 1}, Ratio{3, 1}, Ratio{4, 1}, Ratio{3, 7}}) {
            const auto rw = resample_weights(len, r);
            for (std::size_t i = 0; i < rw.out_len; ++i) {
                double total = 0;
                for (std::size_t j = 0; j < rw.taps; ++j) total += rw.weight[i * rw.taps + j];
                EXPECT_NEAR(total, 1.0, 1e-9);
            }
        }
    }
}

TEST(Resize, SymmetricBoundaryRepeatsEdgeSample) {
    EXPECT_EQ(boundary_index(-1, 5, Boundary::Symmetric), 0u);
    EXPECT_EQ(boundary_index(-2, 5, Boundary::Symmetric), 1u);
    EXPECT_EQ(boundary_index(5, 5, Boundary::Symmetric), 4u);
    EXPECT_EQ(boundary_index(6, 5, Boundary::Symmetric), 3u);
    EXPECT_EQ(boundary_index(-3, 5, Boundary::Replicate), 0u);
    EXPECT_EQ(boundary_index(9, 5, Boundary::Replicate), 4u);
}

TEST(Resize, MatchesPerPixelOracle) {
    for (Ratio r : {Ratio{1, 2}, Ratio{1, 3}, Ratio{1, 4}, Ratio{2, 1}, Ratio{3, 1}, Ratio{4, 1}}) {
        const Image img = oracle::random_image(3, 24, 20, static_cast<std::uint64_t>(r.num * 10 + r.den));
        const Image got = resize_bicubic(img, r);
        const Image want = oracle_resize(img, r.value(), got.height, got.width);
        EXPECT_LE(max_abs_diff(got, want), 1e-5) << r.num << "/" << r.den;
    }
}

TEST(Resize, TinyInputsMirrorRepeatedly) {
    // Shrinking a 2-pixel axis needs taps far beyond both edges.
    const Image img = oracle::random_image(1, 2, 3, 5);
    const Image got = resize_bicubic(img, Ratio{1, 4});
    const Image want = oracle_resize(img, 0.25, got.height, got.width);
    EXPECT_LE(max_abs_diff(got, want), 1e-5);
}

TEST(Resize, QuantizedOutputIsOnEightBitGrid) {
    const Image img = quantize8(oracle::random_image(3, 16, 16, 6));
    const Image out = resize_bicubic(img, Ratio{1, 2}, {Boundary::Symmetric, true});
    for (float v : out.data) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
        EXPECT_NEAR(v * 255.0f, std::round(v * 255.0f), 1e-4);
    }
}

TEST(Resize, EmptyInputRejected) {
    EXPECT_THROW(resize_bicubic(Image{}, Ratio{1, 2}), ShapeError);
    EXPECT_THROW(resample_weights(4, Ratio{0, 1}), Error);
}
