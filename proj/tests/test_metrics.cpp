#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include <unistd.h>

#include "rdn/metrics.hpp"
#include "rdn/png_io.hpp"
#include "rdn/resize.hpp"
#include "support/synthetic.hpp"

using namespace rdn;
namespace fs = std::filesystem;

namespace {

Image rgb(float r, float g, float b) {
    Image img(3, 1, 1);
    img.data = {r, g, b};
    return img;
}

// The pair used for the frozen scikit-image values below.
std::pair<Image, Image> formula_pair() {
    const std::size_t h = 24, w = 29;
    Image a(1, h, w), b(1, h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double s = 0.5 + 0.4 * std::sin(0.37 * static_cast<double>(x) + 0.21 * static_cast<double>(y));
            const double t = std::clamp(s + 0.08 * std::cos(1.3 * static_cast<double>(x * y) / 7.0), 0.0, 1.0);
            a.at(0, y, x) = static_cast<float>(std::round(255 * s) / 255);
            b.at(0, y, x) = static_cast<float>(std::round(255 * t) / 255);
        }
    return {a, b};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rdn_metrics_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST(RgbToY, Anchors) {
    EXPECT_NEAR(rgb_to_y(rgb(0, 0, 0)).data[0], 16.0 / 255.0, 1e-7);
    EXPECT_NEAR(rgb_to_y(rgb(1, 1, 1)).data[0], 235.0 / 255.0, 1e-7);
    EXPECT_NEAR(rgb_to_y(rgb(0.5f, 0.5f, 0.5f)).data[0], (16.0 + 109.5) / 255.0, 1e-7);
}

TEST(RgbToY, RangeAndChannelCheck) {
    const Image img = oracle::random_image(3, 20, 20, 2);
    for (float v : rgb_to_y(img).data) {
        EXPECT_GE(v, 16.0f / 255.0f - 1e-6f);
        EXPECT_LE(v, 235.0f / 255.0f + 1e-6f);
    }
    EXPECT_THROW(rgb_to_y(Image(2, 4, 4)), ShapeError);
}

TEST(Psnr, CapAndClosedForm) {
    const Image a = oracle::random_image(1, 16, 16, 3);
    EXPECT_EQ(psnr(a, a), kPsnrCap);
    Image b = a;
    for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] = a.data[i] + ((i % 2) ? 1.0f : -1.0f) / 255.0f;
    EXPECT_NEAR(psnr(a, b), 20.0 * std::log10(255.0), 1e-4);
    EXPECT_NEAR(20.0 * std::log10(255.0), 48.1308, 1e-4);
}

TEST(Psnr, SymmetricAndDecreasingInError) {
    const Image a = oracle::random_image(1, 12, 12, 4);
    Image b = a, c = a;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        b.data[i] += 0.01f;
        c.data[i] += 0.02f;
    }
    EXPECT_DOUBLE_EQ(psnr(a, b), psnr(b, a));
    EXPECT_GT(psnr(a, b), psnr(a, c));
    EXPECT_THROW(psnr(a, Image(1, 12, 13)), ShapeError);
}

TEST(Ssim, IdentityIsOne) {
    const Image a = oracle::random_image(1, 20, 20, 5);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, ConstantImagesClosedForm) {
    const double m1 = 0.3, m2 = 0.55;
    const Image a(1, 15, 15, static_cast<float>(m1));
    const Image b(1, 15, 15, static_cast<float>(m2));
    const double c1 = 1e-4;
    const double f1 = static_cast<float>(m1), f2 = static_cast<float>(m2);
    EXPECT_NEAR(ssim(a, b), (2 * f1 * f2 + c1) / (f1 * f1 + f2 * f2 + c1), 1e-9);
}

TEST(Ssim, SymmetricAndBounded) {
    const Image a = oracle::random_image(1, 18, 22, 6);
    const Image b = oracle::random_image(1, 18, 22, 7);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    EXPECT_LE(std::abs(ssim(a, b)), 1.0);
    EXPECT_THROW(ssim(Image(1, 10, 20), Image(1, 10, 20)), ShapeError);
    EXPECT_THROW(ssim(Image(3, 20, 20), Image(3, 20, 20)), ShapeError);
}

TEST(Ssim, MatchesScikitImage) {
    // skimage.metrics.structural_similarity(a, b, gaussian_weights=True, sigma=1.5,
    //     use_sample_covariance=False, data_range=1.0), scikit-image 0.25.2
    const auto [a, b] = formula_pair();
    EXPECT_NEAR(ssim(a, b), 0.9266324822169576, 1e-6);
    // skimage.metrics.peak_signal_noise_ratio(a, b, data_range=1.0)
    EXPECT_NEAR(psnr(a, b), 24.563156949121442, 1e-5);
}

TEST(EvaluatePair, ShaveMatchesPrecroppedInputs) {
    const Image hr = quantize8(oracle::synthetic_image(40, 36));
    const Image sr = quantize8(oracle::random_image(3, 40, 36, 8));
    const auto shaved = evaluate_pair("x", sr, hr, EvalProtocol{3, true});
    const auto pre = evaluate_pair("x", crop(sr, 3, 3, 34, 30), crop(hr, 3, 3, 34, 30), EvalProtocol{0, true});
    EXPECT_DOUBLE_EQ(shaved.psnr, pre.psnr);
    EXPECT_DOUBLE_EQ(shaved.ssim, pre.ssim);
}

TEST(EvaluatePair, RoundsToEightBitsFirst) {
    const Image hr = quantize8(oracle::synthetic_image(24, 24));
    Image sr = hr;
    for (auto& v : sr.data) v += 0.3f / 255.0f;  // rounds back onto the HR levels
    EXPECT_EQ(evaluate_pair("x", sr, hr, EvalProtocol{2, true}).psnr, kPsnrCap);
}

TEST(EvaluateDataset, IdenticalPairs) {
    const auto sr = fresh_dir("sr_same"), hr = fresh_dir("hr_same");
    for (int i = 0; i < 3; ++i) {
        const Image img = oracle::synthetic_image(30, 32, static_cast<std::uint64_t>(i));
        write_png(sr / ("img" + std::to_string(i) + ".png"), img);
        write_png(hr / ("img" + std::to_string(i) + ".png"), img);
    }
    const auto rep = evaluate_dataset(sr, hr, EvalProtocol{2, true}, 2);
    ASSERT_EQ(rep.images.size(), 3u);
    EXPECT_EQ(rep.mean_psnr, kPsnrCap);
    EXPECT_NEAR(rep.mean_ssim, 1.0, 1e-12);
    EXPECT_EQ(rep.images[0].name, "img0");
    EXPECT_EQ(rep.images[2].name, "img2");
    fs::remove_all(sr);
    fs::remove_all(hr);
}

TEST(EvaluateDataset, SinglePairMeanEqualsValue) {
    const auto sr = fresh_dir("sr_one"), hr = fresh_dir("hr_one");
    write_png(sr / "a.png", oracle::random_image(3, 26, 26, 1));
    write_png(hr / "a.png", oracle::synthetic_image(26, 26));
    const auto rep = evaluate_dataset(sr, hr, EvalProtocol{3, true}, 3);
    ASSERT_EQ(rep.images.size(), 1u);
    EXPECT_EQ(rep.mean_psnr, rep.images[0].psnr);
    EXPECT_EQ(rep.mean_ssim, rep.images[0].ssim);
    std::ostringstream os;
    rep.write_records(os);
    EXPECT_NE(os.str().find("image name=a psnr="), std::string::npos);
    EXPECT_NE(os.str().find("mean psnr="), std::string::npos);
    fs::remove_all(sr);
    fs::remove_all(hr);
}

TEST(EvaluateDataset, UnpairedFilesAreListed) {
    const auto sr = fresh_dir("sr_unpaired"), hr = fresh_dir("hr_unpaired");
    write_png(sr / "a.png", Image(3, 16, 16, 0.5f));
    write_png(sr / "b.png", Image(3, 16, 16, 0.5f));
    write_png(hr / "a.png", Image(3, 16, 16, 0.5f));
    write_png(hr / "c.png", Image(3, 16, 16, 0.5f));
    try {
        evaluate_dataset(sr, hr, EvalProtocol{2, true}, 2);
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("b"), std::string::npos);
        EXPECT_NE(msg.find("HR only: c"), std::string::npos);
    }
    fs::remove_all(sr);
    fs::remove_all(hr);
}

namespace {

// Mean Y PSNR/SSIM of bicubic down-then-up against the HR images in $env, or skip.
void bicubic_baseline(const char* env, int scale, double want_psnr, double want_ssim) {
    const char* dir = std::getenv(env);
    if (!dir || !*dir) GTEST_SKIP() << env << " not set";
    const auto files = list_pngs(dir);
    ASSERT_FALSE(files.empty());
    const auto r = static_cast<std::size_t>(scale);
    double p = 0, s = 0;
    for (const auto& [stem, path] : files) {
        const Image hr = crop_to_multiple(read_png(path), r);
        const ResizeOptions file_io{Boundary::Symmetric, true};
        const Image lr = quantize8(resize_bicubic(hr, Ratio{1, scale}, file_io));
        const auto e = evaluate_pair(stem, resize_bicubic(lr, Ratio{scale, 1}, file_io), hr, EvalProtocol{r, true});
        p += e.psnr;
        s += e.ssim;
    }
    EXPECT_NEAR(p / static_cast<double>(files.size()), want_psnr, 0.05);
    EXPECT_NEAR(s / static_cast<double>(files.size()), want_ssim, 0.001);
}

}  // namespace

TEST(BicubicBaseline, Set5X2) { bicubic_baseline("RDN_SET5_DIR", 2, 33.66, 0.9299); }
TEST(BicubicBaseline, Set14X3) { bicubic_baseline("RDN_SET14_DIR", 3, 27.55, 0.7742); }
