#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "rdn/training.hpp"
#include "support/synthetic.hpp"

using namespace rdn;

namespace {

Image upsample_nearest(const Image& in, std::size_t r) {
    Image out(in.channels, in.height * r, in.width * r);
    for (std::size_t c = 0; c < in.channels; ++c)
        for (std::size_t y = 0; y < out.height; ++y)
            for (std::size_t x = 0; x < out.width; ++x) out.at(c, y, x) = in.at(c, y / r, x / r);
    return out;
}

ModelConfig tiny(int scale = 2) {
    ModelConfig m;
    m.blocks = 2;
    m.layers = 2;
    m.growth = 4;
    m.base = 8;
    m.scale = scale;
    return m;
}

TrainConfig small_train() {
    TrainConfig t;
    t.batch = 2;
    t.patch = 6;
    t.lr = 1e-3;
    t.iters_per_epoch = 4;
    t.epochs = 3;
    t.log_every = 1;
    t.seed = 9;
    return t;
}

std::vector<TrainPair> pairs(int n, std::size_t lr_side, int scale, std::uint64_t seed) {
    std::vector<TrainPair> out;
    for (int i = 0; i < n; ++i) {
        const Image lr = oracle::random_image(3, lr_side, lr_side, seed + static_cast<std::uint64_t>(i));
        out.push_back({"img" + std::to_string(i), lr, upsample_nearest(lr, static_cast<std::size_t>(scale))});
    }
    return out;
}

std::vector<float> flat_params(const RdnModel& m) {
    std::vector<float> v;
    for (const auto& p : m.parameters()) v.insert(v.end(), p.tensor.data().begin(), p.tensor.data().end());
    return v;
}

}  // namespace

TEST(LrSchedule, HalvesEveryTwoHundredEpochs) {
    TrainConfig cfg;
    EXPECT_EQ(lr_schedule(0, cfg), 1e-4);
    EXPECT_EQ(lr_schedule(199, cfg), 1e-4);
    EXPECT_EQ(lr_schedule(200, cfg), 5e-5);
    EXPECT_EQ(lr_schedule(399, cfg), 5e-5);
    EXPECT_EQ(lr_schedule(400, cfg), 2.5e-5);
    EXPECT_EQ(lr_schedule(1000, cfg), 1e-4 / 32);
}

TEST(SampleBatch, ShapesFollowPatchAndScale) {
    const auto data = pairs(2, 10, 3, 1);
    TrainConfig cfg = small_train();
    cfg.batch = 5;
    std::mt19937_64 rng(1);
    const Batch b = sample_batch(data, cfg, 3, rng);
    EXPECT_EQ(b.lr.shape(), (Shape4{5, 3, 6, 6}));
    EXPECT_EQ(b.hr.shape(), (Shape4{5, 3, 18, 18}));
}

TEST(SampleBatch, HrPatchIsAlignedWithLrPatchUnderEveryTransform) {
    // HR is the nearest-neighbour enlargement of LR, which commutes with all 8 transforms.
    for (int r : {2, 3, 4}) {
        const auto data = pairs(3, 11, r, 10);
        TrainConfig cfg = small_train();
        cfg.batch = 8;
        cfg.patch = 5;
        std::mt19937_64 rng(static_cast<std::uint64_t>(r));
        for (int trial = 0; trial < 20; ++trial) {
            const Batch b = sample_batch(data, cfg, r, rng);
            for (std::size_t n = 0; n < 8; ++n)
                EXPECT_EQ(to_image(b.hr, n), upsample_nearest(to_image(b.lr, n), static_cast<std::size_t>(r)));
        }
    }
}

TEST(SampleBatch, NoAugmentationMeansPlainCrops) {
    const auto data = pairs(1, 9, 2, 3);
    TrainConfig cfg = small_train();
    cfg.augment = false;
    cfg.batch = 1;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        const Image patch = to_image(sample_batch(data, cfg, 2, rng).lr, 0);
        bool found = false;
        for (std::size_t y = 0; y + 6 <= 9 && !found; ++y)
            for (std::size_t x = 0; x + 6 <= 9 && !found; ++x) found = crop(data[0].lr, y, x, 6, 6) == patch;
        EXPECT_TRUE(found);
    }
}

TEST(SampleBatch, AugmentationUsesAllTransforms) {
    const auto data = pairs(1, 6, 2, 4);
    TrainConfig cfg = small_train();
    cfg.batch = 1;
    std::mt19937_64 rng(6);
    std::set<std::vector<float>> seen;
    for (int i = 0; i < 400; ++i) seen.insert(to_image(sample_batch(data, cfg, 2, rng).lr, 0).data);
    EXPECT_EQ(seen.size(), 8u);
}

TEST(SampleBatch, PositionsAreUniform) {
    // 5x5 valid positions; each patch's top-left pixel encodes where it came from.
    const std::size_t side = 12, p = 8, k = side - p + 1;
    Image lr(1, side, side);
    for (std::size_t i = 0; i < lr.data.size(); ++i) lr.data[i] = static_cast<float>(i);
    const std::vector<TrainPair> data{{"grid", lr, upsample_nearest(lr, 2)}};
    TrainConfig cfg = small_train();
    cfg.augment = false;
    cfg.batch = 100;
    cfg.patch = static_cast<int>(p);
    std::mt19937_64 rng(7);
    std::vector<double> counts(k * k, 0.0);
    for (int round = 0; round < 100; ++round) {
        const Batch b = sample_batch(data, cfg, 2, rng);
        for (std::size_t n = 0; n < 100; ++n) {
            const auto idx = static_cast<std::size_t>(b.lr.at(n, 0, 0, 0));
            const std::size_t y = idx / side, x = idx % side;
            ASSERT_LT(y, k);
            ASSERT_LT(x, k);
            counts[y * k + x] += 1;
        }
    }
    const double expected = 1e4 / static_cast<double>(k * k);
    double chi2 = 0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, 51.18);  // chi-square, 24 degrees of freedom, p = 0.001
}

TEST(SampleBatch, ImageSmallerThanPatchIsNamed) {
    auto data = pairs(2, 10, 2, 1);
    data.push_back({"too_small_one", Image(3, 4, 20), Image(3, 8, 40)});
    TrainConfig cfg = small_train();
    std::mt19937_64 rng(1);
    try {
        sample_batch(data, cfg, 2, rng);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("too_small_one"), std::string::npos);
    }
}

TEST(Trainer, GradientsAreZeroAfterStep) {
    Trainer t(RdnModel::build(tiny(), 1), small_train(), pairs(2, 10, 2, 1));
    t.step();
    for (const auto& p : t.model().parameters()) {
        if (!p.tensor.has_grad()) continue;
        for (float g : p.tensor.grad()) ASSERT_EQ(g, 0.0f) << p.name;
    }
    EXPECT_EQ(t.iteration(), 1u);
    EXPECT_EQ(t.optimizer().step, 1u);
}

TEST(Trainer, LossDecreasesOnFixedData) {
    TrainConfig cfg = small_train();
    cfg.batch = 4;
    Trainer t(RdnModel::build(tiny(), 2), cfg, pairs(1, 8, 2, 3));
    double first = 0, last = 0;
    for (int i = 0; i < 60; ++i) {
        const double l = t.step();
        if (i < 5) first += l;
        if (i >= 55) last += l;
    }
    EXPECT_LT(last, first);
}

TEST(Trainer, EpochAndLearningRateFollowIterations) {
    TrainConfig cfg = small_train();
    cfg.halve_every = 2;
    Trainer t(RdnModel::build(tiny(), 1), cfg, pairs(1, 8, 2, 3));
    for (int i = 0; i < 8; ++i) t.step();
    EXPECT_EQ(t.epoch(), 2u);
    EXPECT_EQ(t.current_lr(), cfg.lr / 2);
}

TEST(Trainer, ResumeIsBitIdentical) {
    const TrainConfig cfg = small_train();
    const auto data = pairs(3, 10, 2, 20);
    const auto val = pairs(1, 10, 2, 30);
    Trainer straight(RdnModel::build(tiny(), 4), cfg, data, val);
    for (int i = 0; i < 10; ++i) straight.step();

    Trainer first(RdnModel::build(tiny(), 4), cfg, data, val);
    for (int i = 0; i < 6; ++i) first.step();
    std::stringstream buf;
    save_checkpoint(buf, first.checkpoint());
    Trainer resumed = Trainer::resume(load_checkpoint(buf), data, val);
    for (int i = 0; i < 4; ++i) resumed.step();

    EXPECT_EQ(flat_params(resumed.model()), flat_params(straight.model()));
    EXPECT_EQ(resumed.optimizer(), straight.optimizer());
    EXPECT_EQ(resumed.iteration(), straight.iteration());
    EXPECT_EQ(resumed.running_loss(), straight.running_loss());
}

TEST(Trainer, NonFiniteLossAbortsWithoutUpdate) {
    auto data = pairs(1, 8, 2, 3);
    data[0].hr.data[5] = std::nanf("");
    TrainConfig cfg = small_train();
    cfg.augment = false;
    cfg.patch = 8;
    Trainer t(RdnModel::build(tiny(), 1), cfg, data);
    const auto before = flat_params(t.model());
    EXPECT_THROW(t.step(), NumericError);
    EXPECT_EQ(flat_params(t.model()), before);
    EXPECT_EQ(t.iteration(), 0u);
}

TEST(Trainer, EmptyTrainingSetRejected) {
    EXPECT_THROW(Trainer(RdnModel::build(tiny(), 1), small_train(), {}), DataError);
}

TEST(TrainLoop, WritesTelemetryAndCheckpointsPerEpoch) {
    const auto dir = std::filesystem::temp_directory_path() / ("rdn_train_loop_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    Trainer t(RdnModel::build(tiny(), 1), small_train(), pairs(2, 10, 2, 1), pairs(1, 10, 2, 2));
    int checkpoints = 0;
    const auto summary = train(t, TrainOptions{dir, 0, nullptr, [&](const Checkpoint&) { ++checkpoints; }});
    EXPECT_EQ(summary.iterations, 12u);
    EXPECT_EQ(checkpoints, 3);
    EXPECT_TRUE(std::filesystem::exists(dir / "last.ckpt"));
    EXPECT_TRUE(std::filesystem::exists(dir / "best.ckpt"));
    std::ifstream tel(dir / "telemetry.txt");
    int lines = 0, with_val = 0;
    for (std::string line; std::getline(tel, line);) {
        ++lines;
        std::istringstream is(line);
        std::vector<std::string> fields;
        for (std::string f; is >> f;) fields.push_back(f);
        ASSERT_TRUE(fields.size() == 4 || fields.size() == 5) << line;
        if (fields.size() == 5) ++with_val;
    }
    EXPECT_EQ(lines, 12);
    EXPECT_EQ(with_val, 3);
    const Checkpoint last = load_checkpoint(dir / "last.ckpt");
    EXPECT_EQ(last.iteration, 12u);
    EXPECT_EQ(last.epoch, 3u);
    std::filesystem::remove_all(dir);
}

TEST(ValidationPsnr, AveragesPerImageScores) {
    const auto val = pairs(2, 10, 2, 5);
    const RdnModel m = RdnModel::build(tiny(), 3);
    double want = 0;
    for (const auto& tp : val) {
        const Image sr = super_resolve(m, tp.lr);
        want += evaluate_pair(tp.name, sr, tp.hr, EvalProtocol{2, true}).psnr;
    }
    EXPECT_DOUBLE_EQ(validation_psnr(m, val), want / 2);
}
