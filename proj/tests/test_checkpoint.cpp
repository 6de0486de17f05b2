#include <gtest/gtest.h>

#include <sstream>

#include "rdn/checkpoint.hpp"
#include "rdn/training.hpp"
#include "support/synthetic.hpp"

using namespace rdn;

namespace {

ModelConfig tiny() {
    ModelConfig m;
    m.blocks = 2;
    m.layers = 3;
    m.growth = 4;
    m.base = 6;
    m.scale = 3;
    m.gff = false;
    return m;
}

Checkpoint trained_checkpoint() {
    TrainConfig cfg;
    cfg.batch = 2;
    cfg.patch = 5;
    cfg.iters_per_epoch = 2;
    cfg.degradation.scale = 3;
    cfg.lr = 3e-4;
    const Image lr = oracle::random_image(3, 8, 8, 1);
    std::vector<TrainPair> data{{"a", lr, oracle::random_image(3, 24, 24, 2)}};
    Trainer t(RdnModel::build(tiny(), 5), cfg, data);
    for (int i = 0; i < 3; ++i) t.step();
    return t.checkpoint();
}

std::string bytes(const Checkpoint& ck) {
    std::ostringstream os;
    save_checkpoint(os, ck);
    return os.str();
}

}  // namespace

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
    const Checkpoint ck = trained_checkpoint();
    const std::string a = bytes(ck);
    std::istringstream is(a);
    const Checkpoint back = load_checkpoint(is);
    EXPECT_EQ(bytes(back), a);
    EXPECT_EQ(back.model, ck.model);
    EXPECT_EQ(back.train, ck.train);
    EXPECT_EQ(back.adam, ck.adam);
    EXPECT_EQ(back.iteration, 3u);
    EXPECT_EQ(back.epoch, 1u);
    EXPECT_EQ(back.rng_state, ck.rng_state);
    EXPECT_EQ(back.running_loss_sum, ck.running_loss_sum);
}

TEST(Checkpoint, WeightsOnlyRoundTrip) {
    const RdnModel m = RdnModel::build(tiny(), 8);
    const std::string a = bytes(Checkpoint::of(m));
    std::istringstream is(a);
    const RdnModel r = restore_model(load_checkpoint(is));
    const Image lr = oracle::random_image(3, 6, 7, 3);
    EXPECT_EQ(super_resolve(r, lr), super_resolve(m, lr));
    EXPECT_EQ(r.config(), m.config());
}

TEST(Checkpoint, BiasesStoredAsVectors) {
    const RdnModel m = RdnModel::build(tiny(), 8);
    std::istringstream is(bytes(Checkpoint::of(m)));
    const Checkpoint ck = load_checkpoint(is);
    for (const auto& p : ck.params)
        if (p.name.ends_with(".b")) EXPECT_EQ(p.tensor.shape().c * p.tensor.shape().h * p.tensor.shape().w, 1u);
}

TEST(Checkpoint, FileRoundTripLeavesNoTempFile) {
    const auto path = std::filesystem::temp_directory_path() / "rdn_ckpt_roundtrip.ckpt";
    const Checkpoint ck = trained_checkpoint();
    save_checkpoint(path, ck);
    EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    EXPECT_EQ(bytes(load_checkpoint(path)), bytes(ck));
    std::filesystem::remove(path);
}

TEST(Checkpoint, UnknownParameterRejected) {
    RdnModel m = RdnModel::build(tiny(), 1);
    Checkpoint ck = Checkpoint::of(m);
    ck.params.push_back({"bogus.w", Tensor::zeros({1, 1, 1, 1})});
    try {
        load_parameters(m, ck);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("bogus.w"), std::string::npos);
    }
}

TEST(Checkpoint, MissingParameterRejected) {
    RdnModel m = RdnModel::build(tiny(), 1);
    Checkpoint ck = Checkpoint::of(m);
    ck.params.erase(ck.params.begin() + 3);
    const std::string name = m.parameters()[3].name;
    try {
        load_parameters(m, ck);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("missing parameter '" + name + "'"), std::string::npos);
    }
}

TEST(Checkpoint, ShapeMismatchRejected) {
    RdnModel m = RdnModel::build(tiny(), 1);
    ModelConfig wider = tiny();
    wider.growth = 5;
    const Checkpoint ck = Checkpoint::of(RdnModel::build(wider, 1));
    EXPECT_THROW(load_parameters(m, ck), DataError);
}

TEST(Checkpoint, CorruptInputRejected) {
    std::istringstream bad_magic("XXXX0000");
    EXPECT_THROW(load_checkpoint(bad_magic), DataError);
    const std::string good = bytes(trained_checkpoint());
    std::istringstream truncated(good.substr(0, good.size() / 2));
    EXPECT_THROW(load_checkpoint(truncated), DataError);
    EXPECT_THROW(load_checkpoint(std::filesystem::path("/nonexistent/x.ckpt")), DataError);
}
