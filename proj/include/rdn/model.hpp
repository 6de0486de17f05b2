#pragma once

// Residual dense network: shallow feature extraction, D residual dense blocks,
// dense feature fusion, sub-pixel upsampling and a final 3-channel conv.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rdn/error.hpp"
#include "rdn/ops.hpp"
#include "rdn/tensor.hpp"

namespace rdn {

struct ModelConfig {
    int blocks = 16;  // D
    int layers = 8;   // C, conv layers per block
    int growth = 64;  // G
    int base = 64;    // G0
    int scale = 2;
    bool cm = true;   // contiguous memory
    bool lrl = true;  // local residual learning
    bool gff = true;  // global feature fusion
    int channels = 3;

    bool operator==(const ModelConfig&) const = default;

    std::vector<std::string> problems() const {
        std::vector<std::string> out;
        if (blocks < 1) out.push_back("model.blocks must be >= 1, got " + std::to_string(blocks));
        if (layers < 1) out.push_back("model.layers must be >= 1, got " + std::to_string(layers));
        if (growth < 1) out.push_back("model.growth must be >= 1, got " + std::to_string(growth));
        if (base < 1) out.push_back("model.base must be >= 1, got " + std::to_string(base));
        if (scale < 1 || scale > 4) out.push_back("model.scale must be one of 1,2,3,4, got " + std::to_string(scale));
        if (channels < 1) out.push_back("model.channels must be >= 1, got " + std::to_string(channels));
        return out;
    }

    void validate() const {
        if (auto p = problems(); !p.empty()) throw ConfigError(std::move(p));
    }

    /// Upsampling factor of each sub-pixel stage; empty for scale 1.
    std::vector<int> up_stages() const {
        if (scale == 4) return {2, 2};
        if (scale == 1) return {};
        return {scale};
    }

    /// Input width of dense layer c (0-based) in any block.
    std::size_t dense_in(int c) const {
        if (cm) return static_cast<std::size_t>(base + c * growth);
        return static_cast<std::size_t>(c == 0 ? base : c * growth);
    }

    std::size_t lff_in() const {
        return static_cast<std::size_t>((cm ? base : 0) + layers * growth);
    }
};

struct ConvParams {
    Tensor weight;  // (C_out, C_in, k, k)
    Tensor bias;    // (C_out, 1, 1, 1)

    std::size_t out_channels() const { return weight.shape().n; }
    std::size_t in_channels() const { return weight.shape().c; }
    std::size_t kernel() const { return weight.shape().h; }
    std::size_t numel() const { return weight.numel() + bias.numel(); }

    Tensor operator()(const Tensor& x) const { return conv2d(x, weight, bias); }
};

struct NamedParam {
    std::string name;
    Tensor tensor;
};

struct RdbParams {
    std::vector<ConvParams> dense;
    ConvParams lff;
};

/// Intermediate feature maps of one forward pass.
struct FeatureTrace {
    Tensor shallow;             // F_{-1}
    Tensor f0;                  // F_0
    std::vector<Tensor> block;  // F_1 .. F_D
    Tensor fused;               // F_DF
};

// Closed-form counts mirror the construction in RdnModel::build.
inline std::size_t conv_param_count(std::size_t cin, std::size_t cout, std::size_t k) {
    return cout * cin * k * k + cout;
}

/// Weights plus biases of every conv that build(cfg) creates.
inline std::size_t param_count(const ModelConfig& cfg) {
    cfg.validate();
    const auto g0 = static_cast<std::size_t>(cfg.base);
    const auto g = static_cast<std::size_t>(cfg.growth);
    const auto ch = static_cast<std::size_t>(cfg.channels);
    std::size_t total = conv_param_count(ch, g0, 3) + conv_param_count(g0, g0, 3);
    std::size_t per_block = conv_param_count(cfg.lff_in(), g0, 1);
    for (int c = 0; c < cfg.layers; ++c) per_block += conv_param_count(cfg.dense_in(c), g, 3);
    total += per_block * static_cast<std::size_t>(cfg.blocks);
    if (cfg.gff) {
        total += conv_param_count(static_cast<std::size_t>(cfg.blocks) * g0, g0, 1) + conv_param_count(g0, g0, 3);
    }
    for (int s : cfg.up_stages()) total += conv_param_count(g0, g0 * static_cast<std::size_t>(s * s), 3);
    total += conv_param_count(g0, ch, 3);
    return total;
}

/// Receptive field of a chain of n stride-1 3x3 convs.
constexpr int receptive_field_for_depth(int n3x3) { return 1 + 2 * n3x3; }

/// Receptive field, in LR pixels, of one F_DF pixel: the longest chain of 3x3 convs is
/// sfe1, sfe2, every dense layer of every block, then gff2 when fusion is on.
inline int receptive_field(const ModelConfig& cfg) {
    cfg.validate();
    return receptive_field_for_depth(2 + cfg.blocks * cfg.layers + (cfg.gff ? 1 : 0));
}

class RdnModel {
public:
    /// Allocates and initializes all parameters. Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
    /// biases zero.
    static RdnModel build(const ModelConfig& cfg, std::uint64_t seed) {
        cfg.validate();
        RdnModel m;
        m.cfg_ = cfg;
        std::mt19937_64 rng(seed);
        const auto g0 = static_cast<std::size_t>(cfg.base);
        const auto g = static_cast<std::size_t>(cfg.growth);
        const auto ch = static_cast<std::size_t>(cfg.channels);

        m.sfe1_ = make_conv(ch, g0, 3, rng);
        m.sfe2_ = make_conv(g0, g0, 3, rng);
        m.blocks_.resize(static_cast<std::size_t>(cfg.blocks));
        for (auto& blk : m.blocks_) {
            for (int c = 0; c < cfg.layers; ++c) blk.dense.push_back(make_conv(cfg.dense_in(c), g, 3, rng));
            blk.lff = make_conv(cfg.lff_in(), g0, 1, rng);
        }
        if (cfg.gff) {
            m.gff1_ = make_conv(static_cast<std::size_t>(cfg.blocks) * g0, g0, 1, rng);
            m.gff2_ = make_conv(g0, g0, 3, rng);
        }
        for (int s : cfg.up_stages()) m.up_.push_back(make_conv(g0, g0 * static_cast<std::size_t>(s * s), 3, rng));
        m.final_ = make_conv(g0, ch, 3, rng);

        for (std::size_t d = 0; d < m.blocks_.size(); ++d) {
            for (std::size_t c = 0; c < m.blocks_[d].dense.size(); ++c) {
                if (m.blocks_[d].dense[c].in_channels() != cfg.dense_in(static_cast<int>(c))) {
                    throw Error("dense layer width bookkeeping broken at block " + std::to_string(d));
                }
            }
        }
        return m;
    }

    const ModelConfig& config() const noexcept { return cfg_; }

    /// One residual dense block applied to prev (G0 channels).
    Tensor forward_rdb(std::size_t d, const Tensor& prev) const {
        if (d >= blocks_.size()) throw Error("forward_rdb: block index " + std::to_string(d) + " out of range");
        if (prev.shape().c != static_cast<std::size_t>(cfg_.base)) {
            throw ShapeError("forward_rdb: expected " + std::to_string(cfg_.base) + " channels, got " +
                             std::to_string(prev.shape().c));
        }
        const auto& blk = blocks_[d];
        std::vector<Tensor> feats;
        if (cfg_.cm) feats.push_back(prev);
        for (std::size_t c = 0; c < blk.dense.size(); ++c) {
            // Without contiguous memory the block input reaches only the first layer.
            const Tensor in = (!cfg_.cm && c == 0) ? prev : concat_channels(feats);
            feats.push_back(relu(blk.dense[c](in)));
        }
        Tensor local = blk.lff(concat_channels(feats));
        return cfg_.lrl ? add(prev, local) : local;
    }

    FeatureTrace forward_features(const Tensor& lr) const {
        if (lr.shape().c != static_cast<std::size_t>(cfg_.channels)) {
            throw ShapeError("forward: expected " + std::to_string(cfg_.channels) + " input channels, got " +
                             std::to_string(lr.shape().c));
        }
        FeatureTrace t;
        t.shallow = sfe1_(lr);
        t.f0 = sfe2_(t.shallow);
        Tensor f = t.f0;
        for (std::size_t d = 0; d < blocks_.size(); ++d) {
            f = forward_rdb(d, f);
            t.block.push_back(f);
        }
        if (cfg_.gff) {
            t.fused = add(t.shallow, gff2_(gff1_(concat_channels(t.block))));
        } else {
            t.fused = add(t.shallow, t.block.back());
        }
        return t;
    }

    /// Upsampling net and final conv applied to F_DF.
    Tensor reconstruct(const Tensor& fused) const {
        Tensor x = fused;
        const auto stages = cfg_.up_stages();
        for (std::size_t s = 0; s < stages.size(); ++s) {
            x = pixel_shuffle(up_[s](x), static_cast<std::size_t>(stages[s]));
        }
        return final_(x);
    }

    /// (N, channels, H, W) -> (N, channels, rH, rW).
    Tensor forward(const Tensor& lr) const { return reconstruct(forward_features(lr).fused); }

    /// All parameters in canonical order with canonical names.
    std::vector<NamedParam> parameters() const {
        std::vector<NamedParam> out;
        auto push = [&](const std::string& prefix, const ConvParams& p) {
            out.push_back({prefix + ".w", p.weight});
            out.push_back({prefix + ".b", p.bias});
        };
        push("sfe1", sfe1_);
        push("sfe2", sfe2_);
        for (std::size_t d = 0; d < blocks_.size(); ++d) {
            const std::string bp = "rdb" + std::to_string(d);
            for (std::size_t c = 0; c < blocks_[d].dense.size(); ++c) {
                push(bp + ".dense" + std::to_string(c), blocks_[d].dense[c]);
            }
            push(bp + ".lff", blocks_[d].lff);
        }
        if (cfg_.gff) {
            push("gff1", gff1_);
            push("gff2", gff2_);
        }
        for (std::size_t s = 0; s < up_.size(); ++s) push("up" + std::to_string(s) + ".conv", up_[s]);
        push("final", final_);
        return out;
    }

    std::size_t num_parameters() const {
        std::size_t n = 0;
        for (const auto& p : parameters()) n += p.tensor.numel();
        return n;
    }

    void zero_grad() {
        for (auto& p : parameters()) p.tensor.zero_grad();
    }

    /// Independent copy of every parameter.
    RdnModel clone() const {
        RdnModel m = *this;
        auto copy = [](ConvParams& p) { p = ConvParams{p.weight.clone(), p.bias.clone()}; };
        copy(m.sfe1_);
        copy(m.sfe2_);
        for (auto& b : m.blocks_) {
            for (auto& c : b.dense) copy(c);
            copy(b.lff);
        }
        if (cfg_.gff) {
            copy(m.gff1_);
            copy(m.gff2_);
        }
        for (auto& u : m.up_) copy(u);
        copy(m.final_);
        return m;
    }

    ConvParams& sfe1() { return sfe1_; }
    ConvParams& sfe2() { return sfe2_; }
    std::vector<RdbParams>& blocks() { return blocks_; }
    const std::vector<RdbParams>& blocks() const { return blocks_; }
    ConvParams& gff1() { return gff1_; }
    ConvParams& gff2() { return gff2_; }
    std::vector<ConvParams>& up() { return up_; }
    ConvParams& final_conv() { return final_; }

private:
    static ConvParams make_conv(std::size_t cin, std::size_t cout, std::size_t k, std::mt19937_64& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(cin * k * k));
        std::uniform_real_distribution<double> u(-bound, bound);
        std::vector<float> w(cout * cin * k * k);
        for (auto& v : w) v = static_cast<float>(u(rng));
        return ConvParams{Tensor::from_data({cout, cin, k, k}, std::move(w), true),
                          Tensor::zeros({cout, 1, 1, 1}, true)};
    }

    ModelConfig cfg_;
    ConvParams sfe1_;
    ConvParams sfe2_;
    std::vector<RdbParams> blocks_;
    ConvParams gff1_;
    ConvParams gff2_;
    std::vector<ConvParams> up_;
    ConvParams final_;
};

}  // namespace rdn
