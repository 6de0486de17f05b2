#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rdn/degradation.hpp"
#include "rdn/error.hpp"

namespace rdn {

struct TrainConfig {
    int batch = 16;
    int patch = 32;  // LR patch side; HR patch side is patch * scale
    double lr = 1e-4;
    int halve_every = 200;  // epochs
    int iters_per_epoch = 1000;
    int epochs = 200;
    std::uint64_t seed = 1;
    int val_images = 5;
    int log_every = 100;  // iterations between telemetry records
    bool augment = true;
    DegradationSpec degradation{};

    bool operator==(const TrainConfig& o) const {
        return batch == o.batch && patch == o.patch && lr == o.lr && halve_every == o.halve_every &&
               iters_per_epoch == o.iters_per_epoch && epochs == o.epochs && seed == o.seed &&
               val_images == o.val_images && log_every == o.log_every && augment == o.augment &&
               degradation.kind == o.degradation.kind && degradation.scale == o.degradation.scale &&
               degradation.noise_sigma == o.degradation.noise_sigma && degradation.seed == o.degradation.seed &&
               degradation.blur_sigma == o.degradation.blur_sigma;
    }

    std::vector<std::string> problems() const {
        std::vector<std::string> out;
        if (batch < 1) out.push_back("train.batch must be >= 1");
        if (patch < 1) out.push_back("train.patch must be >= 1");
        if (!(lr > 0.0) || !std::isfinite(lr)) out.push_back("train.lr must be a positive number");
        if (halve_every < 1) out.push_back("train.halve_every must be >= 1");
        if (iters_per_epoch < 1) out.push_back("train.iters_per_epoch must be >= 1");
        if (epochs < 0) out.push_back("train.epochs must be >= 0");
        if (val_images < 0) out.push_back("train.val_images must be >= 0");
        if (log_every < 1) out.push_back("train.log_every must be >= 1");
        for (auto& p : degradation.problems()) out.push_back(p);
        return out;
    }

    void validate() const {
        if (auto p = problems(); !p.empty()) throw ConfigError(std::move(p));
    }
};

/// lr0 * 0.5^floor(epoch / halve_every).
inline double lr_schedule(std::uint64_t epoch, const TrainConfig& cfg) {
    const auto halvings = epoch / static_cast<std::uint64_t>(cfg.halve_every);
    return cfg.lr * std::ldexp(1.0, -static_cast<int>(std::min<std::uint64_t>(halvings, 1000)));
}

}  // namespace rdn
