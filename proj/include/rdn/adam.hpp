#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rdn/error.hpp"
#include "rdn/model.hpp"

namespace rdn {

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<std::string> names;
    std::vector<std::vector<float>> m;
    std::vector<std::vector<float>> v;

    bool operator==(const AdamState&) const = default;
};

/// Bias-corrected Adam update of every parameter from its accumulated gradient.
/// Missing gradients count as zero. A non-finite gradient aborts the step before any
/// parameter is touched.
inline void adam_step(std::vector<NamedParam>& params, AdamState& state, double lr) {
    if (state.names.empty()) {
        for (const auto& p : params) {
            state.names.push_back(p.name);
            state.m.emplace_back(p.tensor.numel(), 0.0f);
            state.v.emplace_back(p.tensor.numel(), 0.0f);
        }
    }
    if (state.names.size() != params.size()) {
        throw Error("adam_step: optimizer tracks " + std::to_string(state.names.size()) + " parameters, got " +
                    std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        if (p.name != state.names[i] || state.m[i].size() != p.tensor.numel()) {
            throw Error("adam_step: parameter " + p.name + " does not match optimizer slot " + state.names[i]);
        }
        if (!p.tensor.has_grad()) continue;
        for (float g : p.tensor.grad()) {
            if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter " + p.name);
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        auto w = p.tensor.mutable_data();
        auto& m = state.m[i];
        auto& v = state.v[i];
        const bool has = p.tensor.has_grad();
        const auto g = has ? p.tensor.grad() : std::span<const float>{};
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double gj = has ? g[j] : 0.0;
            const double mj = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
            const double vj = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
            m[j] = static_cast<float>(mj);
            v[j] = static_cast<float>(vj);
            const double update = lr * (mj / c1) / (std::sqrt(vj / c2) + state.eps);
            w[j] = static_cast<float>(w[j] - update);
        }
    }
}

}  // namespace rdn
