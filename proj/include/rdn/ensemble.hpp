#pragma once

// Geometric self-ensemble: average of inverse-transformed predictions over the
// 8 dihedral transforms of the input.

#include <concepts>
#include <cstddef>

#include "rdn/dihedral.hpp"
#include "rdn/error.hpp"
#include "rdn/image.hpp"
#include "rdn/model.hpp"

namespace rdn {

template <typename F>
concept ImageModel = std::invocable<F, const Image&> &&
                     std::convertible_to<std::invoke_result_t<F, const Image&>, Image>;

/// Single-image super-resolution through an RdnModel, without graph recording.
inline Image super_resolve(const RdnModel& model, const Image& lr) {
    NoGradGuard no_grad;
    return to_image(model.forward(to_tensor(lr)));
}

template <ImageModel F>
Image self_ensemble(F&& model, const Image& lr) {
    Image acc;
    for (const auto t : DihedralTransform::all()) {
        const Image out = t.inverse().apply(model(t.apply(lr)));
        if (acc.empty()) {
            acc = Image(out.channels, out.height, out.width);
        } else if (!out.same_shape(acc)) {
            throw ShapeError("self_ensemble: model output " + out.shape_str() + " under " + t.name() +
                             " differs from " + acc.shape_str());
        }
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += out.data[i];
    }
    for (auto& v : acc.data) v /= 8.0f;
    return acc;
}

inline Image self_ensemble(const RdnModel& model, const Image& lr) {
    return self_ensemble([&](const Image& x) { return super_resolve(model, x); }, lr);
}

}  // namespace rdn
