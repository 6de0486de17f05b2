#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "rdn/image.hpp"

namespace rdn {

/// One of the 8 symmetries of the square: optional horizontal flip followed by
/// `rotations` quarter turns counter-clockwise.
class DihedralTransform {
public:
    constexpr DihedralTransform() = default;
    constexpr DihedralTransform(bool flip, int rotations) : flip_(flip), rot_(((rotations % 4) + 4) % 4) {}

    static constexpr DihedralTransform from_index(int i) { return DihedralTransform((i & 1) != 0, i >> 1); }
    static constexpr std::array<DihedralTransform, 8> all() {
        std::array<DihedralTransform, 8> out{};
        for (int i = 0; i < 8; ++i) out[static_cast<std::size_t>(i)] = from_index(i);
        return out;
    }

    constexpr int index() const { return rot_ * 2 + (flip_ ? 1 : 0); }
    constexpr bool flip() const { return flip_; }
    constexpr int rotations() const { return rot_; }
    constexpr bool is_identity() const { return !flip_ && rot_ == 0; }
    constexpr bool swaps_axes() const { return (rot_ & 1) != 0; }

    /// A reflection is its own inverse; a pure rotation is undone by the opposite rotation.
    constexpr DihedralTransform inverse() const {
        return flip_ ? *this : DihedralTransform(false, 4 - rot_);
    }

    /// this(other(img)).
    constexpr DihedralTransform compose(DihedralTransform other) const {
        // R^a F^f R^b F^g = R^(a + (f ? -b : b)) F^(f xor g)
        const int r = flip_ ? rot_ - other.rot_ : rot_ + other.rot_;
        return DihedralTransform(flip_ != other.flip_, r);
    }

    constexpr bool operator==(const DihedralTransform&) const = default;

    std::string name() const {
        return std::string(flip_ ? "flip+" : "") + "rot" + std::to_string(rot_ * 90);
    }

    Image apply(const Image& in) const {
        Image cur = in;
        if (flip_) cur = hflip(cur);
        for (int i = 0; i < rot_; ++i) cur = rot90(cur);
        return cur;
    }

private:
    static Image hflip(const Image& in) {
        Image out(in.channels, in.height, in.width);
        for (std::size_t c = 0; c < in.channels; ++c)
            for (std::size_t y = 0; y < in.height; ++y)
                for (std::size_t x = 0; x < in.width; ++x) out.at(c, y, x) = in.at(c, y, in.width - 1 - x);
        return out;
    }

    // Counter-clockwise quarter turn: out(y, x) = in(x, W - 1 - y).
    static Image rot90(const Image& in) {
        Image out(in.channels, in.width, in.height);
        for (std::size_t c = 0; c < in.channels; ++c)
            for (std::size_t y = 0; y < out.height; ++y)
                for (std::size_t x = 0; x < out.width; ++x) out.at(c, y, x) = in.at(c, x, in.width - 1 - y);
        return out;
    }

    bool flip_ = false;
    int rot_ = 0;
};

}  // namespace rdn
