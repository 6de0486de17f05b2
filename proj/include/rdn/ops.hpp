#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rdn/error.hpp"
#include "rdn/tensor.hpp"

namespace rdn {

namespace detail {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

// Upper bound on im2col buffer size (floats); spatial work is split into row tiles.
inline constexpr std::size_t kColBudget = std::size_t{1} << 22;

inline std::size_t tile_rows(std::size_t k_rows, std::size_t h, std::size_t w) {
    const std::size_t per_row = std::max<std::size_t>(1, k_rows * w);
    return std::clamp<std::size_t>(kColBudget / per_row, 1, h);
}

// col[(i*k + dy)*k + dx, (y - y0)*w + x] = in[i, y + dy - pad, x + dx - pad], zero outside.
inline void im2col(const float* in, std::size_t cin, std::size_t h, std::size_t w, std::size_t k,
                   std::size_t y0, std::size_t y1, float* col) {
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    const std::size_t cols = (y1 - y0) * w;
    for (std::size_t i = 0; i < cin; ++i) {
        const float* plane = in + i * h * w;
        for (std::size_t dy = 0; dy < k; ++dy) {
            for (std::size_t dx = 0; dx < k; ++dx) {
                float* dst = col + ((i * k + dy) * k + dx) * cols;
                const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(dx) - pad;
                for (std::size_t y = y0; y < y1; ++y) {
                    const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + dy) - pad;
                    float* row = dst + (y - y0) * w;
                    if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
                        std::fill(row, row + w, 0.0f);
                        continue;
                    }
                    const float* src = plane + static_cast<std::size_t>(sy) * w;
                    for (std::size_t x = 0; x < w; ++x) {
                        const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x) + ox;
                        row[x] = (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) ? 0.0f : src[sx];
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-add columns back into the padded input grid.
inline void col2im_add(const float* col, std::size_t cin, std::size_t h, std::size_t w, std::size_t k,
                       std::size_t y0, std::size_t y1, float* out) {
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    const std::size_t cols = (y1 - y0) * w;
    for (std::size_t i = 0; i < cin; ++i) {
        float* plane = out + i * h * w;
        for (std::size_t dy = 0; dy < k; ++dy) {
            for (std::size_t dx = 0; dx < k; ++dx) {
                const float* src = col + ((i * k + dy) * k + dx) * cols;
                const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(dx) - pad;
                for (std::size_t y = y0; y < y1; ++y) {
                    const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + dy) - pad;
                    if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                    float* dst = plane + static_cast<std::size_t>(sy) * w;
                    const float* row = src + (y - y0) * w;
                    for (std::size_t x = 0; x < w; ++x) {
                        const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x) + ox;
                        if (sx >= 0 && sx < static_cast<std::ptrdiff_t>(w)) dst[sx] += row[x];
                    }
                }
            }
        }
    }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    }
}

}  // namespace detail

/// Stride-1 convolution with symmetric zero padding (k-1)/2, so H and W are preserved.
/// weight is (C_out, C_in, k, k) with odd k; bias is (C_out, 1, 1, 1).
inline Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    const Shape4 xs = x.shape();
    const Shape4 ws = weight.shape();
    if (ws.h != ws.w || ws.h % 2 == 0) {
        throw ShapeError("conv2d: kernel must be square with odd size, got " + ws.str());
    }
    if (xs.c != ws.c) {
        throw ShapeError("conv2d: expected " + std::to_string(ws.c) + " input channels, got " +
                         std::to_string(xs.c));
    }
    if (bias.numel() != ws.n) {
        throw ShapeError("conv2d: bias has " + std::to_string(bias.numel()) + " entries for " +
                         std::to_string(ws.n) + " output channels");
    }
    const std::size_t k = ws.h;
    const std::size_t cin = ws.c;
    const std::size_t cout = ws.n;
    const std::size_t kk = cin * k * k;
    const std::size_t hw = xs.plane();
    const Shape4 os{xs.n, cout, xs.h, xs.w};
    std::vector<float> out(os.numel());
    if (out.empty()) return Tensor::from_data(os, std::move(out));

    const detail::ConstStridedMap wmat(weight.data().data(), static_cast<Eigen::Index>(cout),
                                       static_cast<Eigen::Index>(kk), Eigen::OuterStride<>(kk));
    const auto b = bias.data();
    const std::size_t rows_per_tile = detail::tile_rows(kk, xs.h, xs.w);
    std::vector<float> col(k == 1 ? 0 : kk * rows_per_tile * xs.w);

    for (std::size_t n = 0; n < xs.n; ++n) {
        const float* in = x.data().data() + n * cin * hw;
        float* dst = out.data() + n * cout * hw;
        for (std::size_t y0 = 0; y0 < xs.h; y0 += rows_per_tile) {
            const std::size_t y1 = std::min(xs.h, y0 + rows_per_tile);
            const auto t = static_cast<Eigen::Index>((y1 - y0) * xs.w);
            const float* src = in + y0 * xs.w;
            Eigen::Index src_stride = static_cast<Eigen::Index>(hw);
            if (k != 1) {
                detail::im2col(in, cin, xs.h, xs.w, k, y0, y1, col.data());
                src = col.data();
                src_stride = t;
            }
            const detail::ConstStridedMap cmat(src, static_cast<Eigen::Index>(kk), t,
                                               Eigen::OuterStride<>(src_stride));
            detail::StridedMap omat(dst + y0 * xs.w, static_cast<Eigen::Index>(cout), t,
                                    Eigen::OuterStride<>(static_cast<Eigen::Index>(hw)));
            omat.noalias() = wmat * cmat;
            for (std::size_t o = 0; o < cout; ++o) omat.row(static_cast<Eigen::Index>(o)).array() += b[o];
        }
    }

    return Tensor::make_result(os, std::move(out), {x, weight, bias}, [=](detail::Node& self) {
        auto& xin = *self.inputs[0];
        auto& wn = *self.inputs[1];
        auto& bn = *self.inputs[2];
        const float* gout = self.grad.data();
        std::vector<float> colbuf(kk * rows_per_tile * xs.w);
        std::vector<float> dcol(kk * rows_per_tile * xs.w);
        float* dw = wn.requires_grad ? wn.ensure_grad().data() : nullptr;
        float* dx = xin.requires_grad ? xin.ensure_grad().data() : nullptr;
        if (bn.requires_grad) {
            auto db = bn.ensure_grad();
            for (std::size_t o = 0; o < cout; ++o) {
                double acc = 0.0;
                for (std::size_t n = 0; n < xs.n; ++n) {
                    const float* g = gout + (n * cout + o) * hw;
                    for (std::size_t i = 0; i < hw; ++i) acc += g[i];
                }
                db[o] += static_cast<float>(acc);
            }
        }
        const detail::ConstStridedMap wm(wn.value.data(), static_cast<Eigen::Index>(cout),
                                         static_cast<Eigen::Index>(kk), Eigen::OuterStride<>(kk));
        for (std::size_t n = 0; n < xs.n; ++n) {
            const float* in = xin.value.data() + n * cin * hw;
            const float* g = gout + n * cout * hw;
            for (std::size_t y0 = 0; y0 < xs.h; y0 += rows_per_tile) {
                const std::size_t y1 = std::min(xs.h, y0 + rows_per_tile);
                const auto t = static_cast<Eigen::Index>((y1 - y0) * xs.w);
                const detail::ConstStridedMap gm(g + y0 * xs.w, static_cast<Eigen::Index>(cout), t,
                                                 Eigen::OuterStride<>(static_cast<Eigen::Index>(hw)));
                if (dw) {
                    const float* src = in + y0 * xs.w;
                    Eigen::Index src_stride = static_cast<Eigen::Index>(hw);
                    if (k != 1) {
                        detail::im2col(in, cin, xs.h, xs.w, k, y0, y1, colbuf.data());
                        src = colbuf.data();
                        src_stride = t;
                    }
                    const detail::ConstStridedMap cm(src, static_cast<Eigen::Index>(kk), t,
                                                     Eigen::OuterStride<>(src_stride));
                    detail::StridedMap dwm(dw, static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(kk),
                                           Eigen::OuterStride<>(kk));
                    dwm.noalias() += gm * cm.transpose();
                }
                if (dx) {
                    float* dxn = dx + n * cin * hw;
                    if (k == 1) {
                        detail::StridedMap dxm(dxn + y0 * xs.w, static_cast<Eigen::Index>(cin), t,
                                               Eigen::OuterStride<>(static_cast<Eigen::Index>(hw)));
                        dxm.noalias() += wm.transpose() * gm;
                    } else {
                        detail::StridedMap dcm(dcol.data(), static_cast<Eigen::Index>(kk), t, Eigen::OuterStride<>(t));
                        dcm.noalias() = wm.transpose() * gm;
                        detail::col2im_add(dcol.data(), cin, xs.h, xs.w, k, y0, y1, dxn);
                    }
                }
            }
        }
    });
}

inline Tensor relu(const Tensor& x) {
    auto in = x.data();
    std::vector<float> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
    return Tensor::make_result(x.shape(), std::move(out), {x}, [](detail::Node& self) {
        auto& xin = *self.inputs[0];
        auto dx = xin.ensure_grad();
        // Subgradient at exactly zero is zero.
        for (std::size_t i = 0; i < dx.size(); ++i) {
            if (xin.value[i] > 0.0f) dx[i] += self.grad[i];
        }
    });
}

inline Tensor add(const Tensor& x, const Tensor& y) {
    detail::require_same_shape(x, y, "add");
    auto a = x.data();
    auto b = y.data();
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return Tensor::make_result(x.shape(), std::move(out), {x, y}, [](detail::Node& self) {
        for (auto& in : self.inputs) {
            if (!in->requires_grad) continue;
            auto d = in->ensure_grad();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
        }
    });
}

/// Elementwise product.
inline Tensor mul(const Tensor& x, const Tensor& y) {
    detail::require_same_shape(x, y, "mul");
    auto a = x.data();
    auto b = y.data();
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return Tensor::make_result(x.shape(), std::move(out), {x, y}, [](detail::Node& self) {
        auto& xa = *self.inputs[0];
        auto& yb = *self.inputs[1];
        if (xa.requires_grad) {
            auto d = xa.ensure_grad();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * yb.value[i];
        }
        if (yb.requires_grad) {
            auto d = yb.ensure_grad();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * xa.value[i];
        }
    });
}

/// Channel concatenation in argument order.
inline Tensor concat_channels(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw ShapeError("concat_channels: no inputs");
    const Shape4 first = xs.front().shape();
    std::size_t total_c = 0;
    for (const auto& t : xs) {
        const Shape4 s = t.shape();
        if (s.n != first.n || s.h != first.h || s.w != first.w) {
            throw ShapeError("concat_channels: spatial/batch mismatch " + first.str() + " vs " + s.str());
        }
        total_c += s.c;
    }
    if (xs.size() == 1) return xs.front();
    const Shape4 os{first.n, total_c, first.h, first.w};
    const std::size_t hw = first.plane();
    std::vector<float> out(os.numel());
    std::vector<std::size_t> widths;
    widths.reserve(xs.size());
    for (std::size_t n = 0; n < first.n; ++n) {
        float* dst = out.data() + n * total_c * hw;
        for (const auto& t : xs) {
            const std::size_t block = t.shape().c * hw;
            const float* src = t.data().data() + n * block;
            std::copy(src, src + block, dst);
            dst += block;
        }
    }
    for (const auto& t : xs) widths.push_back(t.shape().c);
    return Tensor::make_result(os, std::move(out), xs, [widths, os, hw](detail::Node& self) {
        for (std::size_t n = 0; n < os.n; ++n) {
            const float* src = self.grad.data() + n * os.c * hw;
            for (std::size_t i = 0; i < self.inputs.size(); ++i) {
                const std::size_t block = widths[i] * hw;
                auto& in = *self.inputs[i];
                if (in.requires_grad) {
                    float* dst = in.ensure_grad().data() + n * block;
                    for (std::size_t j = 0; j < block; ++j) dst[j] += src[j];
                }
                src += block;
            }
        }
    });
}

/// Channels [begin, begin + count) of x.
inline Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count) {
    const Shape4 xs = x.shape();
    if (begin + count > xs.c) {
        throw ShapeError("slice_channels: range [" + std::to_string(begin) + "," + std::to_string(begin + count) +
                         ") exceeds " + std::to_string(xs.c) + " channels");
    }
    const Shape4 os{xs.n, count, xs.h, xs.w};
    const std::size_t hw = xs.plane();
    std::vector<float> out(os.numel());
    for (std::size_t n = 0; n < xs.n; ++n) {
        const float* src = x.data().data() + (n * xs.c + begin) * hw;
        std::copy(src, src + count * hw, out.data() + n * count * hw);
    }
    return Tensor::make_result(os, std::move(out), {x}, [xs, begin, count, hw](detail::Node& self) {
        auto dx = self.inputs[0]->ensure_grad();
        for (std::size_t n = 0; n < xs.n; ++n) {
            float* dst = dx.data() + (n * xs.c + begin) * hw;
            const float* src = self.grad.data() + n * count * hw;
            for (std::size_t j = 0; j < count * hw; ++j) dst[j] += src[j];
        }
    });
}

namespace detail {

// Index map shared by pixel_shuffle and its inverse:
// shuffled(n, c, y*r + dy, x*r + dx) <-> packed(n, c*r*r + dy*r + dx, y, x).
template <typename F>
void for_each_shuffle_pair(const Shape4& packed, std::size_t r, F&& f) {
    const std::size_t c_out = packed.c / (r * r);
    const std::size_t H = packed.h * r;
    const std::size_t W = packed.w * r;
    for (std::size_t n = 0; n < packed.n; ++n)
        for (std::size_t c = 0; c < c_out; ++c)
            for (std::size_t dy = 0; dy < r; ++dy)
                for (std::size_t dx = 0; dx < r; ++dx) {
                    const std::size_t pc = c * r * r + dy * r + dx;
                    for (std::size_t y = 0; y < packed.h; ++y)
                        for (std::size_t x = 0; x < packed.w; ++x) {
                            const std::size_t pi = ((n * packed.c + pc) * packed.h + y) * packed.w + x;
                            const std::size_t si = ((n * c_out + c) * H + y * r + dy) * W + x * r + dx;
                            f(pi, si);
                        }
                }
}

}  // namespace detail

/// Sub-pixel rearrangement (N, C*r^2, H, W) -> (N, C, rH, rW).
inline Tensor pixel_shuffle(const Tensor& x, std::size_t r) {
    const Shape4 xs = x.shape();
    if (r == 0 || xs.c % (r * r) != 0) {
        throw ShapeError("pixel_shuffle: " + std::to_string(xs.c) + " channels not divisible by r^2 = " +
                         std::to_string(r * r));
    }
    const Shape4 os{xs.n, xs.c / (r * r), xs.h * r, xs.w * r};
    std::vector<float> out(os.numel());
    auto in = x.data();
    detail::for_each_shuffle_pair(xs, r, [&](std::size_t pi, std::size_t si) { out[si] = in[pi]; });
    return Tensor::make_result(os, std::move(out), {x}, [xs, r](detail::Node& self) {
        auto dx = self.inputs[0]->ensure_grad();
        detail::for_each_shuffle_pair(xs, r, [&](std::size_t pi, std::size_t si) { dx[pi] += self.grad[si]; });
    });
}

/// Inverse of pixel_shuffle: (N, C, rH, rW) -> (N, C*r^2, H, W).
inline Tensor pixel_unshuffle(const Tensor& x, std::size_t r) {
    const Shape4 xs = x.shape();
    if (r == 0 || xs.h % r != 0 || xs.w % r != 0) {
        throw ShapeError("pixel_unshuffle: spatial size " + xs.str() + " not divisible by " + std::to_string(r));
    }
    const Shape4 ps{xs.n, xs.c * r * r, xs.h / r, xs.w / r};
    std::vector<float> out(ps.numel());
    auto in = x.data();
    detail::for_each_shuffle_pair(ps, r, [&](std::size_t pi, std::size_t si) { out[pi] = in[si]; });
    return Tensor::make_result(ps, std::move(out), {x}, [ps, r](detail::Node& self) {
        auto dx = self.inputs[0]->ensure_grad();
        detail::for_each_shuffle_pair(ps, r, [&](std::size_t pi, std::size_t si) { dx[si] += self.grad[pi]; });
    });
}

/// Sum of all elements as a (1,1,1,1) tensor. Accumulates in double.
inline Tensor sum(const Tensor& x) {
    double acc = 0.0;
    for (float v : x.data()) acc += v;
    return Tensor::make_result({1, 1, 1, 1}, {static_cast<float>(acc)}, {x}, [](detail::Node& self) {
        auto dx = self.inputs[0]->ensure_grad();
        const float g = self.grad[0];
        for (auto& d : dx) d += g;
    });
}

/// Mean absolute error as a (1,1,1,1) tensor.
inline Tensor l1_loss(const Tensor& pred, const Tensor& target) {
    detail::require_same_shape(pred, target, "l1_loss");
    auto p = pred.data();
    auto t = target.data();
    if (p.empty()) throw ShapeError("l1_loss: empty tensors");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(static_cast<double>(p[i]) - t[i]);
    const double count = static_cast<double>(p.size());
    return Tensor::make_result({1, 1, 1, 1}, {static_cast<float>(acc / count)}, {pred, target},
                               [count](detail::Node& self) {
                                   auto& pn = *self.inputs[0];
                                   auto& tn = *self.inputs[1];
                                   const float scale = static_cast<float>(self.grad[0] / count);
                                   auto sign = [](float d) { return d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f); };
                                   if (pn.requires_grad) {
                                       auto dp = pn.ensure_grad();
                                       for (std::size_t i = 0; i < dp.size(); ++i)
                                           dp[i] += scale * sign(pn.value[i] - tn.value[i]);
                                   }
                                   if (tn.requires_grad) {
                                       auto dt = tn.ensure_grad();
                                       for (std::size_t i = 0; i < dt.size(); ++i)
                                           dt[i] -= scale * sign(pn.value[i] - tn.value[i]);
                                   }
                               });
}

}  // namespace rdn
