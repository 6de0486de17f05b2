#pragma once

// Binary checkpoint:
//
//   "RDN1"                      magic
//   u32 version
//   u32 n, n bytes              metadata text (canonical key = value lines)
//   u32 count                   parameter records:
//     u32 len, name bytes, u8 dtype (1 = f32), u32 rank, rank x u32 dims, f32 values
//   u32 count                   optimizer records:
//     u32 len, name bytes, u64 step, f64 beta1, f64 beta2, f64 eps, u32 slots,
//       per slot: u32 len, name bytes, u64 numel, numel f32 (m), numel f32 (v)
//
// All integers and floats are little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rdn/adam.hpp"
#include "rdn/config.hpp"
#include "rdn/error.hpp"
#include "rdn/model.hpp"

namespace rdn {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 1;

struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    ModelConfig model;
    TrainConfig train;
    std::vector<NamedParam> params;
    AdamState adam;
    std::uint64_t epoch = 0;
    std::uint64_t iteration = 0;
    std::string rng_state;
    double running_loss_sum = 0.0;
    std::uint64_t running_count = 0;
    double best_val_psnr = 0.0;

    /// Snapshot with deep copies of the model parameters.
    static Checkpoint of(const RdnModel& m) {
        Checkpoint c;
        c.model = m.config();
        for (const auto& p : m.parameters()) c.params.push_back({p.name, p.tensor.detach()});
        return c;
    }

    std::string metadata() const {
        RunConfig rc;
        rc.model = model;
        rc.train = train;
        std::string text = rc.to_text();
        // Paths are run-specific and stay out of the checkpoint.
        std::string filtered;
        std::istringstream in(text);
        for (std::string line; std::getline(in, line);) {
            if (line.rfind("paths.", 0) != 0) filtered += line + "\n";
        }
        filtered += "state.epoch = " + std::to_string(epoch) + "\n";
        filtered += "state.iteration = " + std::to_string(iteration) + "\n";
        filtered += "state.running_loss_sum = " + format_double(running_loss_sum) + "\n";
        filtered += "state.running_count = " + std::to_string(running_count) + "\n";
        filtered += "state.best_val_psnr = " + format_double(best_val_psnr) + "\n";
        filtered += "state.rng = " + rng_state + "\n";
        return filtered;
    }
};

namespace detail {

class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    void bytes(const void* p, std::size_t n) { os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 4);
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 8);
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void floats(std::span<const float> v) {
        for (float f : v) f32(f);
    }

private:
    std::ostream& os_;
};

class Reader {
public:
    explicit Reader(std::istream& is) : is_(is) {}

    void bytes(void* p, std::size_t n) {
        is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n) throw DataError("checkpoint truncated");
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t limit = 1u << 20) {
        const auto n = u32();
        if (n > limit) throw DataError("checkpoint string length " + std::to_string(n) + " exceeds limit");
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    std::vector<float> floats(std::size_t n) {
        std::vector<float> v(n);
        for (auto& f : v) f = f32();
        return v;
    }

private:
    std::istream& is_;
};

inline std::vector<std::uint32_t> logical_shape(const std::string& name, const Shape4& s) {
    // Biases are stored as vectors.
    if (name.size() > 2 && name.compare(name.size() - 2, 2, ".b") == 0) return {static_cast<std::uint32_t>(s.n)};
    return {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c), static_cast<std::uint32_t>(s.h),
            static_cast<std::uint32_t>(s.w)};
}

}  // namespace detail

inline void save_checkpoint(std::ostream& os, const Checkpoint& ck) {
    detail::Writer w(os);
    w.bytes("RDN1", 4);
    w.u32(ck.version);
    w.str(ck.metadata());
    w.u32(static_cast<std::uint32_t>(ck.params.size()));
    for (const auto& p : ck.params) {
        w.str(p.name);
        w.u8(kDtypeF32);
        const auto dims = detail::logical_shape(p.name, p.tensor.shape());
        w.u32(static_cast<std::uint32_t>(dims.size()));
        for (auto d : dims) w.u32(d);
        w.floats(p.tensor.data());
    }
    const bool has_adam = !ck.adam.names.empty() || ck.adam.step > 0;
    w.u32(has_adam ? 1 : 0);
    if (has_adam) {
        w.str("adam");
        w.u64(ck.adam.step);
        w.f64(ck.adam.beta1);
        w.f64(ck.adam.beta2);
        w.f64(ck.adam.eps);
        w.u32(static_cast<std::uint32_t>(ck.adam.names.size()));
        for (std::size_t i = 0; i < ck.adam.names.size(); ++i) {
            w.str(ck.adam.names[i]);
            w.u64(ck.adam.m[i].size());
            w.floats(ck.adam.m[i]);
            w.floats(ck.adam.v[i]);
        }
    }
    if (!os) throw DataError("checkpoint write failed");
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    // Write to a sibling temp file first so a crash never leaves a torn checkpoint.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot open " + tmp.string() + " for writing");
        save_checkpoint(os, ck);
    }
    std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(std::istream& is) {
    detail::Reader r(is);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "RDN1", 4) != 0) throw DataError("not a checkpoint (bad magic)");
    Checkpoint ck;
    ck.version = r.u32();
    if (ck.version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(ck.version));
    }
    const std::string meta = r.str();

    RunConfig rc;
    std::vector<std::string> errors;
    std::map<std::string, std::string> state;
    std::istringstream in(meta);
    std::string config_text;
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("state.", 0) == 0) {
            const auto eq = line.find(" = ");
            if (eq == std::string::npos) throw DataError("bad checkpoint metadata line: " + line);
            state[line.substr(0, eq)] = line.substr(eq + 3);
        } else {
            config_text += line + "\n";
        }
    }
    rc.apply_text(config_text, errors);
    if (!errors.empty()) throw ConfigError(std::move(errors));
    ck.model = rc.model;
    ck.train = rc.train;
    auto need = [&](const char* key) -> const std::string& {
        auto it = state.find(key);
        if (it == state.end()) throw DataError(std::string("checkpoint metadata lacks ") + key);
        return it->second;
    };
    ck.epoch = detail::parse_number<std::uint64_t>("state.epoch", need("state.epoch"));
    ck.iteration = detail::parse_number<std::uint64_t>("state.iteration", need("state.iteration"));
    ck.running_loss_sum = detail::parse_number<double>("state.running_loss_sum", need("state.running_loss_sum"));
    ck.running_count = detail::parse_number<std::uint64_t>("state.running_count", need("state.running_count"));
    ck.best_val_psnr = detail::parse_number<double>("state.best_val_psnr", need("state.best_val_psnr"));
    ck.rng_state = need("state.rng");

    const auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.str();
        if (r.u8() != kDtypeF32) throw DataError("parameter " + name + ": unsupported dtype");
        const auto rank = r.u32();
        if (rank != 1 && rank != 4) throw DataError("parameter " + name + ": unsupported rank " + std::to_string(rank));
        std::vector<std::size_t> dims(rank);
        for (auto& d : dims) d = r.u32();
        const Shape4 shape = rank == 1 ? Shape4{dims[0], 1, 1, 1} : Shape4{dims[0], dims[1], dims[2], dims[3]};
        ck.params.push_back({std::move(name), Tensor::from_data(shape, r.floats(shape.numel()))});
    }
    const auto opt_count = r.u32();
    for (std::uint32_t i = 0; i < opt_count; ++i) {
        const std::string kind = r.str();
        if (kind != "adam") throw DataError("unknown optimizer record '" + kind + "'");
        ck.adam.step = r.u64();
        ck.adam.beta1 = r.f64();
        ck.adam.beta2 = r.f64();
        ck.adam.eps = r.f64();
        const auto slots = r.u32();
        for (std::uint32_t s = 0; s < slots; ++s) {
            ck.adam.names.push_back(r.str());
            const auto n = r.u64();
            if (n > (std::uint64_t{1} << 32)) throw DataError("optimizer slot too large");
            ck.adam.m.push_back(r.floats(n));
            ck.adam.v.push_back(r.floats(n));
        }
    }
    return ck;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint " + path.string());
    return load_checkpoint(is);
}

/// Copies checkpoint parameters into model. Every name must match exactly once.
inline void load_parameters(RdnModel& model, const Checkpoint& ck) {
    auto params = model.parameters();
    std::map<std::string, Tensor> by_name;
    for (auto& p : params) by_name.emplace(p.name, p.tensor);
    std::vector<std::string> problems;
    std::map<std::string, bool> seen;
    for (const auto& p : ck.params) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) {
            problems.push_back("unknown parameter '" + p.name + "'");
            continue;
        }
        if (it->second.shape() != p.tensor.shape()) {
            problems.push_back("parameter '" + p.name + "' has shape " + p.tensor.shape().str() + ", model expects " +
                               it->second.shape().str());
            continue;
        }
        seen[p.name] = true;
        auto dst = it->second.mutable_data();
        auto src = p.tensor.data();
        std::copy(src.begin(), src.end(), dst.begin());
    }
    for (const auto& p : params)
        if (!seen.count(p.name)) problems.push_back("missing parameter '" + p.name + "'");
    if (!problems.empty()) {
        std::string msg = "checkpoint does not match model:";
        for (const auto& s : problems) msg += "\n  " + s;
        throw DataError(msg);
    }
}

/// Rebuilds the model described by the checkpoint and loads its weights.
inline RdnModel restore_model(const Checkpoint& ck) {
    RdnModel m = RdnModel::build(ck.model, 0);
    load_parameters(m, ck);
    return m;
}

}  // namespace rdn
