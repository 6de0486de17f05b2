#pragma once

// File-level commands behind the `rdn` executable. Each returns data for tests and
// writes its artifacts deterministically.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "rdn/ablation.hpp"
#include "rdn/checkpoint.hpp"
#include "rdn/config.hpp"
#include "rdn/degradation.hpp"
#include "rdn/ensemble.hpp"
#include "rdn/error.hpp"
#include "rdn/metrics.hpp"
#include "rdn/png_io.hpp"
#include "rdn/training.hpp"

namespace rdn::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Run directory from the config, then $RDN_RUN_DIR, then ./runs.
inline fs::path resolve_run_dir(const std::string& configured) {
    if (!configured.empty()) return configured;
    if (const char* env = std::getenv("RDN_RUN_DIR"); env && *env) return env;
    return "runs";
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Images on disk are 8-bit, so resampling follows imresize's uint8 behaviour.
inline constexpr ResizeOptions kFileResize{Boundary::Symmetric, true};

struct DegradeResult {
    std::size_t written = 0;
    std::size_t failed = 0;
};

/// One LR PNG per HR PNG (same file name) plus manifest.txt. DN noise seeds are derived
/// from the base seed and the file stem so outputs do not depend on directory contents.
inline DegradeResult cmd_degrade(const fs::path& hr_dir, const fs::path& out_dir, const DegradationSpec& spec,
                                 std::ostream& log = std::cerr) {
    spec.validate();
    const auto files = list_pngs(hr_dir);
    fs::create_directories(out_dir);
    std::ofstream manifest(out_dir / "manifest.txt", std::ios::trunc);
    manifest << "kind = " << to_string(spec.kind) << "\n"
             << "scale = " << spec.scale << "\n";
    if (spec.kind == DegradationKind::BD) manifest << "blur_sigma = " << format_double(spec.blur_sigma) << "\n";
    if (spec.kind == DegradationKind::DN) {
        manifest << "noise_sigma = " << format_double(spec.noise_sigma) << "\n"
                 << "seed = " << spec.seed << "\n";
    }
    DegradeResult res;
    for (const auto& [stem, path] : files) {
        try {
            const Image hr = read_png(path);
            DegradationSpec s = spec;
            s.seed = spec.seed ^ fnv1a(stem);
            const Image lr = degrade(hr, s, kFileResize);
            write_png(out_dir / (stem + ".png"), lr);
            manifest << "file = " << stem << ".png hr=" << hr.width << "x" << hr.height << " lr=" << lr.width << "x"
                     << lr.height << "\n";
            ++res.written;
        } catch (const DataError& e) {
            log << "warning: skipping " << path.string() << ": " << e.what() << "\n";
            ++res.failed;
        }
    }
    return res;
}

/// HR images from hr_dir (cropped to a multiple of the scale) paired with LR images from
/// lr_dir, or degraded in memory and rounded to 8 bits when lr_dir is empty.
inline std::vector<TrainPair> load_pairs(const fs::path& hr_dir, const fs::path& lr_dir, const DegradationSpec& spec,
                                         std::size_t limit = 0) {
    const auto hrs = list_pngs(hr_dir);
    std::map<std::string, fs::path> lrs;
    if (!lr_dir.empty()) lrs = list_pngs(lr_dir);
    std::vector<TrainPair> out;
    for (const auto& [stem, path] : hrs) {
        if (limit && out.size() >= limit) break;
        TrainPair tp;
        tp.name = stem;
        tp.hr = crop_to_multiple(read_png(path), static_cast<std::size_t>(spec.scale));
        if (!lr_dir.empty()) {
            auto it = lrs.find(stem);
            if (it == lrs.end()) throw DataError("no LR image for " + stem + " in " + lr_dir.string());
            tp.lr = read_png(it->second);
        } else {
            DegradationSpec s = spec;
            s.seed = spec.seed ^ fnv1a(stem);
            tp.lr = quantize8(degrade(tp.hr, s, kFileResize));
        }
        if (tp.lr.height * static_cast<std::size_t>(spec.scale) != tp.hr.height ||
            tp.lr.width * static_cast<std::size_t>(spec.scale) != tp.hr.width) {
            throw DataError("LR/HR size mismatch for " + stem + ": " + tp.lr.shape_str() + " vs " + tp.hr.shape_str());
        }
        out.push_back(std::move(tp));
    }
    return out;
}

inline void write_effective_config(const fs::path& run_dir, const RunConfig& cfg) {
    fs::create_directories(run_dir);
    std::ofstream(run_dir / "config.txt", std::ios::trunc) << cfg.to_text();
}

inline std::vector<TrainPair> load_validation(const RunConfig& cfg) {
    if (cfg.paths.val_hr.empty() || cfg.train.val_images == 0) return {};
    return load_pairs(cfg.paths.val_hr, cfg.paths.val_lr, cfg.train.degradation,
                      static_cast<std::size_t>(cfg.train.val_images));
}

inline TrainSummary cmd_train(RunConfig cfg, std::ostream& log = std::cerr) {
    if (cfg.paths.train_hr.empty()) throw ConfigError({"paths.train_hr is required"});
    cfg.paths.run_dir = resolve_run_dir(cfg.paths.run_dir).string();
    const fs::path run_dir = cfg.paths.run_dir;
    write_effective_config(run_dir, cfg);
    auto train_set = load_pairs(cfg.paths.train_hr, cfg.paths.train_lr, cfg.train.degradation);
    auto val_set = load_validation(cfg);
    Trainer trainer(RdnModel::build(cfg.model, cfg.train.seed), cfg.train, std::move(train_set), std::move(val_set));
    TrainOptions opt;
    opt.run_dir = run_dir;
    opt.on_record = [&](const TrainRecord& r) { log << r.str() << "\n"; };
    return train(trainer, opt);
}

/// Super-resolves every PNG in lr_dir into out_dir under the same name.
inline std::size_t cmd_sr(const fs::path& checkpoint, const fs::path& lr_dir, const fs::path& out_dir, bool ensemble) {
    const RdnModel model = restore_model(load_checkpoint(checkpoint));
    const auto files = list_pngs(lr_dir);
    fs::create_directories(out_dir);
    for (const auto& [stem, path] : files) {
        Image lr = read_png(path);
        if (lr.channels == 1 && model.config().channels == 3) {
            Image rgb(3, lr.height, lr.width);
            for (std::size_t c = 0; c < 3; ++c)
                std::copy(lr.data.begin(), lr.data.end(), rgb.data.begin() + static_cast<std::ptrdiff_t>(c * lr.plane()));
            lr = std::move(rgb);
        }
        const Image sr = ensemble ? self_ensemble(model, lr) : super_resolve(model, lr);
        write_png(out_dir / (stem + ".png"), sr);
    }
    return files.size();
}

inline EvalReport cmd_eval(const fs::path& sr_dir, const fs::path& hr_dir, std::size_t scale,
                           const fs::path& report_path, std::ostream& out = std::cout) {
    const auto t0 = std::chrono::steady_clock::now();
    EvalReport report = evaluate_dataset(sr_dir, hr_dir, EvalProtocol{scale, true}, scale);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.write_text(out);
    if (!report_path.empty()) {
        if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
        std::ofstream os(report_path, std::ios::trunc);
        report.write_records(os);
    }
    return report;
}

inline std::vector<AblationRow> cmd_ablate(RunConfig cfg, std::ostream& out = std::cout) {
    if (cfg.paths.train_hr.empty()) throw ConfigError({"paths.train_hr is required"});
    cfg.paths.run_dir = resolve_run_dir(cfg.paths.run_dir).string();
    const fs::path run_dir = cfg.paths.run_dir;
    write_effective_config(run_dir, cfg);
    const auto train_set = load_pairs(cfg.paths.train_hr, cfg.paths.train_lr, cfg.train.degradation);
    auto val_set = load_validation(cfg);
    if (val_set.empty()) throw ConfigError({"ablation needs validation images (paths.val_hr, train.val_images > 0)"});
    AblationOptions opt;
    opt.run_dir = run_dir / "ablation";
    const auto rows = run_ablation(cfg.model, cfg.train, train_set, val_set, opt);
    write_ablation_table(out, rows);
    std::ofstream table(run_dir / "ablation.txt", std::ios::trunc);
    write_ablation_table(table, rows);
    return rows;
}

}  // namespace rdn::cli
