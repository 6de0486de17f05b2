#pragma once

// The eight {CM, LRL, GFF} on/off combinations trained under one budget.

#include <algorithm>
#include <array>
#include <cstdio>
#include <functional>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "rdn/config.hpp"
#include "rdn/model.hpp"
#include "rdn/training.hpp"

namespace rdn {

struct Toggles {
    bool cm = false;
    bool lrl = false;
    bool gff = false;

    std::string tag() const {
        return std::string("CM") + (cm ? "1" : "0") + "LRL" + (lrl ? "1" : "0") + "GFF" + (gff ? "1" : "0");
    }
    bool operator==(const Toggles&) const = default;
};

/// Report order: baseline, one component, two, all three.
inline constexpr std::array<Toggles, 8> kAblationOrder = {{
    {false, false, false},
    {true, false, false},
    {false, true, false},
    {false, false, true},
    {true, true, false},
    {true, false, true},
    {false, true, true},
    {true, true, true},
}};

struct AblationRow {
    Toggles toggles;
    double val_psnr = 0.0;
    double final_loss = 0.0;
    std::vector<TrainRecord> records;
};

struct AblationOptions {
    std::filesystem::path run_dir;  // per-run telemetry under run_dir/<tag>/ when set
    std::uint64_t iterations = 0;   // 0: epochs * iters_per_epoch of the base config
    std::function<void(const Toggles&, const TrainRecord&)> on_record;
};

/// Trains every combination from the same seed and data; reports final validation PSNR.
inline std::vector<AblationRow> run_ablation(const ModelConfig& base, const TrainConfig& train_cfg,
                                             const std::vector<TrainPair>& train_set,
                                             const std::vector<TrainPair>& val_set, const AblationOptions& opt = {}) {
    std::vector<AblationRow> rows;
    for (const auto& t : kAblationOrder) {
        ModelConfig cfg = base;
        cfg.cm = t.cm;
        cfg.lrl = t.lrl;
        cfg.gff = t.gff;
        Trainer trainer(RdnModel::build(cfg, train_cfg.seed), train_cfg, train_set, val_set);
        TrainOptions to;
        to.max_iterations = opt.iterations;
        if (!opt.run_dir.empty()) to.run_dir = opt.run_dir / t.tag();
        if (opt.on_record) to.on_record = [&](const TrainRecord& r) { opt.on_record(t, r); };
        const auto summary = train(trainer, to);
        rows.push_back({t, summary.last_val_psnr, summary.final_loss, summary.records});
    }
    return rows;
}

/// Toggle rows and a PSNR row, one column per combination.
inline void write_ablation_table(std::ostream& os, const std::vector<AblationRow>& rows) {
    auto cell = [](const std::string& s) {
        std::string out = s;
        out.resize(std::max<std::size_t>(out.size(), 8), ' ');
        return out;
    };
    auto line = [&](const std::string& label, auto get) {
        os << cell(label);
        for (const auto& r : rows) os << " " << cell(get(r));
        os << "\n";
    };
    os << cell("");
    for (std::size_t i = 0; i < rows.size(); ++i) os << " " << cell(std::to_string(i + 1));
    os << "\n";
    line("CM", [](const AblationRow& r) { return std::string(r.toggles.cm ? "yes" : "no"); });
    line("LRL", [](const AblationRow& r) { return std::string(r.toggles.lrl ? "yes" : "no"); });
    line("GFF", [](const AblationRow& r) { return std::string(r.toggles.gff ? "yes" : "no"); });
    line("PSNR", [](const AblationRow& r) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", r.val_psnr);
        return std::string(buf);
    });
}

}  // namespace rdn
