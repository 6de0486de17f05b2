// rdn: degrade / train / sr / eval / ablate.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rdn/cli.hpp"

namespace {

rdn::RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::string text;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw rdn::ConfigError({"cannot open config file " + path});
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    return rdn::RunConfig::parse(text, overrides);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace rdn::cli;
    CLI::App app{"Residual dense network super-resolution toolkit"};
    app.require_subcommand(1);

    // degrade
    auto* degrade = app.add_subcommand("degrade", "Synthesize LR images from a directory of HR PNGs");
    std::string hr_dir, out_dir, kind = "BI";
    int scale = 2;
    double noise = 30.0;
    std::uint64_t seed = 0;
    degrade->add_option("--hr", hr_dir, "HR PNG directory")->required();
    degrade->add_option("--out", out_dir, "Output directory")->required();
    degrade->add_option("--kind", kind, "BI, BD or DN")->capture_default_str();
    degrade->add_option("--scale", scale, "Scale factor (BD and DN require 3)")->capture_default_str();
    degrade->add_option("--noise", noise, "DN noise level on the 0..255 scale")->capture_default_str();
    degrade->add_option("--seed", seed, "DN noise seed")->capture_default_str();

    // train / ablate share the config surface
    std::string config_path;
    std::vector<std::string> overrides;
    std::string run_dir;
    auto* trainc = app.add_subcommand("train", "Train a model");
    auto* ablate = app.add_subcommand("ablate", "Train the 8 CM/LRL/GFF combinations and tabulate");
    for (auto* sc : {trainc, ablate}) {
        sc->add_option("-c,--config", config_path, "Key-value config file");
        sc->add_option("-s,--set", overrides, "Override, key=value (repeatable)");
        sc->add_option("--run-dir", run_dir, "Run directory (default: $RDN_RUN_DIR or ./runs)");
    }

    // sr
    auto* sr = app.add_subcommand("sr", "Super-resolve a directory of LR PNGs");
    std::string ckpt, lr_dir;
    bool ensemble = false;
    sr->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
    sr->add_option("--lr", lr_dir, "LR PNG directory")->required();
    sr->add_option("--out", out_dir, "Output directory")->required();
    sr->add_flag("--ensemble", ensemble, "Average over the 8 flip/rotation transforms");

    // eval
    auto* eval = app.add_subcommand("eval", "PSNR/SSIM on the Y channel");
    std::string sr_dir, report;
    int eval_scale = 0;
    eval->add_option("--sr", sr_dir, "SR PNG directory")->required();
    eval->add_option("--hr", hr_dir, "HR PNG directory")->required();
    eval->add_option("--scale", eval_scale, "Scale factor; also the border shave width")->required();
    eval->add_option("--report", report, "Write key-value records here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*degrade) {
            rdn::DegradationSpec spec;
            spec.kind = rdn::parse_degradation_kind(kind);
            spec.scale = scale;
            spec.noise_sigma = noise;
            spec.seed = seed;
            const auto res = cmd_degrade(hr_dir, out_dir, spec);
            std::cout << "degraded " << res.written << " image(s), " << res.failed << " failed\n";
            return (res.written == 0 && res.failed > 0) ? kData : kOk;
        }
        if (*trainc || *ablate) {
            if (!run_dir.empty()) overrides.push_back("paths.run_dir=" + run_dir);
            const auto cfg = load_run_config(config_path, overrides);
            if (*trainc) {
                const auto summary = cmd_train(cfg);
                std::cout << "trained " << summary.iterations << " iterations, best validation PSNR "
                          << summary.best_val_psnr << " dB\n";
            } else {
                cmd_ablate(cfg);
            }
            return kOk;
        }
        if (*sr) {
            const auto n = cmd_sr(ckpt, lr_dir, out_dir, ensemble);
            std::cout << "wrote " << n << " image(s) to " << out_dir << "\n";
            return kOk;
        }
        if (*eval) {
            if (eval_scale < 0) throw rdn::ConfigError({"--scale must be >= 0"});
            cmd_eval(sr_dir, hr_dir, static_cast<std::size_t>(eval_scale), report);
            return kOk;
        }
    } catch (const rdn::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const rdn::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const rdn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}
