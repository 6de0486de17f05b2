#pragma once

// Patch sampling with dihedral augmentation, the L1/Adam training loop with step-decay
// learning rate, validation, telemetry and checkpointing.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rdn/adam.hpp"
#include "rdn/checkpoint.hpp"
#include "rdn/dihedral.hpp"
#include "rdn/ensemble.hpp"
#include "rdn/error.hpp"
#include "rdn/image.hpp"
#include "rdn/metrics.hpp"
#include "rdn/model.hpp"
#include "rdn/ops.hpp"
#include "rdn/train_config.hpp"

namespace rdn {

struct TrainPair {
    std::string name;
    Image lr;
    Image hr;
};

struct Batch {
    Tensor lr;  // (B, C, p, p)
    Tensor hr;  // (B, C, p*r, p*r)
};

/// Uniform over images, then uniform over valid LR positions; each pair gets one random
/// dihedral transform applied to both members.
inline Batch sample_batch(const std::vector<TrainPair>& pairs, const TrainConfig& cfg, int scale,
                          std::mt19937_64& rng) {
    if (pairs.empty()) throw DataError("sample_batch: empty dataset");
    const auto p = static_cast<std::size_t>(cfg.patch);
    const auto r = static_cast<std::size_t>(scale);
    for (const auto& tp : pairs) {
        if (tp.lr.height < p || tp.lr.width < p) {
            throw DataError("training image " + tp.name + " (LR " + tp.lr.shape_str() + ") is smaller than the " +
                            std::to_string(p) + "x" + std::to_string(p) + " patch");
        }
        if (tp.hr.height < tp.lr.height * r || tp.hr.width < tp.lr.width * r) {
            throw DataError("training image " + tp.name + ": HR " + tp.hr.shape_str() + " is smaller than " +
                            std::to_string(r) + "x LR " + tp.lr.shape_str());
        }
    }
    std::vector<Image> lrs;
    std::vector<Image> hrs;
    std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
    std::uniform_int_distribution<int> pick_t(0, 7);
    for (int b = 0; b < cfg.batch; ++b) {
        const auto& tp = pairs[pick(rng)];
        std::uniform_int_distribution<std::size_t> py(0, tp.lr.height - p);
        std::uniform_int_distribution<std::size_t> px(0, tp.lr.width - p);
        const std::size_t y = py(rng);
        const std::size_t x = px(rng);
        const auto t = DihedralTransform::from_index(cfg.augment ? pick_t(rng) : 0);
        lrs.push_back(t.apply(crop(tp.lr, y, x, p, p)));
        hrs.push_back(t.apply(crop(tp.hr, y * r, x * r, p * r, p * r)));
    }
    return {stack(lrs), stack(hrs)};
}

/// Mean Y-channel PSNR of single-pass super-resolution over pairs, shaving `scale` pixels.
inline double validation_psnr(const RdnModel& model, const std::vector<TrainPair>& pairs) {
    if (pairs.empty()) return 0.0;
    const auto r = static_cast<std::size_t>(model.config().scale);
    double total = 0.0;
    for (const auto& tp : pairs) {
        const Image sr = super_resolve(model, tp.lr);
        const Image hr = crop(tp.hr, 0, 0, sr.height, sr.width);
        total += evaluate_pair(tp.name, sr, hr, EvalProtocol{r, true}).psnr;
    }
    return total / static_cast<double>(pairs.size());
}

/// One telemetry record: `epoch iter loss lr [val_psnr]`.
struct TrainRecord {
    std::uint64_t epoch = 0;
    std::uint64_t iteration = 0;
    double loss = 0.0;
    double lr = 0.0;
    std::optional<double> val_psnr;

    std::string str() const {
        std::ostringstream os;
        os << epoch << " " << iteration << " " << format_double(loss) << " " << format_double(lr);
        if (val_psnr) os << " " << format_double(*val_psnr);
        return os.str();
    }
};

class Trainer {
public:
    Trainer(RdnModel model, TrainConfig cfg, std::vector<TrainPair> train, std::vector<TrainPair> val = {})
        : model_(std::move(model)), cfg_(std::move(cfg)), train_(std::move(train)), val_(std::move(val)),
          rng_(cfg_.seed) {
        cfg_.validate();
        if (train_.empty()) throw DataError("training set is empty");
    }

    /// Continues from a checkpoint: parameters, optimizer moments, iteration and RNG state.
    static Trainer resume(const Checkpoint& ck, std::vector<TrainPair> train, std::vector<TrainPair> val = {}) {
        Trainer t(restore_model(ck), ck.train, std::move(train), std::move(val));
        t.adam_ = ck.adam;
        t.iteration_ = ck.iteration;
        t.running_sum_ = ck.running_loss_sum;
        t.running_count_ = ck.running_count;
        t.best_val_ = ck.best_val_psnr;
        std::istringstream is(ck.rng_state);
        is >> t.rng_;
        if (!is) throw DataError("checkpoint RNG state is unreadable");
        return t;
    }

    std::uint64_t iteration() const noexcept { return iteration_; }
    std::uint64_t epoch() const noexcept { return iteration_ / static_cast<std::uint64_t>(cfg_.iters_per_epoch); }
    double current_lr() const { return lr_schedule(epoch(), cfg_); }
    const RdnModel& model() const noexcept { return model_; }
    RdnModel& model() noexcept { return model_; }
    const TrainConfig& config() const noexcept { return cfg_; }
    const AdamState& optimizer() const noexcept { return adam_; }
    double best_val_psnr() const noexcept { return best_val_; }
    double running_loss() const {
        return running_count_ ? running_sum_ / static_cast<double>(running_count_) : 0.0;
    }

    /// Sample, forward, L1, backward, Adam step, zero grads. Returns the batch loss.
    double step() {
        const Batch batch = sample_batch(train_, cfg_, model_.config().scale, rng_);
        const Tensor loss = l1_loss(model_.forward(batch.lr), batch.hr);
        const double value = loss.item();
        if (!std::isfinite(value)) {
            throw NumericError("non-finite loss at iteration " + std::to_string(iteration_));
        }
        loss.backward();
        auto params = model_.parameters();
        const double lr = current_lr();
        adam_step(params, adam_, lr);
        model_.zero_grad();
        if (iteration_ % static_cast<std::uint64_t>(cfg_.iters_per_epoch) == 0) {
            running_sum_ = 0.0;
            running_count_ = 0;
        }
        running_sum_ += value;
        ++running_count_;
        ++iteration_;
        return value;
    }

    double validate() const { return validation_psnr(model_, val_); }

    Checkpoint checkpoint() const {
        Checkpoint ck = Checkpoint::of(model_);
        ck.train = cfg_;
        ck.adam = adam_;
        ck.epoch = epoch();
        ck.iteration = iteration_;
        std::ostringstream os;
        os << rng_;
        ck.rng_state = os.str();
        ck.running_loss_sum = running_sum_;
        ck.running_count = running_count_;
        ck.best_val_psnr = best_val_;
        return ck;
    }

    /// Records the validation score; returns true when it is a new best.
    bool note_validation(double psnr) {
        if (psnr > best_val_) {
            best_val_ = psnr;
            return true;
        }
        return false;
    }

private:
    RdnModel model_;
    TrainConfig cfg_;
    std::vector<TrainPair> train_;
    std::vector<TrainPair> val_;
    std::mt19937_64 rng_;
    AdamState adam_;
    std::uint64_t iteration_ = 0;
    double running_sum_ = 0.0;
    std::uint64_t running_count_ = 0;
    double best_val_ = 0.0;
};

struct TrainOptions {
    std::filesystem::path run_dir;           // empty: nothing written to disk
    std::uint64_t max_iterations = 0;        // 0: epochs * iters_per_epoch
    std::function<void(const TrainRecord&)> on_record;
    std::function<void(const Checkpoint&)> on_checkpoint;
};

struct TrainSummary {
    std::uint64_t iterations = 0;
    double final_loss = 0.0;
    double best_val_psnr = 0.0;
    double last_val_psnr = 0.0;
    std::vector<TrainRecord> records;
};

/// Runs the trainer to completion. At each epoch boundary: validation, telemetry,
/// `last.ckpt` (and `best.ckpt` on improvement) under run_dir. A NaN loss aborts with
/// the previous checkpoints untouched.
inline TrainSummary train(Trainer& trainer, const TrainOptions& opt = {}) {
    const auto& cfg = trainer.config();
    const auto ipe = static_cast<std::uint64_t>(cfg.iters_per_epoch);
    const std::uint64_t total =
        opt.max_iterations ? opt.max_iterations : static_cast<std::uint64_t>(cfg.epochs) * ipe;
    std::ofstream telemetry;
    if (!opt.run_dir.empty()) {
        std::filesystem::create_directories(opt.run_dir);
        telemetry.open(opt.run_dir / "telemetry.txt", std::ios::app);
    }
    TrainSummary summary;
    auto emit = [&](const TrainRecord& rec) {
        summary.records.push_back(rec);
        if (telemetry.is_open()) telemetry << rec.str() << "\n" << std::flush;
        if (opt.on_record) opt.on_record(rec);
    };
    while (trainer.iteration() < total) {
        const double lr = trainer.current_lr();
        const auto epoch = trainer.epoch();
        const double loss = trainer.step();
        summary.final_loss = loss;
        const auto it = trainer.iteration();
        const bool epoch_end = it % ipe == 0 || it == total;
        if (epoch_end) {
            const double val = trainer.validate();
            const bool best = trainer.note_validation(val);
            summary.last_val_psnr = val;
            emit({epoch, it, trainer.running_loss(), lr, val});
            const Checkpoint ck = trainer.checkpoint();
            if (!opt.run_dir.empty()) {
                save_checkpoint(opt.run_dir / "last.ckpt", ck);
                if (best) save_checkpoint(opt.run_dir / "best.ckpt", ck);
            }
            if (opt.on_checkpoint) opt.on_checkpoint(ck);
        } else if (it % static_cast<std::uint64_t>(cfg.log_every) == 0) {
            emit({epoch, it, loss, lr, std::nullopt});
        }
    }
    summary.iterations = trainer.iteration();
    summary.best_val_psnr = trainer.best_val_psnr();
    return summary;
}

}  // namespace rdn
