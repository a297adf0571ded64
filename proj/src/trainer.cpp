#include "bppnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include "bppnet/colorspace.hpp"

namespace bppnet {

namespace {

double median_of(std::vector<double> values) {
    const size_t n = values.size();
    std::nth_element(values.begin(), values.begin() + n / 2, values.end());
    double upper = values[n / 2];
    if (n % 2 == 1) return upper;
    std::nth_element(values.begin(), values.begin() + n / 2 - 1, values.end());
    return 0.5 * (values[n / 2 - 1] + upper);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

PlateauScheduler::PlateauScheduler(double lr_init, double decay_factor, double threshold,
                                   int64_t window, double lr_floor)
    : lr_(lr_init), factor_(decay_factor), threshold_(threshold), floor_(lr_floor),
      window_(window) {
    if (window_ < 2) throw ConfigError("PlateauScheduler: window must be >= 2");
    if (floor_ >= lr_init) throw ConfigError("PlateauScheduler: lr floor must be below the initial LR");
    if (factor_ <= 0.0 || factor_ >= 1.0) throw ConfigError("PlateauScheduler: decay factor must be in (0,1)");
}

double PlateauScheduler::step(double epoch_loss) {
    recent_.push_back(epoch_loss);
    if (static_cast<int64_t>(recent_.size()) < window_) return lr_;

    const size_t n = recent_.size();
    const size_t half = static_cast<size_t>(window_) / 2;
    std::vector<double> older(recent_.end() - window_, recent_.end() - window_ + half);
    std::vector<double> newer(recent_.end() - half, recent_.end());
    const double med_old = median_of(std::move(older));
    const double med_new = median_of(std::move(newer));
    const double improvement = (med_old - med_new) / std::max(std::abs(med_old), 1e-12);
    if (improvement >= threshold_) return lr_;

    // Plateau. Decay (or flag termination when already at the floor) and
    // restart the observation window.
    if (lr_ > floor_) {
        lr_ = std::max(lr_ * factor_, floor_);
        if (lr_ < floor_ * (1.0 + 1e-9)) lr_ = floor_;
    } else {
        floor_plateau_ = true;
    }
    recent_.clear();
    return lr_;
}

void PlateauScheduler::restore(std::vector<double> recent, double lr, bool floor_plateau) {
    recent_ = std::move(recent);
    lr_ = lr;
    floor_plateau_ = floor_plateau;
}

void TrainHistory::append_validated(const EpochRecord& rec) {
    for (double v : {rec.adv, rec.content, rec.l2, rec.ssim, rec.total_g, rec.total_d}) {
        if (!std::isfinite(v)) {
            throw TrainingError("training aborted: non-finite loss at epoch " +
                                std::to_string(rec.epoch) + " (adv=" + fmt(rec.adv) +
                                " con=" + fmt(rec.content) + " l2=" + fmt(rec.l2) +
                                " ssim=" + fmt(rec.ssim) + ")");
        }
    }
    if (!epochs.empty() && rec.epoch != epochs.back().epoch + 1) {
        throw TrainingError("training history: non-monotone epoch index");
    }
    epochs.push_back(rec);
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("history: cannot write " + path.string());
    out << "epoch,adv,content,l2,ssim,total_g,total_d,lr_gen,lr_disc,seconds\n";
    for (const auto& r : epochs) {
        out << r.epoch << "," << fmt(r.adv) << "," << fmt(r.content) << "," << fmt(r.l2) << ","
            << fmt(r.ssim) << "," << fmt(r.total_g) << "," << fmt(r.total_d) << "," << fmt(r.lr_gen)
            << "," << fmt(r.lr_disc) << "," << fmt(r.seconds) << "\n";
    }
}

void TrainConfig::validate() const {
    gen.validate();
    disc.validate();
    weights.validate();
    if (lr_floor >= lr_gen_init) throw ConfigError("TrainConfig: lr_floor must be below lr_gen_init");
    if (plateau_window < 2) throw ConfigError("TrainConfig: plateau_window must be >= 2");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (max_epochs < 0) throw ConfigError("TrainConfig: max_epochs must be >= 0");
    if (resize_target < 1) throw ConfigError("TrainConfig: resize_target must be >= 1");
}

StepLosses train_step(Generator& gen, Discriminator& disc, torch::optim::Adam& opt_gen,
                      torch::optim::Adam& opt_disc, const torch::Tensor& hazy,
                      const torch::Tensor& gt, const LossWeights& weights,
                      const ContentLossConfig& content_cfg, const SsimParams& ssim_params) {
    StepLosses out;
    auto pred = gen->forward(hazy);

    // Discriminator update; the generator stays untouched (pred detached).
    opt_disc.zero_grad();
    auto d_adv = adv_discriminator_loss(disc->forward(gt), disc->forward(pred.detach()));
    auto d_loss = total_discriminator_loss(weights, d_adv);
    d_loss.backward();
    opt_disc.step();

    // Generator update against the just-updated discriminator.
    opt_gen.zero_grad();
    auto adv = adv_generator_loss(disc->forward(pred));
    auto content = weights.content != 0.0
                       ? content_loss(content_cfg, gt, pred)
                       : torch::zeros({}, pred.options());
    auto l2 = l2_loss(gt, pred);
    auto ssim_term = ssim_loss(gt, pred, ssim_params);
    auto g_loss = total_generator_loss(weights, adv, content, l2, ssim_term);
    g_loss.backward();
    opt_gen.step();

    out.adv = adv.item<double>();
    out.content = content.item<double>();
    out.l2 = l2.item<double>();
    out.ssim = ssim_term.item<double>();
    out.total_g = g_loss.item<double>();
    out.total_d = d_loss.item<double>();
    return out;
}

namespace {

struct PreparedEpoch {
    std::vector<torch::Tensor> hazy;
    std::vector<torch::Tensor> gt;
};

// Crop -> bicubic resize -> colorspace, identical geometry for both members.
PreparedEpoch prepare_epoch(const PairedDataset& dataset, std::vector<ImagePair>& cache,
                            const TrainConfig& cfg, int64_t epoch) {
    PreparedEpoch prepared;
    constexpr int64_t kCacheBudgetBytes = 512LL << 20;
    static thread_local int64_t cache_bytes = 0;

    for (size_t i = 0; i < dataset.size(); ++i) {
        ImagePair pair;
        if (i < cache.size()) {
            pair = cache[i];
        } else {
            pair = dataset.load(i);
            const int64_t bytes = pair.hazy.data.numel() * 8;
            if (cache_bytes + bytes < kCacheBudgetBytes && cache.size() == i) {
                cache.push_back(pair);
                cache_bytes += bytes;
            }
        }
        for (auto& patch : random_crops(pair, cfg.dataset.crop_plan, cfg.seed, epoch)) {
            auto hazy = bicubic_resize(patch.hazy, cfg.resize_target);
            auto gt = bicubic_resize(patch.clear, cfg.resize_target);
            prepared.hazy.push_back(convert_colorspace(hazy, cfg.dataset.colorspace).data);
            prepared.gt.push_back(convert_colorspace(gt, cfg.dataset.colorspace).data);
        }
    }
    return prepared;
}

TrainResult run_loop(Generator& gen, Discriminator& disc, const TrainConfig& cfg,
                     torch::optim::Adam& opt_gen, torch::optim::Adam& opt_disc,
                     PlateauScheduler& sched, TrainHistory history, int64_t start_epoch) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const fs::path ckpt_dir = cfg.out_dir / "checkpoint";
    const fs::path history_path = cfg.out_dir / "history.csv";

    ContentLossConfig content_cfg;
    content_cfg.norm = cfg.content_norm;
    content_cfg.extractor = cfg.extractor;
    if (!content_cfg.extractor && cfg.weights.content != 0.0) {
        content_cfg.extractor =
            std::make_shared<TinyFeatureExtractor>(derive_seed(cfg.seed, "content"));
    }

    auto dataset = load_dataset(cfg.dataset);
    if (dataset.size() == 0) throw IoError("train: dataset is empty");
    std::vector<ImagePair> cache;

    auto snapshot_state = [&](int64_t epoch) {
        TrainState state;
        state.epoch = epoch;
        state.lr_gen = sched.lr();
        state.lr_disc = cfg.lr_disc;
        state.seed = cfg.seed;
        state.colorspace = cfg.dataset.colorspace;
        state.weights = cfg.weights;
        state.sched_recent = sched.recent();
        state.sched_floor_plateau = sched.floor_plateau();
        return state;
    };
    auto write_checkpoint = [&](int64_t epoch) {
        save_train_checkpoint(ckpt_dir, gen, disc, opt_gen, opt_disc, snapshot_state(epoch));
    };

    gen->train();
    disc->train();
    TrainResult result;
    result.history = std::move(history);
    int64_t epoch = start_epoch;
    for (; epoch < cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        auto prepared = prepare_epoch(dataset, cache, cfg, epoch);

        EpochRecord rec;
        rec.epoch = epoch + 1;
        int64_t batches = 0;
        for (size_t b = 0; b < prepared.hazy.size(); b += cfg.batch_size) {
            const size_t end = std::min(prepared.hazy.size(), b + cfg.batch_size);
            auto hazy = torch::cat(std::vector<torch::Tensor>(prepared.hazy.begin() + b,
                                                              prepared.hazy.begin() + end));
            auto gt = torch::cat(std::vector<torch::Tensor>(prepared.gt.begin() + b,
                                                            prepared.gt.begin() + end));
            StepLosses losses;
            try {
                losses = train_step(gen, disc, opt_gen, opt_disc, hazy, gt, cfg.weights,
                                    content_cfg, cfg.ssim);
            } catch (const DimensionError& e) {
                // Non-finite loss inputs surface here; keep the last-good checkpoint.
                result.history.write_csv(history_path);
                throw TrainingError(std::string("training aborted: ") + e.what());
            }
            rec.adv += losses.adv;
            rec.content += losses.content;
            rec.l2 += losses.l2;
            rec.ssim += losses.ssim;
            rec.total_g += losses.total_g;
            rec.total_d += losses.total_d;
            ++batches;
        }
        rec.adv /= batches;
        rec.content /= batches;
        rec.l2 /= batches;
        rec.ssim /= batches;
        rec.total_g /= batches;
        rec.total_d /= batches;
        rec.lr_gen = sched.lr();
        rec.lr_disc = cfg.lr_disc;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        try {
            result.history.append_validated(rec);
        } catch (const TrainingError&) {
            result.history.write_csv(history_path);
            throw;
        }

        const double new_lr = sched.step(rec.total_g);
        if (new_lr != rec.lr_gen) {
            for (auto& group : opt_gen.param_groups()) {
                static_cast<torch::optim::AdamOptions&>(group.options()).lr(new_lr);
            }
        }

        if (cfg.log_every > 0 && rec.epoch % cfg.log_every == 0) {
            std::cout << "epoch " << rec.epoch << "  L_G " << rec.total_g << "  L_D " << rec.total_d
                      << "  (adv " << rec.adv << ", con " << rec.content << ", l2 " << rec.l2
                      << ", ssim " << rec.ssim << ")  lr " << new_lr << "\n";
        }
        if (cfg.checkpoint_every > 0 && rec.epoch % cfg.checkpoint_every == 0) {
            write_checkpoint(epoch + 1);
        }
        if (sched.floor_plateau()) {
            ++epoch;
            break;  // LR at the floor and the loss plateaued again: stop.
        }
    }

    write_checkpoint(epoch);
    result.history.write_csv(history_path);
    result.final_checkpoint = ckpt_dir;
    result.state = snapshot_state(epoch);
    return result;
}

}  // namespace

TrainResult train(Generator& gen, Discriminator& disc, const TrainConfig& cfg) {
    cfg.validate();
    torch::optim::Adam opt_gen(gen->parameters(), torch::optim::AdamOptions(cfg.lr_gen_init));
    torch::optim::Adam opt_disc(disc->parameters(), torch::optim::AdamOptions(cfg.lr_disc));
    PlateauScheduler sched(cfg.lr_gen_init, cfg.lr_decay_factor, cfg.plateau_threshold,
                           cfg.plateau_window, cfg.lr_floor);
    return run_loop(gen, disc, cfg, opt_gen, opt_disc, sched, TrainHistory{}, 0);
}

TrainResult train(const TrainConfig& cfg) {
    cfg.validate();
    auto gen = build_generator(cfg.gen);
    auto disc = build_discriminator(cfg.disc);
    return train(gen, disc, cfg);
}

TrainResult resume(const std::filesystem::path& checkpoint_dir, const TrainConfig& cfg) {
    cfg.validate();
    auto loaded = load_train_checkpoint(checkpoint_dir);

    const auto expected = encode_generator_config(cfg.gen);
    const auto actual = encode_generator_config(loaded.gen->config());
    for (const auto& [key, value] : expected) {
        if (key == "gen.init_seed") continue;  // weights come from the checkpoint
        if (archive::get(actual, key) != value) {
            throw ConfigError("resume: checkpoint disagrees with config on " + key + " (" +
                              archive::get(actual, key) + " vs " + value + ")");
        }
    }

    torch::optim::Adam opt_gen(loaded.gen->parameters(),
                               torch::optim::AdamOptions(loaded.state.lr_gen));
    torch::optim::Adam opt_disc(loaded.disc->parameters(),
                                torch::optim::AdamOptions(loaded.state.lr_disc));
    restore_adam_state(opt_gen, *loaded.gen, loaded.tensors, "optg/");
    restore_adam_state(opt_disc, *loaded.disc, loaded.tensors, "optd/");

    PlateauScheduler sched(cfg.lr_gen_init, cfg.lr_decay_factor, cfg.plateau_threshold,
                           cfg.plateau_window, cfg.lr_floor);
    sched.restore(loaded.state.sched_recent, loaded.state.lr_gen, loaded.state.sched_floor_plateau);

    return run_loop(loaded.gen, loaded.disc, cfg, opt_gen, opt_disc, sched, TrainHistory{},
                    loaded.state.epoch);
}

}  // namespace bppnet
