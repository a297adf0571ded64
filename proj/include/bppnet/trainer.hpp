#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <memory>
#include <vector>

#include "bppnet/checkpoint.hpp"
#include "bppnet/datapipe.hpp"
#include "bppnet/discriminator.hpp"
#include "bppnet/generator.hpp"
#include "bppnet/losses.hpp"

namespace bppnet {

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Generator LR decays when the windowed median of the epoch loss stops
// improving: halves of the last `window` epochs are compared by median and a
// relative improvement below `threshold` counts as a plateau. The window
// restarts after every LR change, so a constant loss decays after exactly
// `window` epochs. The discriminator LR never changes.
class PlateauScheduler {
public:
    PlateauScheduler(double lr_init, double decay_factor, double threshold, int64_t window,
                     double lr_floor);

    // Feed one epoch's generator loss; returns the (possibly decayed) LR.
    double step(double epoch_loss);

    double lr() const { return lr_; }
    // Set when a plateau is detected while already at the floor: the
    // training loop's termination condition.
    bool floor_plateau() const { return floor_plateau_; }
    const std::vector<double>& recent() const { return recent_; }

    void restore(std::vector<double> recent, double lr, bool floor_plateau);

private:
    double lr_;
    double factor_;
    double threshold_;
    double floor_;
    int64_t window_;
    std::vector<double> recent_;
    bool floor_plateau_ = false;
};

struct EpochRecord {
    int64_t epoch = 0;  // 1-based
    double adv = 0, content = 0, l2 = 0, ssim = 0;
    double total_g = 0, total_d = 0;
    double lr_gen = 0, lr_disc = 0;
    double seconds = 0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    void append_validated(const EpochRecord& rec);  // rejects non-finite records
    void write_csv(const std::filesystem::path& path) const;
};

struct TrainConfig {
    GeneratorConfig gen;
    DiscriminatorConfig disc;
    DatasetSpec dataset;

    double lr_gen_init = 1e-3;
    double lr_disc = 1e-3;
    double lr_decay_factor = 0.1;
    double plateau_threshold = 0.01;   // relative improvement
    int64_t plateau_window = 10;       // epochs
    double lr_floor = 1e-5;
    int64_t max_epochs = 100;
    int64_t batch_size = 1;
    uint64_t seed = 0;
    LossWeights weights;
    ContentNorm content_norm = ContentNorm::kL1;
    SsimParams ssim;
    int64_t resize_target = 512;       // toy runs use 64
    int64_t checkpoint_every = 0;      // epochs; 0 = final checkpoint only
    int64_t log_every = 0;             // epochs; 0 = silent
    std::filesystem::path out_dir;
    // Content-loss extractor; when null and the content weight is nonzero, a
    // seeded TinyFeatureExtractor keeps the run hermetic.
    std::shared_ptr<FeatureExtractor> extractor;

    void validate() const;
};

struct TrainResult {
    TrainHistory history;
    std::filesystem::path final_checkpoint;
    TrainState state;
};

// One alternating D-then-G update. The discriminator sees the generator
// output detached; the generator term uses the just-updated discriminator.
struct StepLosses {
    double adv = 0, content = 0, l2 = 0, ssim = 0, total_g = 0, total_d = 0;
};
StepLosses train_step(Generator& gen, Discriminator& disc, torch::optim::Adam& opt_gen,
                      torch::optim::Adam& opt_disc, const torch::Tensor& hazy,
                      const torch::Tensor& gt, const LossWeights& weights,
                      const ContentLossConfig& content_cfg, const SsimParams& ssim_params);

// Full training run on freshly built or caller-provided models.
TrainResult train(Generator& gen, Discriminator& disc, const TrainConfig& cfg);
TrainResult train(const TrainConfig& cfg);

// Continues a saved run to cfg.max_epochs (total, not additional). The
// checkpoint must agree with cfg on the architecture; optimizer state, RNG
// state, scheduler state, LR and epoch counter are restored so a resumed run
// reproduces an uninterrupted one step for step.
TrainResult resume(const std::filesystem::path& checkpoint_dir, const TrainConfig& cfg);

}  // namespace bppnet
