#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <optional>

#include "bppnet/archive.hpp"
#include "bppnet/discriminator.hpp"
#include "bppnet/generator.hpp"
#include "bppnet/image_tensor.hpp"
#include "bppnet/losses.hpp"

namespace bppnet {

// Training-loop state carried by a full checkpoint.
struct TrainState {
    int64_t epoch = 0;
    double lr_gen = 1e-3;
    double lr_disc = 1e-3;
    uint64_t seed = 0;
    ColorSpace colorspace = ColorSpace::kYCbCr;
    LossWeights weights;
    std::vector<double> sched_recent;  // generator losses since the last LR change
    bool sched_floor_plateau = false;
};

archive::Manifest encode_generator_config(const GeneratorConfig& cfg);
GeneratorConfig decode_generator_config(const archive::Manifest& m);
archive::Manifest encode_discriminator_config(const DiscriminatorConfig& cfg);
DiscriminatorConfig decode_discriminator_config(const archive::Manifest& m);

// Inference checkpoint: generator config + weights (entries gen/<param>).
void save_generator_checkpoint(const std::filesystem::path& dir, Generator& gen,
                               ColorSpace train_space,
                               const archive::Manifest& extra = {});

struct LoadedGenerator {
    Generator gen{nullptr};
    ColorSpace train_space = ColorSpace::kYCbCr;
    archive::Manifest manifest;
};
LoadedGenerator load_generator_checkpoint(const std::filesystem::path& dir);

// Full checkpoint: generator + discriminator (namespace disc/), both Adam
// states (optg/, optd/), torch RNG state, scheduler state, epoch counter.
void save_train_checkpoint(const std::filesystem::path& dir, Generator& gen, Discriminator& disc,
                           torch::optim::Adam& opt_gen, torch::optim::Adam& opt_disc,
                           const TrainState& state, const archive::Manifest& extra = {});

struct LoadedTrainCheckpoint {
    Generator gen{nullptr};
    Discriminator disc{nullptr};
    TrainState state;
    archive::Manifest manifest;
    std::map<std::string, torch::Tensor> tensors;  // for optimizer reconstruction
};
LoadedTrainCheckpoint load_train_checkpoint(const std::filesystem::path& dir);

// Copies archive entries "<prefix><name>" into the module's parameters.
// Fails loudly on any missing entry, extra entry, or shape mismatch.
void load_params_into(torch::nn::Module& module, const std::map<std::string, torch::Tensor>& tensors,
                      const std::string& prefix);

// Adam moments/step per named parameter under "<prefix><name>/...".
void append_adam_state(std::vector<std::pair<std::string, torch::Tensor>>& entries,
                       const std::string& prefix, torch::optim::Adam& opt, torch::nn::Module& module);
void restore_adam_state(torch::optim::Adam& opt, torch::nn::Module& module,
                        const std::map<std::string, torch::Tensor>& tensors,
                        const std::string& prefix);

}  // namespace bppnet
