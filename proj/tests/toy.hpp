#pragma once

// Tiny-but-complete training setups shared by the trainer/eval/cli tests.

#include <filesystem>

#include "bppnet/hazesynth.hpp"
#include "bppnet/trainer.hpp"

namespace toy {

inline bppnet::TrainConfig train_config(const std::filesystem::path& dataset_dir,
                                        const std::filesystem::path& out_dir,
                                        uint64_t seed = 7) {
    bppnet::TrainConfig cfg;
    cfg.gen.num_unets = 2;
    cfg.gen.unet.depth = 1;
    cfg.gen.unet.base_channels = 4;
    cfg.gen.pycon_kernels = {3};
    cfg.gen.pycon_channels_per_kernel = 4;
    cfg.gen.init_seed = bppnet::derive_seed(seed, "gen_init");
    cfg.disc = bppnet::DiscriminatorConfig::defaults();
    cfg.disc.init_seed = bppnet::derive_seed(seed, "disc_init");
    cfg.dataset = bppnet::DatasetSpec::for_dataset(bppnet::DatasetName::kSynthetic, dataset_dir);
    cfg.dataset.crop_plan = {{32, 1}};
    cfg.resize_target = 32;
    cfg.max_epochs = 2;
    cfg.seed = seed;
    cfg.out_dir = out_dir;
    return cfg;
}

inline std::filesystem::path synth_dataset(const std::string& tag, int64_t n = 2,
                                           int64_t size = 32, uint64_t seed = 1) {
    auto dir = std::filesystem::temp_directory_path() / ("bppnet_toy_" + tag);
    std::filesystem::remove_all(dir);
    bppnet::generate_pairs(n, size, bppnet::HazeMode::kHomogeneous, seed, dir);
    return dir;
}

}  // namespace toy
