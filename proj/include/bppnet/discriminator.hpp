#pragma once

#include <torch/torch.h>

#include <vector>

#include "bppnet/image_tensor.hpp"

namespace bppnet {

struct DiscLayerSpec {
    int64_t in_channels;
    int64_t out_channels;
    int64_t kernel = 4;
    int64_t stride = 1;
    int64_t padding = 0;
};

// Patch discriminator: all-4x4 convolutions, LeakyReLU between layers,
// sigmoid on the last. Patches must overlap (receptive field > stride).
struct DiscriminatorConfig {
    std::vector<DiscLayerSpec> layers;
    double leaky_slope = 0.2;
    uint64_t init_seed = 0;

    // 3->64->128->256->1 stack mapping 512x512 inputs to a 62x62 map.
    static DiscriminatorConfig defaults();

    void validate() const;
};

// floor((in + 2p - k) / s) + 1
int64_t conv_output_size(int64_t input, int64_t kernel, int64_t stride, int64_t padding);

// Spatial size of the probability map for a square input.
int64_t output_map_size(const DiscriminatorConfig& cfg, int64_t input);

// Receptive field of one output cell and the stride between adjacent cells,
// via the standard per-layer recursion.
struct ReceptiveField {
    int64_t size = 1;
    int64_t stride = 1;
};
ReceptiveField receptive_field(const DiscriminatorConfig& cfg);

class DiscriminatorImpl : public torch::nn::Module {
public:
    explicit DiscriminatorImpl(DiscriminatorConfig cfg);

    // 3-channel image -> 1-channel probability map, values in (0,1).
    torch::Tensor forward(const torch::Tensor& img);

    const DiscriminatorConfig& config() const { return cfg_; }

private:
    DiscriminatorConfig cfg_;
    std::vector<torch::nn::Conv2d> convs_;
};

TORCH_MODULE(Discriminator);

Discriminator build_discriminator(const DiscriminatorConfig& cfg);

}  // namespace bppnet
