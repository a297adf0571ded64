#pragma once

#include <torch/torch.h>

#include <vector>

#include "bppnet/common.hpp"

namespace bppnet {

// One encoder/decoder unit of the iterative UNet block. 3-in/3-out,
// spatially preserving; input H and W must be divisible by 2^depth.
struct UNetConfig {
    int64_t in_channels = 3;
    int64_t out_channels = 3;
    int64_t depth = 4;           // encoder levels; channel ladder base * 2^i
    int64_t base_channels = 64;

    void validate() const;
};

class UNetImpl : public torch::nn::Module {
public:
    explicit UNetImpl(UNetConfig cfg);

    torch::Tensor forward(const torch::Tensor& x);

    const UNetConfig& config() const { return cfg_; }

private:
    UNetConfig cfg_;
    std::vector<torch::nn::Sequential> enc_;
    torch::nn::Sequential bottleneck_{nullptr};
    std::vector<torch::nn::ConvTranspose2d> up_;
    std::vector<torch::nn::Sequential> dec_;
    torch::nn::Conv2d out_conv_{nullptr};
};

TORCH_MODULE(UNet);

}  // namespace bppnet
