#include "bppnet/unet.hpp"

namespace bppnet {

namespace {

torch::nn::Sequential conv_block(int64_t in_ch, int64_t out_ch) {
    return torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in_ch, out_ch, 3).padding(1)),
        torch::nn::ReLU(),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(out_ch, out_ch, 3).padding(1)),
        torch::nn::ReLU());
}

}  // namespace

void UNetConfig::validate() const {
    if (in_channels < 1 || out_channels < 1) {
        throw ConfigError("UNetConfig: channel counts must be >= 1");
    }
    if (depth < 1) {
        throw ConfigError("UNetConfig: depth must be >= 1");
    }
    if (base_channels < 1) {
        throw ConfigError("UNetConfig: base_channels must be >= 1");
    }
}

UNetImpl::UNetImpl(UNetConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    int64_t ch = cfg_.base_channels;
    int64_t in = cfg_.in_channels;
    for (int64_t level = 0; level < cfg_.depth; ++level) {
        enc_.push_back(register_module("enc" + std::to_string(level + 1), conv_block(in, ch)));
        in = ch;
        ch *= 2;
    }
    bottleneck_ = register_module("bottleneck", conv_block(in, ch));
    for (int64_t level = cfg_.depth - 1; level >= 0; --level) {
        int64_t skip_ch = cfg_.base_channels << level;
        up_.push_back(register_module(
            "up" + std::to_string(level + 1),
            torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(skip_ch * 2, skip_ch, 2).stride(2))));
        dec_.push_back(register_module("dec" + std::to_string(level + 1),
                                       conv_block(skip_ch * 2, skip_ch)));
    }
    out_conv_ = register_module(
        "out_conv",
        torch::nn::Conv2d(torch::nn::Conv2dOptions(cfg_.base_channels, cfg_.out_channels, 3).padding(1)));
}

torch::Tensor UNetImpl::forward(const torch::Tensor& x) {
    if (x.dim() != 4 || x.size(1) != cfg_.in_channels) {
        throw DimensionError("UNet: expected (N," + std::to_string(cfg_.in_channels) + ",H,W) input");
    }
    const int64_t div = int64_t(1) << cfg_.depth;
    if (x.size(2) % div != 0 || x.size(3) % div != 0) {
        throw DimensionError("UNet: H and W must be divisible by 2^depth = " + std::to_string(div) +
                             ", got " + std::to_string(x.size(2)) + "x" + std::to_string(x.size(3)));
    }

    std::vector<torch::Tensor> skips;
    torch::Tensor h = x;
    for (auto& block : enc_) {
        h = block->forward(h);
        skips.push_back(h);
        h = torch::max_pool2d(h, 2);
    }
    h = bottleneck_->forward(h);
    for (size_t i = 0; i < up_.size(); ++i) {
        h = up_[i]->forward(h);
        h = dec_[i]->forward(torch::cat({skips[skips.size() - 1 - i], h}, 1));
    }
    return out_conv_->forward(h);  // linear activation; clamping happens at I/O boundaries
}

}  // namespace bppnet
