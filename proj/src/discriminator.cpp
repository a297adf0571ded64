#include "bppnet/discriminator.hpp"

#include "bppnet/init.hpp"

namespace bppnet {

DiscriminatorConfig DiscriminatorConfig::defaults() {
    DiscriminatorConfig cfg;
    cfg.layers = {
        {3, 64, 4, 2, 0},    // 512 -> 255
        {64, 128, 4, 2, 0},  // 255 -> 126
        {128, 256, 4, 2, 1},  // 126 -> 63
        {256, 1, 4, 1, 1},   // 63 -> 62
    };
    return cfg;
}

void DiscriminatorConfig::validate() const {
    if (layers.empty()) {
        throw ConfigError("DiscriminatorConfig: no layers");
    }
    for (size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.kernel != 4) {
            throw ConfigError("DiscriminatorConfig: all kernels must be 4x4, layer " +
                              std::to_string(i + 1) + " has " + std::to_string(l.kernel));
        }
        if (l.stride < 1 || l.padding < 0 || l.in_channels < 1 || l.out_channels < 1) {
            throw ConfigError("DiscriminatorConfig: invalid layer " + std::to_string(i + 1));
        }
        if (i + 1 < layers.size() && layers[i + 1].in_channels != l.out_channels) {
            throw ConfigError("DiscriminatorConfig: channel mismatch between layers " +
                              std::to_string(i + 1) + " and " + std::to_string(i + 2));
        }
    }
    if (layers.back().out_channels != 1) {
        throw ConfigError("DiscriminatorConfig: last layer must output 1 channel");
    }
    const auto rf = receptive_field(*this);
    if (rf.size <= rf.stride) {
        throw ConfigError("DiscriminatorConfig: patches must overlap (receptive field " +
                          std::to_string(rf.size) + " <= stride " + std::to_string(rf.stride) + ")");
    }
}

int64_t conv_output_size(int64_t input, int64_t kernel, int64_t stride, int64_t padding) {
    return (input + 2 * padding - kernel) / stride + 1;
}

int64_t output_map_size(const DiscriminatorConfig& cfg, int64_t input) {
    int64_t size = input;
    for (const auto& l : cfg.layers) {
        size = conv_output_size(size, l.kernel, l.stride, l.padding);
        if (size < 1) {
            throw DimensionError("discriminator: input " + std::to_string(input) +
                                 " too small for the layer stack");
        }
    }
    return size;
}

ReceptiveField receptive_field(const DiscriminatorConfig& cfg) {
    ReceptiveField rf;
    for (const auto& l : cfg.layers) {
        rf.size += (l.kernel - 1) * rf.stride;
        rf.stride *= l.stride;
    }
    return rf;
}

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    for (size_t i = 0; i < cfg_.layers.size(); ++i) {
        const auto& l = cfg_.layers[i];
        convs_.push_back(register_module(
            "conv" + std::to_string(i + 1),
            torch::nn::Conv2d(torch::nn::Conv2dOptions(l.in_channels, l.out_channels, l.kernel)
                                  .stride(l.stride)
                                  .padding(l.padding))));
    }
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& img) {
    require_image(img, cfg_.layers.front().in_channels, "discriminator_forward");
    output_map_size(cfg_, std::min(img.size(2), img.size(3)));  // rejects undersized inputs
    torch::Tensor h = img;
    for (size_t i = 0; i + 1 < convs_.size(); ++i) {
        h = torch::leaky_relu(convs_[i]->forward(h), cfg_.leaky_slope);
    }
    return torch::sigmoid(convs_.back()->forward(h));
}

Discriminator build_discriminator(const DiscriminatorConfig& cfg) {
    Discriminator disc(cfg);
    seeded_fan_in_init(*disc, cfg.init_seed);
    return disc;
}

}  // namespace bppnet
