#include "bppnet/features.hpp"

#include "bppnet/archive.hpp"
#include "bppnet/init.hpp"

namespace bppnet {

namespace {

void freeze(torch::nn::Module& m) {
    for (auto& p : m.parameters()) p.set_requires_grad(false);
    m.eval();
}

}  // namespace

TinyFeatureExtractor::TinyFeatureExtractor(uint64_t seed, int64_t channels) {
    auto holder = std::make_shared<torch::nn::Module>();
    conv1_ = torch::nn::Conv2d(torch::nn::Conv2dOptions(3, channels, 3).padding(1));
    conv2_ = torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 3).padding(1));
    holder->register_module("conv1", conv1_);
    holder->register_module("conv2", conv2_);
    seeded_fan_in_init(*holder, seed);
    freeze(*holder);
}

std::vector<torch::Tensor> TinyFeatureExtractor::activations(const torch::Tensor& img) const {
    if (conv1_->weight.scalar_type() != img.scalar_type()) {
        conv1_->to(img.scalar_type());
        conv2_->to(img.scalar_type());
    }
    auto a1 = torch::tanh(conv1_->forward(img));
    auto a2 = torch::tanh(conv2_->forward(a1));
    return {a1, a2};
}

Vgg19FeatureExtractor::Vgg19FeatureExtractor(uint64_t seed) {
    trunk_ = std::make_shared<torch::nn::Module>();
    // block -> conv channel plan of VGG-19
    const std::vector<std::vector<int64_t>> plan = {
        {64, 64}, {128, 128}, {256, 256, 256, 256}, {512, 512, 512, 512}, {512, 512, 512, 512}};
    int64_t in_ch = 3;
    for (size_t block = 0; block < plan.size(); ++block) {
        for (size_t i = 0; i < plan[block].size(); ++i) {
            Layer layer;
            layer.name = "conv" + std::to_string(block + 1) + "_" + std::to_string(i + 1);
            layer.conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(in_ch, plan[block][i], 3).padding(1));
            layer.pool_before = (block > 0 && i == 0);
            layer.tap_after = (i == 1);
            trunk_->register_module(layer.name, layer.conv);
            layers_.push_back(layer);
            in_ch = plan[block][i];
        }
    }
    seeded_fan_in_init(*trunk_, seed);
    freeze(*trunk_);
    // ImageNet normalization expected by the pretrained weights.
    mean_ = torch::tensor({0.485, 0.456, 0.406}).view({1, 3, 1, 1});
    std_ = torch::tensor({0.229, 0.224, 0.225}).view({1, 3, 1, 1});
}

std::shared_ptr<Vgg19FeatureExtractor> Vgg19FeatureExtractor::from_archive(
    const std::filesystem::path& dir) {
    auto extractor = std::make_shared<Vgg19FeatureExtractor>();
    auto loaded = archive::read(dir);
    torch::NoGradGuard no_grad;
    for (auto& layer : extractor->layers_) {
        for (const char* part : {"weight", "bias"}) {
            const std::string key = "vgg/" + layer.name + "." + part;
            auto it = loaded.tensors.find(key);
            if (it == loaded.tensors.end()) {
                throw IoError("vgg weights: missing entry " + key);
            }
            auto param = std::string(part) == "weight" ? layer.conv->weight : layer.conv->bias;
            if (!it->second.sizes().equals(param.sizes())) {
                throw IoError("vgg weights: shape mismatch for " + key);
            }
            param.copy_(it->second);
        }
    }
    return extractor;
}

std::vector<torch::Tensor> Vgg19FeatureExtractor::activations(const torch::Tensor& img) const {
    if (layers_.front().conv->weight.scalar_type() != img.scalar_type()) {
        for (const auto& layer : layers_) layer.conv->to(img.scalar_type());
    }
    auto h = (img - mean_.to(img.dtype())) / std_.to(img.dtype());
    std::vector<torch::Tensor> taps;
    for (const auto& layer : layers_) {
        if (layer.pool_before) h = torch::max_pool2d(h, 2);
        h = torch::relu(layer.conv->forward(h));
        if (layer.tap_after) taps.push_back(h);
    }
    return taps;
}

}  // namespace bppnet
