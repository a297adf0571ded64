#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <memory>
#include <vector>

#include "bppnet/common.hpp"

namespace bppnet {

// Frozen feature extractor for the content loss: ordered activations phi_i.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::vector<torch::Tensor> activations(const torch::Tensor& img) const = 0;
    virtual std::string name() const = 0;
};

// Treats the image itself as the single activation.
class IdentityFeatureExtractor : public FeatureExtractor {
public:
    std::vector<torch::Tensor> activations(const torch::Tensor& img) const override {
        return {img};
    }
    std::string name() const override { return "identity"; }
};

// Small seeded random conv stack (tanh nonlinearity, two taps). Keeps test
// suites and toy training hermetic: no pretrained weights involved.
class TinyFeatureExtractor : public FeatureExtractor {
public:
    explicit TinyFeatureExtractor(uint64_t seed, int64_t channels = 8);
    std::vector<torch::Tensor> activations(const torch::Tensor& img) const override;
    std::string name() const override { return "tiny"; }

private:
    mutable torch::nn::Conv2d conv1_{nullptr};
    mutable torch::nn::Conv2d conv2_{nullptr};
};

// VGG-19 convolutional trunk. Activations are taken after the second
// convolution of each of the five blocks (post-ReLU). Weights load from the
// named-tensor archive format; absent a weight file the trunk is seeded
// random, which is enough for shape/selection checks.
class Vgg19FeatureExtractor : public FeatureExtractor {
public:
    explicit Vgg19FeatureExtractor(uint64_t seed = 0);

    // Archive entries: vgg/conv<block>_<idx>.weight / .bias
    static std::shared_ptr<Vgg19FeatureExtractor> from_archive(const std::filesystem::path& dir);

    std::vector<torch::Tensor> activations(const torch::Tensor& img) const override;
    std::string name() const override { return "vgg19"; }

    torch::nn::Module& trunk() { return *trunk_; }

private:
    struct Layer {
        mutable torch::nn::Conv2d conv{nullptr};
        bool pool_before = false;
        bool tap_after = false;  // activation collected after this conv's ReLU
        std::string name;
    };
    std::shared_ptr<torch::nn::Module> trunk_;
    std::vector<Layer> layers_;
    torch::Tensor mean_, std_;
};

}  // namespace bppnet
