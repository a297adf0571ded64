#pragma once

#include <torch/torch.h>

#include <map>
#include <string>
#include <vector>

#include "bppnet/image_tensor.hpp"
#include "bppnet/unet.hpp"

namespace bppnet {

struct GeneratorConfig {
    int64_t num_unets = 4;  // M
    std::vector<int64_t> pycon_kernels = {3, 5, 7, 11, 17, 25, 35, 45};
    int64_t pycon_channels_per_kernel = 16;  // 8 kernels x 16 = 128 channels
    bool use_pycon = true;
    int64_t final_kernel = 3;
    UNetConfig unet;
    uint64_t init_seed = 0;

    // Splits a total PyCon channel budget evenly across the kernel ladder;
    // rejects budgets the ladder cannot divide.
    void set_total_pycon_channels(int64_t total);

    int64_t concat_channels() const { return num_unets * unet.out_channels; }
    int64_t pycon_channels() const {
        return static_cast<int64_t>(pycon_kernels.size()) * pycon_channels_per_kernel;
    }

    void validate() const;
};

// IUB output: the 3M-channel concat plus each unit's 3-channel output.
struct IubResult {
    torch::Tensor concat;
    std::vector<torch::Tensor> intermediates;
};

// Per-activation diagnostics backing the inspect command.
struct ActivationStats {
    std::vector<double> channel_std;
    std::vector<std::vector<int64_t>> channel_histograms;  // 32 bins over [min,max]
};

struct ActivationDump {
    // Keys: unet_1..unet_M, pycon_k<K> per branch. std::map keeps order stable.
    std::map<std::string, torch::Tensor> activations;
    std::map<std::string, ActivationStats> stats;
};

class GeneratorImpl : public torch::nn::Module {
public:
    explicit GeneratorImpl(GeneratorConfig cfg);

    // Chains the M UNet units and concatenates their outputs channel-wise.
    IubResult iub_forward(const torch::Tensor& haze);

    // Runs the parallel kernel ladder over the IUB concat; branch outputs are
    // concatenated in ladder order. Requires use_pycon.
    torch::Tensor pycon_forward(const torch::Tensor& features);

    // Final 3-channel reconstruction convolution.
    torch::Tensor reconstruct(const torch::Tensor& features);

    // Full pass: reconstruct(pycon(iub(x))), or reconstruct(iub(x)) without
    // PyCon. Linear output during training; clamping happens at inference.
    torch::Tensor forward(const torch::Tensor& haze);

    ImageTensor forward(const ImageTensor& haze);

    ActivationDump dump_intermediates(const torch::Tensor& haze);

    const GeneratorConfig& config() const { return cfg_; }
    const std::vector<UNet>& units() { return unets_; }

private:
    GeneratorConfig cfg_;
    std::vector<UNet> unets_;
    std::vector<torch::nn::Conv2d> pycon_branches_;
    torch::nn::Conv2d final_conv_{nullptr};
};

TORCH_MODULE(Generator);

Generator build_generator(const GeneratorConfig& cfg);

// Total trainable parameter count; stable for a fixed config.
int64_t param_count(const torch::nn::Module& model);

ActivationStats activation_stats(const torch::Tensor& t, int64_t bins = 32);

}  // namespace bppnet
