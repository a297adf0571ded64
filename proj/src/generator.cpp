#include "bppnet/generator.hpp"

#include "bppnet/conv_utils.hpp"
#include "bppnet/init.hpp"

namespace bppnet {

namespace {

torch::Tensor branch_forward(torch::nn::Conv2d& conv, const torch::Tensor& x) {
    return conv2d_same(x, conv->weight, conv->bias);
}

}  // namespace

void GeneratorConfig::set_total_pycon_channels(int64_t total) {
    const auto n = static_cast<int64_t>(pycon_kernels.size());
    if (n == 0 || total < n || total % n != 0) {
        throw ConfigError("GeneratorConfig: PyCon channel budget " + std::to_string(total) +
                          " is not divisible across " + std::to_string(n) + " kernels");
    }
    pycon_channels_per_kernel = total / n;
}

void GeneratorConfig::validate() const {
    if (num_unets < 1) {
        throw ConfigError("GeneratorConfig: num_unets must be >= 1");
    }
    if (use_pycon) {
        if (pycon_kernels.empty()) {
            throw ConfigError("GeneratorConfig: PyCon enabled with an empty kernel ladder");
        }
        for (int64_t k : pycon_kernels) {
            if (k < 1 || k % 2 == 0) {
                throw ConfigError("GeneratorConfig: PyCon kernel sizes must be odd, got " +
                                  std::to_string(k));
            }
        }
        if (pycon_channels_per_kernel < 1) {
            throw ConfigError("GeneratorConfig: pycon_channels_per_kernel must be >= 1");
        }
    }
    if (final_kernel < 1 || final_kernel % 2 == 0) {
        throw ConfigError("GeneratorConfig: final kernel size must be odd, got " +
                          std::to_string(final_kernel));
    }
    if (unet.out_channels != 3 || unet.in_channels != 3) {
        throw ConfigError("GeneratorConfig: every UNet unit is 3-in/3-out");
    }
    unet.validate();
}

GeneratorImpl::GeneratorImpl(GeneratorConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    for (int64_t i = 0; i < cfg_.num_unets; ++i) {
        unets_.push_back(register_module("unet" + std::to_string(i + 1), UNet(cfg_.unet)));
    }
    if (cfg_.use_pycon) {
        for (int64_t k : cfg_.pycon_kernels) {
            auto conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(cfg_.concat_channels(),
                                                                   cfg_.pycon_channels_per_kernel, k)
                                              .padding((k - 1) / 2));
            pycon_branches_.push_back(register_module("pycon_k" + std::to_string(k), conv));
        }
    }
    const int64_t final_in = cfg_.use_pycon ? cfg_.pycon_channels() : cfg_.concat_channels();
    final_conv_ = register_module(
        "final_conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(final_in, 3, cfg_.final_kernel)
                                            .padding((cfg_.final_kernel - 1) / 2)));
}

IubResult GeneratorImpl::iub_forward(const torch::Tensor& haze) {
    require_image(haze, cfg_.unet.in_channels, "iub_forward");
    IubResult result;
    torch::Tensor h = haze;
    for (auto& unet : unets_) {
        h = unet->forward(h);
        result.intermediates.push_back(h);
    }
    result.concat = cfg_.num_unets == 1 ? result.intermediates.front()
                                        : torch::cat(result.intermediates, 1);
    return result;
}

torch::Tensor GeneratorImpl::pycon_forward(const torch::Tensor& features) {
    if (!cfg_.use_pycon) {
        throw ConfigError("pycon_forward: model built without the PyCon block");
    }
    require_image(features, cfg_.concat_channels(), "pycon_forward");
    std::vector<torch::Tensor> branches;
    branches.reserve(pycon_branches_.size());
    for (auto& conv : pycon_branches_) {
        branches.push_back(branch_forward(conv, features));
    }
    return branches.size() == 1 ? branches.front() : torch::cat(branches, 1);
}

torch::Tensor GeneratorImpl::reconstruct(const torch::Tensor& features) {
    const int64_t expected = cfg_.use_pycon ? cfg_.pycon_channels() : cfg_.concat_channels();
    require_image(features, expected, "reconstruct");
    return final_conv_->forward(features);
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& haze) {
    auto iub = iub_forward(haze);
    auto features = cfg_.use_pycon ? pycon_forward(iub.concat) : iub.concat;
    return reconstruct(features);
}

ImageTensor GeneratorImpl::forward(const ImageTensor& haze) {
    return {forward(haze.data), haze.space};
}

ActivationStats activation_stats(const torch::Tensor& t, int64_t bins) {
    ActivationStats stats;
    const auto channels = t.size(1);
    for (int64_t c = 0; c < channels; ++c) {
        auto channel = t.select(1, c).to(torch::kFloat64);
        stats.channel_std.push_back(channel.std(/*unbiased=*/false).item<double>());
        const double lo = channel.min().item<double>();
        const double hi = channel.max().item<double>();
        auto hist = torch::histc(channel, bins, lo, hi > lo ? hi : lo + 1.0);
        std::vector<int64_t> counts(bins);
        auto acc = hist.accessor<double, 1>();
        for (int64_t b = 0; b < bins; ++b) counts[b] = static_cast<int64_t>(acc[b]);
        stats.channel_histograms.push_back(std::move(counts));
    }
    return stats;
}

ActivationDump GeneratorImpl::dump_intermediates(const torch::Tensor& haze) {
    torch::NoGradGuard no_grad;
    ActivationDump dump;
    auto iub = iub_forward(haze);
    for (size_t i = 0; i < iub.intermediates.size(); ++i) {
        dump.activations["unet_" + std::to_string(i + 1)] = iub.intermediates[i];
    }
    if (cfg_.use_pycon) {
        for (size_t i = 0; i < pycon_branches_.size(); ++i) {
            dump.activations["pycon_k" + std::to_string(cfg_.pycon_kernels[i])] =
                branch_forward(pycon_branches_[i], iub.concat);
        }
    }
    for (const auto& [name, act] : dump.activations) {
        dump.stats[name] = activation_stats(act);
    }
    return dump;
}

Generator build_generator(const GeneratorConfig& cfg) {
    Generator gen(cfg);
    seeded_fan_in_init(*gen, cfg.init_seed);
    return gen;
}

int64_t param_count(const torch::nn::Module& model) {
    int64_t total = 0;
    for (const auto& p : model.parameters()) {
        if (p.requires_grad()) total += p.numel();
    }
    return total;
}

}  // namespace bppnet
