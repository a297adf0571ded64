#include "bppnet/conv_utils.hpp"

namespace bppnet {

namespace {

constexpr int64_t kFftWorkThreshold = 32LL << 20;  // k^2 * H * W

torch::Tensor conv2d_same_fft(const torch::Tensor& x, const torch::Tensor& weight,
                              const torch::Tensor& bias) {
    using torch::indexing::Slice;
    const int64_t k = weight.size(2);
    const int64_t pad = (k - 1) / 2;
    const int64_t h = x.size(2), w = x.size(3);
    const std::vector<int64_t> full = {h + k - 1, w + k - 1};

    // cross-correlation = convolution with the flipped kernel
    auto spectrum_x = torch::fft::rfft2(x, full);
    auto spectrum_w = torch::fft::rfft2(weight.flip({2, 3}), full);
    auto product = torch::einsum("nchw,ochw->nohw", {spectrum_x, spectrum_w});
    auto y = torch::fft::irfft2(product, full);
    y = y.index({Slice(), Slice(), Slice(pad, pad + h), Slice(pad, pad + w)});
    return y + bias.view({1, -1, 1, 1});
}

}  // namespace

torch::Tensor conv2d_same(const torch::Tensor& x, const torch::Tensor& weight,
                          const torch::Tensor& bias, std::optional<bool> force_fft) {
    const int64_t k = weight.size(2);
    const bool fft = force_fft.value_or(k * k * x.size(2) * x.size(3) > kFftWorkThreshold);
    if (fft) {
        return conv2d_same_fft(x, weight, bias);
    }
    return torch::nn::functional::conv2d(
        x, weight, torch::nn::functional::Conv2dFuncOptions().bias(bias).padding((k - 1) / 2));
}

}  // namespace bppnet
