#include "bppnet/losses.hpp"

namespace bppnet {

namespace {

void require_finite(const torch::Tensor& t, const char* what) {
    if (!torch::isfinite(t).all().item<bool>()) {
        throw DimensionError(std::string(what) + ": non-finite input");
    }
}

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
    if (!a.sizes().equals(b.sizes())) {
        throw DimensionError(std::string(what) + ": shape mismatch");
    }
}

torch::Tensor clamped_log(const torch::Tensor& p) {
    return torch::log(p.clamp(kProbEps, 1.0 - kProbEps));
}

}  // namespace

void LossWeights::validate() const {
    for (double w : {adv, content, l2, ssim, disc}) {
        if (w < 0.0 || !std::isfinite(w)) {
            throw ConfigError("LossWeights: weights must be finite and nonnegative");
        }
    }
}

torch::Tensor adv_generator_loss(const torch::Tensor& pred_map) {
    require_finite(pred_map, "adv_generator_loss");
    return -clamped_log(pred_map).mean();
}

torch::Tensor adv_discriminator_loss(const torch::Tensor& real_map, const torch::Tensor& fake_map) {
    require_finite(real_map, "adv_discriminator_loss");
    require_finite(fake_map, "adv_discriminator_loss");
    return -(clamped_log(real_map).mean() + clamped_log(1.0 - fake_map).mean());
}

torch::Tensor l2_loss(const torch::Tensor& gt, const torch::Tensor& pred) {
    require_same_shape(gt, pred, "l2_loss");
    return (gt - pred).square().mean();
}

torch::Tensor content_loss(const ContentLossConfig& cfg, const torch::Tensor& gt,
                           const torch::Tensor& pred) {
    if (!cfg.extractor) {
        throw ConfigError("content_loss: no feature extractor configured");
    }
    require_same_shape(gt, pred, "content_loss");
    auto phi_gt = cfg.extractor->activations(gt);
    auto phi_pred = cfg.extractor->activations(pred);
    if (phi_gt.size() != phi_pred.size() || phi_gt.empty()) {
        throw DimensionError("content_loss: extractor returned mismatched activations");
    }
    torch::Tensor total;
    for (size_t i = 0; i < phi_gt.size(); ++i) {
        auto diff = phi_gt[i] - phi_pred[i];
        // .mean() folds both the 1/N_i scaling and the expectation over pairs.
        auto term = cfg.norm == ContentNorm::kL1 ? diff.abs().mean() : diff.square().mean();
        total = total.defined() ? total + term : term;
    }
    return total;
}

torch::Tensor gaussian_window(int64_t size, double sigma, int64_t channels,
                              torch::TensorOptions options) {
    auto coords = torch::arange(size, torch::kFloat64) - static_cast<double>(size - 1) / 2.0;
    auto g = torch::exp(-coords.square() / (2.0 * sigma * sigma));
    g = g / g.sum();
    auto window2d = torch::outer(g, g);
    return window2d.to(options).expand({channels, 1, size, size}).contiguous();
}

torch::Tensor ssim_map(const torch::Tensor& a, const torch::Tensor& b, const SsimParams& params) {
    require_image(a, -1, "ssim");
    require_same_shape(a, b, "ssim");
    if (params.window_size < 1 || params.window_size % 2 == 0) {
        throw ConfigError("ssim: window size must be odd and positive");
    }
    if (a.size(2) < params.window_size || a.size(3) < params.window_size) {
        throw DimensionError("ssim: image smaller than the " + std::to_string(params.window_size) +
                             "x" + std::to_string(params.window_size) + " window");
    }
    const int64_t channels = a.size(1);
    auto window = gaussian_window(params.window_size, params.sigma, channels, a.options());
    namespace F = torch::nn::functional;
    const auto conv_opts = F::Conv2dFuncOptions().groups(channels);  // valid windows, no padding

    auto mu1 = F::conv2d(a, window, conv_opts);
    auto mu2 = F::conv2d(b, window, conv_opts);
    auto mu1_sq = mu1.square();
    auto mu2_sq = mu2.square();
    auto mu1_mu2 = mu1 * mu2;
    auto sigma1_sq = F::conv2d(a * a, window, conv_opts) - mu1_sq;
    auto sigma2_sq = F::conv2d(b * b, window, conv_opts) - mu2_sq;
    auto sigma12 = F::conv2d(a * b, window, conv_opts) - mu1_mu2;

    const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
    const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
    return ((2.0 * mu1_mu2 + c1) * (2.0 * sigma12 + c2)) /
           ((mu1_sq + mu2_sq + c1) * (sigma1_sq + sigma2_sq + c2));
}

torch::Tensor ssim(const torch::Tensor& a, const torch::Tensor& b, const SsimParams& params) {
    return ssim_map(a, b, params).mean();
}

torch::Tensor ssim_loss(const torch::Tensor& gt, const torch::Tensor& pred,
                        const SsimParams& params) {
    return 1.0 - ssim(gt, pred, params);
}

torch::Tensor total_generator_loss(const LossWeights& w, const torch::Tensor& adv,
                                   const torch::Tensor& content, const torch::Tensor& l2,
                                   const torch::Tensor& ssim_term) {
    for (const auto* t : {&adv, &content, &l2, &ssim_term}) {
        require_finite(*t, "total_generator_loss");
    }
    return w.adv * adv + w.content * content + w.l2 * l2 + w.ssim * ssim_term;
}

torch::Tensor total_discriminator_loss(const LossWeights& w, const torch::Tensor& adv_disc) {
    require_finite(adv_disc, "total_discriminator_loss");
    return w.disc * adv_disc;
}

}  // namespace bppnet
