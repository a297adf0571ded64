#pragma once

#include <torch/torch.h>

#include <memory>

#include "bppnet/features.hpp"
#include "bppnet/image_tensor.hpp"

namespace bppnet {

// Probability maps are clamped to [kProbEps, 1-kProbEps] before any log, so
// losses stay finite for saturated discriminators.
inline constexpr double kProbEps = 1e-7;

// A1..A4 weigh the generator terms (adversarial, content, L2, SSIM); B1
// weighs the discriminator loss. Any weight may be zeroed for ablation.
struct LossWeights {
    double adv = 0.7;      // A1
    double content = 0.5;  // A2
    double l2 = 1.0;       // A3
    double ssim = 1.0;     // A4
    double disc = 1.0;     // B1

    void validate() const;
};

enum class ContentNorm { kL1, kL2Squared };

struct ContentLossConfig {
    std::shared_ptr<FeatureExtractor> extractor;
    ContentNorm norm = ContentNorm::kL1;
};

struct SsimParams {
    int64_t window_size = 11;  // odd
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;  // L
};

// -<log D(pred)>; >= 0, -> 0 as the map -> 1.
torch::Tensor adv_generator_loss(const torch::Tensor& pred_map);

// -(<log D(real)> + <log(1 - D(fake))>); 2 ln 2 at the 0.5 midpoint.
torch::Tensor adv_discriminator_loss(const torch::Tensor& real_map, const torch::Tensor& fake_map);

// Mean squared error over all elements.
torch::Tensor l2_loss(const torch::Tensor& gt, const torch::Tensor& pred);

// sum_i (1/N_i) * ||phi_i(gt) - phi_i(pred)||, averaged over the batch.
torch::Tensor content_loss(const ContentLossConfig& cfg, const torch::Tensor& gt,
                           const torch::Tensor& pred);

// Normalized 2-D Gaussian window, (channels,1,size,size), for grouped conv.
torch::Tensor gaussian_window(int64_t size, double sigma, int64_t channels,
                              torch::TensorOptions options);

// Local SSIM over valid (fully inside) windows; map size (H-w+1, W-w+1).
torch::Tensor ssim_map(const torch::Tensor& a, const torch::Tensor& b, const SsimParams& params = {});

// Mean of the local map; symmetric, in [-1,1], 1 iff a == b.
torch::Tensor ssim(const torch::Tensor& a, const torch::Tensor& b, const SsimParams& params = {});

// 1 - ssim(gt, pred).
torch::Tensor ssim_loss(const torch::Tensor& gt, const torch::Tensor& pred,
                        const SsimParams& params = {});

// A1*adv + A2*content + A3*l2 + A4*ssim, exact weighted sum.
torch::Tensor total_generator_loss(const LossWeights& w, const torch::Tensor& adv,
                                   const torch::Tensor& content, const torch::Tensor& l2,
                                   const torch::Tensor& ssim_term);

// B1 * adv_disc.
torch::Tensor total_discriminator_loss(const LossWeights& w, const torch::Tensor& adv_disc);

}  // namespace bppnet
