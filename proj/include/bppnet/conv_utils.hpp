#pragma once

#include <torch/torch.h>

#include <optional>

namespace bppnet {

// Same-padded cross-correlation for odd square kernels. Small kernels run
// through direct conv2d; large-kernel/large-map combinations switch to an
// FFT evaluation of the identical operation (direct conv's im2col buffer for
// 45x45 kernels at 512^2 runs to gigabytes). Both routes are differentiable.
// force_fft pins the route for tests.
torch::Tensor conv2d_same(const torch::Tensor& x, const torch::Tensor& weight,
                          const torch::Tensor& bias, std::optional<bool> force_fft = {});

}  // namespace bppnet
