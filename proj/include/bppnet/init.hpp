#pragma once

#include <torch/torch.h>

#include <cstdint>

namespace bppnet {

// Uniform fan-in init: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases
// zero. Deterministic for a fixed seed and module registration order.
void seeded_fan_in_init(torch::nn::Module& module, uint64_t seed);

}  // namespace bppnet
