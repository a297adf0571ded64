#include "bppnet/init.hpp"

#include <cmath>

namespace bppnet {

void seeded_fan_in_init(torch::nn::Module& module, uint64_t seed) {
    torch::NoGradGuard no_grad;
    torch::manual_seed(seed);
    for (auto& item : module.named_parameters()) {
        auto& p = item.value();
        if (item.key().ends_with("bias") || p.dim() < 2) {
            p.zero_();
            continue;
        }
        // fan_in = input channels * receptive field (matches conv weight layout).
        int64_t fan_in = p.size(1);
        for (int64_t d = 2; d < p.dim(); ++d) fan_in *= p.size(d);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        p.uniform_(-bound, bound);
    }
}

}  // namespace bppnet
