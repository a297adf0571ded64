#include "bppnet/image_tensor.hpp"

namespace bppnet {

std::string to_string(ColorSpace space) {
    switch (space) {
        case ColorSpace::kRGB: return "rgb";
        case ColorSpace::kYCbCr: return "ycbcr";
        case ColorSpace::kFeature: return "feature";
    }
    return "unknown";
}

ColorSpace colorspace_from_string(const std::string& name) {
    if (name == "rgb" || name == "RGB") return ColorSpace::kRGB;
    if (name == "ycbcr" || name == "YCbCr" || name == "YCBCR") return ColorSpace::kYCbCr;
    if (name == "feature") return ColorSpace::kFeature;
    throw ConfigError("unknown colorspace: " + name);
}

void require_image(const torch::Tensor& t, int64_t expected_channels,
                   const char* what) {
    if (!t.defined() || t.dim() != 4) {
        throw DimensionError(std::string(what) + ": expected a (batch, channels, height, width) tensor");
    }
    if (t.size(0) < 1 || t.size(2) < 1 || t.size(3) < 1) {
        throw DimensionError(std::string(what) + ": batch/height/width must be >= 1");
    }
    if (expected_channels >= 0 && t.size(1) != expected_channels) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(expected_channels) +
                             " channels, got " + std::to_string(t.size(1)));
    }
}

}  // namespace bppnet
