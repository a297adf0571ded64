#pragma once

#include <torch/torch.h>

#include <string>

#include "bppnet/common.hpp"

namespace bppnet {

enum class ColorSpace { kRGB, kYCbCr, kFeature };

std::string to_string(ColorSpace space);
ColorSpace colorspace_from_string(const std::string& name);

// Batched raster (batch, channels, height, width). I/O-boundary tensors hold
// values in [0,1]; intermediate feature maps are unbounded and tagged kFeature.
struct ImageTensor {
    torch::Tensor data;
    ColorSpace space = ColorSpace::kRGB;

    ImageTensor() = default;
    ImageTensor(torch::Tensor t, ColorSpace s) : data(std::move(t)), space(s) {}

    int64_t batch() const { return data.size(0); }
    int64_t channels() const { return data.size(1); }
    int64_t height() const { return data.size(2); }
    int64_t width() const { return data.size(3); }
};

// Throws DimensionError unless t is a non-empty 4-axis (N,C,H,W) tensor with
// the expected channel count (expected_channels < 0 skips the channel check).
void require_image(const torch::Tensor& t, int64_t expected_channels,
                   const char* what);

}  // namespace bppnet
