#pragma once

#include "bppnet/image_tensor.hpp"

namespace bppnet {

// Full-range BT.601 RGB <-> YCbCr, chroma offset 0.5, outputs clamped to [0,1].
// Round trip holds within 1e-3 per element for inputs in [0,1].
ImageTensor rgb_to_ycbcr(const ImageTensor& img);
ImageTensor ycbcr_to_rgb(const ImageTensor& img);

// Converts to the requested space; no-op when already there.
ImageTensor convert_colorspace(const ImageTensor& img, ColorSpace target);

}  // namespace bppnet
