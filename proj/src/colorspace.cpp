#include "bppnet/colorspace.hpp"

namespace bppnet {

namespace {

// Full-range BT.601. Kb = 0.114, Kr = 0.299.
constexpr double kYR = 0.299, kYG = 0.587, kYB = 0.114;
constexpr double kCbScale = 0.5 / (1.0 - kYB);  // 1/1.772
constexpr double kCrScale = 0.5 / (1.0 - kYR);  // 1/1.402

}  // namespace

ImageTensor rgb_to_ycbcr(const ImageTensor& img) {
    require_image(img.data, 3, "rgb_to_ycbcr");
    if (img.space != ColorSpace::kRGB) {
        throw DimensionError("rgb_to_ycbcr: input is not tagged RGB");
    }
    auto r = img.data.select(1, 0);
    auto g = img.data.select(1, 1);
    auto b = img.data.select(1, 2);
    auto y = kYR * r + kYG * g + kYB * b;
    auto cb = (b - y) * kCbScale + 0.5;
    auto cr = (r - y) * kCrScale + 0.5;
    auto out = torch::stack({y, cb, cr}, 1).clamp(0.0, 1.0);
    return {out, ColorSpace::kYCbCr};
}

ImageTensor ycbcr_to_rgb(const ImageTensor& img) {
    require_image(img.data, 3, "ycbcr_to_rgb");
    if (img.space != ColorSpace::kYCbCr) {
        throw DimensionError("ycbcr_to_rgb: input is not tagged YCbCr");
    }
    auto y = img.data.select(1, 0);
    auto cb = img.data.select(1, 1) - 0.5;
    auto cr = img.data.select(1, 2) - 0.5;
    auto r = y + cr / kCrScale;
    auto b = y + cb / kCbScale;
    auto g = (y - kYR * r - kYB * b) / kYG;
    auto out = torch::stack({r, g, b}, 1).clamp(0.0, 1.0);
    return {out, ColorSpace::kRGB};
}

ImageTensor convert_colorspace(const ImageTensor& img, ColorSpace target) {
    if (img.space == target) return img;
    if (img.space == ColorSpace::kRGB && target == ColorSpace::kYCbCr) return rgb_to_ycbcr(img);
    if (img.space == ColorSpace::kYCbCr && target == ColorSpace::kRGB) return ycbcr_to_rgb(img);
    throw DimensionError("convert_colorspace: unsupported conversion from " + to_string(img.space) +
                         " to " + to_string(target));
}

}  // namespace bppnet
