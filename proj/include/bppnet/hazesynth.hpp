#pragma once

#include <array>
#include <filesystem>
#include <optional>

#include "bppnet/image_tensor.hpp"

namespace bppnet {

enum class HazeMode { kHomogeneous, kDense, kInhomogeneous };

std::string to_string(HazeMode mode);
HazeMode haze_mode_from_string(const std::string& name);

// Koschmieder forward model: I = J*t + A*(1-t), t = exp(-beta * depth)
// (times a smooth field multiplier in the inhomogeneous regime).
struct HazeParams {
    std::array<double, 3> atmospheric_light = {0.8, 0.8, 0.8};
    HazeMode mode = HazeMode::kHomogeneous;
    double beta = 1.0;  // scattering coefficient, > 0
    uint64_t seed = 0;  // drives the depth map and the inhomogeneity field
    // Explicit nonnegative (h,w) depth; defaults to a seeded ramp + relief.
    std::optional<torch::Tensor> depth_map;
};

// Draws beta / atmospheric light for the given mode from the seeded stream.
HazeParams sample_haze_params(HazeMode mode, uint64_t seed);

// Per-pixel transmission map (1,1,h,w), values in (0,1], strictly
// nonincreasing in beta pointwise.
torch::Tensor transmission(const HazeParams& params, int64_t h, int64_t w);

// Blends scene radiance toward the atmospheric light; result in [0,1].
ImageTensor apply_koschmieder(const ImageTensor& clear, const torch::Tensor& t,
                              const std::array<double, 3>& atmospheric_light);

// Procedural clear scene: textured gradient plus seeded shapes. RGB, [0,1].
ImageTensor synth_clear_scene(int64_t size, uint64_t seed);

// Smooth random field in [0,1] with correlation length ~ size/4.
torch::Tensor smooth_random_field(int64_t h, int64_t w, uint64_t seed);

// Writes n (hazy, GT) pairs in NTIRE layout (NN_hazy.png / NN_GT.png) plus a
// human-readable manifest of the draw parameters. Fully seed-determined.
void generate_pairs(int64_t n, int64_t size, HazeMode mode, uint64_t seed,
                    const std::filesystem::path& out_dir);

}  // namespace bppnet
