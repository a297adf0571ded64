#include "bppnet/hazesynth.hpp"

#include <fstream>
#include <random>

#include "bppnet/datapipe.hpp"

namespace bppnet {

std::string to_string(HazeMode mode) {
    switch (mode) {
        case HazeMode::kHomogeneous: return "homogeneous";
        case HazeMode::kDense: return "dense";
        case HazeMode::kInhomogeneous: return "inhomogeneous";
    }
    return "unknown";
}

HazeMode haze_mode_from_string(const std::string& name) {
    if (name == "homogeneous") return HazeMode::kHomogeneous;
    if (name == "dense") return HazeMode::kDense;
    if (name == "inhomogeneous") return HazeMode::kInhomogeneous;
    throw ConfigError("unknown haze mode: " + name);
}

namespace {

torch::Tensor uniform_field(int64_t h, int64_t w, std::mt19937_64& rng) {
    auto field = torch::empty({h, w}, torch::kFloat64);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    auto acc = field.accessor<double, 2>();
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x) acc[y][x] = dist(rng);
    }
    return field;
}

}  // namespace

torch::Tensor smooth_random_field(int64_t h, int64_t w, uint64_t seed) {
    std::mt19937_64 rng(seed);
    // Coarse 4x4 grid upsampled bicubically: correlation length ~ size/4.
    auto coarse = uniform_field(4, 4, rng).view({1, 1, 4, 4});
    return bicubic_resize(coarse, h, w).view({h, w});
}

HazeParams sample_haze_params(HazeMode mode, uint64_t seed) {
    HazeParams params;
    params.mode = mode;
    params.seed = seed;
    std::mt19937_64 rng(derive_seed(seed, "haze_params"));
    std::uniform_real_distribution<double> beta_mild(0.8, 1.6);
    std::uniform_real_distribution<double> beta_dense(3.0, 5.0);
    params.beta = mode == HazeMode::kDense ? beta_dense(rng) : beta_mild(rng);
    std::uniform_real_distribution<double> light(0.7, 0.95);
    for (auto& a : params.atmospheric_light) a = light(rng);
    return params;
}

torch::Tensor transmission(const HazeParams& params, int64_t h, int64_t w) {
    if (params.beta <= 0.0) {
        throw ConfigError("transmission: beta must be positive");
    }
    if (h < 1 || w < 1) {
        throw DimensionError("transmission: empty field");
    }
    torch::Tensor depth;
    if (params.depth_map) {
        depth = params.depth_map->to(torch::kFloat64);
        if (depth.dim() != 2 || depth.size(0) != h || depth.size(1) != w) {
            throw DimensionError("transmission: depth map must be (h,w)");
        }
        if (depth.min().item<double>() < 0.0) {
            throw ConfigError("transmission: depth must be nonnegative");
        }
    } else {
        // Vertical ramp plus seeded smooth relief, nonnegative.
        auto ramp = torch::linspace(0.15, 1.0, h, torch::kFloat64).view({h, 1}).expand({h, w});
        auto relief = smooth_random_field(h, w, derive_seed(params.seed, "depth"));
        depth = ramp + 0.25 * relief;
    }
    auto optical = params.beta * depth;
    if (params.mode == HazeMode::kInhomogeneous) {
        optical = optical * smooth_random_field(h, w, derive_seed(params.seed, "field"));
    }
    return torch::exp(-optical).view({1, 1, h, w});
}

ImageTensor apply_koschmieder(const ImageTensor& clear, const torch::Tensor& t,
                              const std::array<double, 3>& atmospheric_light) {
    require_image(clear.data, 3, "apply_koschmieder");
    if (t.dim() != 4 || t.size(2) != clear.height() || t.size(3) != clear.width()) {
        throw DimensionError("apply_koschmieder: transmission map does not match image");
    }
    auto airlight = torch::tensor({atmospheric_light[0], atmospheric_light[1],
                                   atmospheric_light[2]},
                                  torch::kFloat64)
                        .view({1, 3, 1, 1});
    auto tt = t.to(torch::kFloat64);
    auto hazy = clear.data.to(torch::kFloat64) * tt + airlight * (1.0 - tt);
    return {hazy.clamp(0.0, 1.0).to(clear.data.dtype()), clear.space};
}

ImageTensor synth_clear_scene(int64_t size, uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, "scene"));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Two-corner gradient base.
    auto yy = torch::linspace(0.0, 1.0, size, torch::kFloat64).view({size, 1}).expand({size, size});
    auto xx = torch::linspace(0.0, 1.0, size, torch::kFloat64).view({1, size}).expand({size, size});
    auto img = torch::empty({3, size, size}, torch::kFloat64);
    for (int64_t c = 0; c < 3; ++c) {
        const double c00 = unit(rng), c11 = unit(rng);
        img[c] = c00 * (1.0 - xx) * (1.0 - yy) + c11 * xx * yy + 0.5 * (xx * (1.0 - yy) + yy * (1.0 - xx));
    }
    // Texture: fine seeded noise keeps local contrast learnable.
    img += 0.08 * (uniform_field(size, size, rng).unsqueeze(0) - 0.5);

    // A handful of solid shapes with crisp edges.
    std::uniform_int_distribution<int64_t> coord(0, size - 1);
    std::uniform_int_distribution<int64_t> extent(size / 8, size / 3);
    const int64_t shapes = 6;
    for (int64_t s = 0; s < shapes; ++s) {
        const bool circle = (s % 2) == 1;
        const int64_t cy = coord(rng), cx = coord(rng), r = extent(rng);
        const double cr = unit(rng), cg = unit(rng), cb = unit(rng);
        auto acc = img.accessor<double, 3>();
        for (int64_t y = std::max<int64_t>(0, cy - r); y < std::min(size, cy + r); ++y) {
            for (int64_t x = std::max<int64_t>(0, cx - r); x < std::min(size, cx + r); ++x) {
                if (circle && (y - cy) * (y - cy) + (x - cx) * (x - cx) > r * r) continue;
                acc[0][y][x] = cr;
                acc[1][y][x] = cg;
                acc[2][y][x] = cb;
            }
        }
    }
    return {img.clamp(0.0, 1.0).unsqueeze(0).to(torch::kFloat32), ColorSpace::kRGB};
}

void generate_pairs(int64_t n, int64_t size, HazeMode mode, uint64_t seed,
                    const std::filesystem::path& out_dir) {
    if (n < 1) {
        throw ConfigError("generate_pairs: n must be >= 1");
    }
    std::filesystem::create_directories(out_dir);
    std::ofstream manifest(out_dir / "manifest.txt");
    if (!manifest) {
        throw IoError("generate_pairs: cannot write manifest in " + out_dir.string());
    }
    manifest << "dataset = synthetic\nmode = " << to_string(mode) << "\nseed = " << seed
             << "\ncount = " << n << "\nsize = " << size << "\n";

    for (int64_t i = 0; i < n; ++i) {
        const uint64_t image_seed = derive_seed(seed, static_cast<uint64_t>(i));
        auto clear = synth_clear_scene(size, image_seed);
        auto params = sample_haze_params(mode, image_seed);
        auto t = transmission(params, size, size);
        auto hazy = apply_koschmieder(clear, t, params.atmospheric_light);

        char id[8];
        std::snprintf(id, sizeof(id), "%02lld", static_cast<long long>(i + 1));
        save_image(clear, out_dir / (std::string(id) + "_GT.png"));
        save_image(hazy, out_dir / (std::string(id) + "_hazy.png"));
        manifest << id << ".beta = " << params.beta << "\n"
                 << id << ".A = " << params.atmospheric_light[0] << ","
                 << params.atmospheric_light[1] << "," << params.atmospheric_light[2] << "\n"
                 << id << ".mean_t = " << t.mean().item<double>() << "\n";
    }
}

}  // namespace bppnet
