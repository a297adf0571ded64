#include <doctest.h>
#include <torch/torch.h>

#include <filesystem>
#include <fstream>

#include "bppnet/datapipe.hpp"
#include "bppnet/hazesynth.hpp"

using namespace bppnet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("bppnet_hazesynth_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("transmission limits and closed form") {
    HazeParams p;
    p.beta = 1e-9;
    auto t = transmission(p, 16, 16);
    CHECK(t.min().item<double>() > 1.0 - 1e-6);

    p.beta = 1.0;
    p.depth_map = torch::ones({16, 16}, torch::kFloat64);
    auto t1 = transmission(p, 16, 16);
    CHECK((t1 - std::exp(-1.0)).abs().max().item<double>() < 1e-12);

    p.beta = 0.0;
    CHECK_THROWS_AS(transmission(p, 16, 16), ConfigError);
}

TEST_CASE("transmission is pointwise nonincreasing in beta") {
    for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        HazeParams lo, hi;
        lo.seed = hi.seed = seed;
        lo.beta = 0.7;
        hi.beta = 2.9;
        auto t_lo = transmission(lo, 24, 24);
        auto t_hi = transmission(hi, 24, 24);
        CHECK((t_hi <= t_lo).all().item<bool>());
        CHECK(t_hi.min().item<double>() > 0.0);
        CHECK(t_lo.max().item<double>() <= 1.0);
    }
}

TEST_CASE("inhomogeneous field is reproducible and spatially varying") {
    HazeParams p;
    p.mode = HazeMode::kInhomogeneous;
    p.seed = 77;
    p.beta = 1.5;
    auto t1 = transmission(p, 32, 32);
    auto t2 = transmission(p, 32, 32);
    CHECK(torch::equal(t1, t2));
    CHECK(t1.std(false).item<double>() > 0.0);

    p.seed = 78;
    CHECK_FALSE(torch::equal(t1, transmission(p, 32, 32)));
}

TEST_CASE("koschmieder boundary identities hold exactly") {
    auto clear = synth_clear_scene(32, 5);
    std::array<double, 3> airlight = {0.9, 0.85, 0.8};

    auto hazy1 = apply_koschmieder(clear, torch::ones({1, 1, 32, 32}), airlight);
    CHECK(torch::equal(hazy1.data, clear.data));

    auto hazy0 = apply_koschmieder(clear, torch::zeros({1, 1, 32, 32}), airlight);
    for (int c = 0; c < 3; ++c) {
        CHECK((hazy0.data.select(1, c) - airlight[c]).abs().max().item<double>() < 1e-7);
    }
}

TEST_CASE("koschmieder midpoint arithmetic") {
    ImageTensor clear{torch::full({1, 3, 4, 4}, 0.2, torch::kFloat64), ColorSpace::kRGB};
    auto hazy = apply_koschmieder(clear, torch::full({1, 1, 4, 4}, 0.5, torch::kFloat64),
                                  {0.9, 0.9, 0.9});
    CHECK((hazy.data - 0.55).abs().max().item<double>() < 1e-12);

    CHECK_THROWS_AS(apply_koschmieder(clear, torch::ones({1, 1, 8, 8}), {0.9, 0.9, 0.9}),
                    DimensionError);
}

TEST_CASE("dense draws are hazier than homogeneous under the same seed") {
    for (uint64_t seed : {10ULL, 11ULL, 12ULL}) {
        auto homog = sample_haze_params(HazeMode::kHomogeneous, seed);
        auto dense = sample_haze_params(HazeMode::kDense, seed);
        const double t_homog = transmission(homog, 32, 32).mean().item<double>();
        const double t_dense = transmission(dense, 32, 32).mean().item<double>();
        CHECK(t_dense < t_homog);
    }
    // dense regime: mostly opaque
    auto dense = sample_haze_params(HazeMode::kDense, 13);
    CHECK(transmission(dense, 32, 32).mean().item<double>() < 0.3);
}

TEST_CASE("haze lowers per-channel contrast for mid-range atmospheric light") {
    for (uint64_t seed : {30ULL, 31ULL, 32ULL, 33ULL}) {
        auto clear = synth_clear_scene(48, seed);
        HazeParams p = sample_haze_params(HazeMode::kHomogeneous, seed);
        p.atmospheric_light = {0.8, 0.8, 0.8};
        auto hazy = apply_koschmieder(clear, transmission(p, 48, 48), p.atmospheric_light);
        for (int c = 0; c < 3; ++c) {
            const double clear_std = clear.data.select(1, c).std(false).item<double>();
            const double hazy_std = hazy.data.select(1, c).std(false).item<double>();
            INFO("seed ", seed, " channel ", c);
            CHECK(hazy_std < clear_std);
        }
    }
}

TEST_CASE("generate_pairs emits a loadable NTIRE-layout dataset") {
    auto dir = temp_dir("pairs");
    generate_pairs(4, 64, HazeMode::kHomogeneous, 42, dir);
    auto ds = load_dataset(DatasetSpec::for_dataset(DatasetName::kSynthetic, dir));
    REQUIRE(ds.size() == 4);
    auto pair = ds.load(0);
    CHECK(pair.hazy.height() == 64);
    CHECK(pair.hazy.data.min().item<double>() >= 0.0);
    CHECK(pair.hazy.data.max().item<double>() <= 1.0);
    CHECK(fs::exists(dir / "manifest.txt"));

    CHECK_THROWS_AS(generate_pairs(0, 64, HazeMode::kDense, 1, dir), ConfigError);
}

TEST_CASE("generate_pairs is byte-identical for the same seed") {
    auto dir_a = temp_dir("det_a");
    auto dir_b = temp_dir("det_b");
    generate_pairs(2, 32, HazeMode::kInhomogeneous, 7, dir_a);
    generate_pairs(2, 32, HazeMode::kInhomogeneous, 7, dir_b);
    for (const auto* name : {"01_hazy.png", "01_GT.png", "02_hazy.png", "02_GT.png"}) {
        CHECK(file_bytes(dir_a / name) == file_bytes(dir_b / name));
    }
    auto dir_c = temp_dir("det_c");
    generate_pairs(2, 32, HazeMode::kInhomogeneous, 8, dir_c);
    CHECK(file_bytes(dir_a / "01_hazy.png") != file_bytes(dir_c / "01_hazy.png"));
}
