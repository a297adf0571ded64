#include <doctest.h>
#include <torch/torch.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "bppnet/colorspace.hpp"
#include "bppnet/datapipe.hpp"
#include "oracles.hpp"

using namespace bppnet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("bppnet_datapipe_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ImageTensor rgb_pixel(double r, double g, double b) {
    auto t = torch::tensor({r, g, b}, torch::kFloat64).view({1, 3, 1, 1});
    return {t, ColorSpace::kRGB};
}

}  // namespace

TEST_CASE("ycbcr anchors: black, white, red") {
    auto black = rgb_to_ycbcr(rgb_pixel(0, 0, 0)).data.view(-1);
    CHECK(black[0].item<double>() == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(black[1].item<double>() == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(black[2].item<double>() == doctest::Approx(0.5).epsilon(1e-6));

    auto white = rgb_to_ycbcr(rgb_pixel(1, 1, 1)).data.view(-1);
    CHECK(white[0].item<double>() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(white[1].item<double>() == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(white[2].item<double>() == doctest::Approx(0.5).epsilon(1e-6));

    // BT.601 matrix: Y = 0.299, Cb = 0.5 - 0.299/1.772, Cr = 1.0
    auto red = rgb_to_ycbcr(rgb_pixel(1, 0, 0)).data.view(-1);
    CHECK(red[0].item<double>() == doctest::Approx(0.299).epsilon(1e-9));
    CHECK(red[1].item<double>() == doctest::Approx(0.5 - 0.299 * 0.5 / 0.886).epsilon(1e-9));
    CHECK(red[2].item<double>() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ycbcr round trip within 1e-3 over a seeded batch") {
    torch::manual_seed(20);
    ImageTensor batch{torch::rand({4, 3, 17, 23}), ColorSpace::kRGB};
    auto back = ycbcr_to_rgb(rgb_to_ycbcr(batch));
    CHECK((back.data - batch.data).abs().max().item<double>() < 1e-3);
    CHECK(back.space == ColorSpace::kRGB);
}

TEST_CASE("colorspace conversion guards") {
    ImageTensor rgb{torch::rand({1, 3, 4, 4}), ColorSpace::kRGB};
    ImageTensor tagged_ycbcr{torch::rand({1, 3, 4, 4}), ColorSpace::kYCbCr};
    CHECK_THROWS_AS(rgb_to_ycbcr(tagged_ycbcr), DimensionError);
    CHECK_THROWS_AS(ycbcr_to_rgb(rgb), DimensionError);
    ImageTensor wide{torch::rand({1, 4, 4, 4}), ColorSpace::kRGB};
    CHECK_THROWS_AS(rgb_to_ycbcr(wide), DimensionError);
    CHECK(torch::equal(convert_colorspace(rgb, ColorSpace::kRGB).data, rgb.data));
}

TEST_CASE("random crops: plan counts, alignment, seed replay, epoch freshness") {
    // distinct values everywhere so equal tensors imply equal coordinates
    auto values = torch::arange(0, 3 * 48 * 48, torch::kFloat32).view({1, 3, 48, 48}) /
                  (3.0 * 48 * 48);
    ImagePair pair{"img1", {values, ColorSpace::kRGB}, {values.clone(), ColorSpace::kRGB}};
    std::vector<CropSpec> plan = {{16, 4}, {32, 4}};

    auto patches = random_crops(pair, plan, 99, 0);
    REQUIRE(patches.size() == 8);
    for (const auto& p : patches) {
        CHECK(torch::equal(p.hazy.data, p.clear.data));  // identical coordinates
    }
    CHECK(patches[0].hazy.height() == 16);
    CHECK(patches[4].hazy.height() == 32);

    auto replay = random_crops(pair, plan, 99, 0);
    for (size_t i = 0; i < patches.size(); ++i) {
        CHECK(torch::equal(patches[i].hazy.data, replay[i].hazy.data));
    }

    auto next_epoch = random_crops(pair, plan, 99, 1);
    bool any_differs = false;
    for (size_t i = 0; i < patches.size(); ++i) {
        any_differs |= !torch::equal(patches[i].hazy.data, next_epoch[i].hazy.data);
    }
    CHECK(any_differs);
}

TEST_CASE("degenerate crop covers the whole image deterministically") {
    auto img = torch::rand({1, 3, 20, 20});
    ImagePair pair{"p", {img, ColorSpace::kRGB}, {img.clone(), ColorSpace::kRGB}};
    auto patches = random_crops(pair, {{20, 1}}, 1, 5);
    REQUIRE(patches.size() == 1);
    CHECK(torch::equal(patches[0].hazy.data, img));

    CHECK_THROWS_AS(random_crops(pair, {{21, 1}}, 1, 0), DimensionError);
}

TEST_CASE("bicubic reproduces constants and the identity") {
    ImageTensor c{torch::full({1, 3, 37, 29}, 0.37), ColorSpace::kRGB};
    auto resized = bicubic_resize(c, 64);
    CHECK(resized.data.sizes() == torch::IntArrayRef({1, 3, 64, 64}));
    CHECK((resized.data - 0.37).abs().max().item<double>() < 1e-6);

    auto img = torch::rand({1, 3, 32, 32});
    CHECK(torch::equal(bicubic_resize({img, ColorSpace::kRGB}, 32).data, img));
}

TEST_CASE("bicubic matches the direct kernel-evaluation oracle") {
    // bilinear ramp downsized
    auto yy = torch::linspace(0, 1, 40, torch::kFloat64).view({40, 1}).expand({40, 40});
    auto xx = torch::linspace(0, 1, 40, torch::kFloat64).view({1, 40}).expand({40, 40});
    auto ramp = (0.25 * yy + 0.5 * xx).unsqueeze(0).unsqueeze(0);
    auto impl = bicubic_resize(ramp, 16, 16);
    auto ref = oracles::bicubic_direct(ramp, 16, 16);
    CHECK((impl - ref).abs().max().item<double>() < 1e-12);

    // seeded random content, both down and up
    torch::manual_seed(21);
    auto noise = torch::rand({1, 3, 25, 33}, torch::kFloat64);
    for (auto [h, w] : {std::pair<int64_t, int64_t>{12, 12}, {48, 48}}) {
        auto got = bicubic_resize(noise, h, w);
        auto want = oracles::bicubic_direct(noise, h, w);
        CHECK((got - want).abs().max().item<double>() < 1e-12);
    }
}

TEST_CASE("bicubic clamps to [0,1]") {
    // step edge induces overshoot; outputs must stay in range
    auto img = torch::cat({torch::zeros({1, 1, 16, 8}), torch::ones({1, 1, 16, 8})}, 3);
    auto out = bicubic_resize(img, 24, 24);
    CHECK(out.min().item<double>() >= 0.0);
    CHECK(out.max().item<double>() <= 1.0);
}

TEST_CASE("dataset spec defaults per dataset") {
    auto ihaze = DatasetSpec::for_dataset(DatasetName::kIHaze, "x");
    REQUIRE(ihaze.crop_plan.size() == 2);
    CHECK(ihaze.crop_plan[0].size == 1024);
    CHECK(ihaze.crop_plan[0].count == 4);
    CHECK(ihaze.crop_plan[1].size == 2048);
    CHECK(ihaze.colorspace == ColorSpace::kYCbCr);

    auto dense = DatasetSpec::for_dataset(DatasetName::kDenseHaze, "x");
    REQUIRE(dense.crop_plan.size() == 1);
    CHECK(dense.crop_plan[0].size == 1024);
    CHECK(dense.colorspace == ColorSpace::kRGB);

    CHECK(DatasetSpec::for_dataset(DatasetName::kNtire2020, "x").colorspace == ColorSpace::kYCbCr);
}

TEST_CASE("png round trip through save_image / load_image") {
    auto dir = temp_dir("png");
    torch::manual_seed(22);
    ImageTensor img{torch::rand({1, 3, 9, 13}), ColorSpace::kRGB};
    save_image(img, dir / "x.png");
    auto back = load_image(dir / "x.png");
    CHECK(back.data.sizes() == img.data.sizes());
    CHECK((back.data - img.data).abs().max().item<double>() < 1.0 / 255.0);
}

TEST_CASE("load_dataset: NTIRE naming, lexicographic ids, orphan errors") {
    auto dir = temp_dir("ntire");
    auto img = ImageTensor{torch::rand({1, 3, 8, 8}), ColorSpace::kRGB};
    for (const auto* id : {"01", "02", "03", "04", "05"}) {
        save_image(img, dir / (std::string(id) + "_hazy.png"));
        save_image(img, dir / (std::string(id) + "_GT.png"));
    }
    auto spec = DatasetSpec::for_dataset(DatasetName::kSynthetic, dir);
    auto ds = load_dataset(spec);
    REQUIRE(ds.size() == 5);
    for (size_t i = 0; i < 5; ++i) {
        CHECK(ds.entry(i).id == "0" + std::to_string(i + 1));
    }
    auto pair = ds.load(2);
    CHECK(pair.hazy.channels() == 3);

    save_image(img, dir / "06_hazy.png");  // orphan
    CHECK_THROWS_WITH_AS(load_dataset(spec), doctest::Contains("06_hazy"), IoError);
}

TEST_CASE("load_dataset: hazy/ + GT/ subdirectory layout") {
    auto dir = temp_dir("subdirs");
    fs::create_directories(dir / "hazy");
    fs::create_directories(dir / "GT");
    auto img = ImageTensor{torch::rand({1, 3, 8, 8}), ColorSpace::kRGB};
    for (const auto* id : {"a", "b", "c"}) {
        save_image(img, dir / "hazy" / (std::string(id) + ".png"));
        save_image(img, dir / "GT" / (std::string(id) + ".png"));
    }
    auto ds = load_dataset(DatasetSpec::for_dataset(DatasetName::kIHaze, dir));
    REQUIRE(ds.size() == 3);
    CHECK(ds.entry(0).id == "a");

    save_image(img, dir / "GT" / "d.png");  // GT without hazy partner
    CHECK_THROWS_WITH_AS(load_dataset(DatasetSpec::for_dataset(DatasetName::kIHaze, dir)),
                         doctest::Contains("d.png"), IoError);
}

TEST_CASE("load_dataset failures name the offender") {
    CHECK_THROWS_AS(load_dataset(DatasetSpec::for_dataset(DatasetName::kSynthetic, "/nonexistent")),
                    IoError);

    auto dir = temp_dir("garbage");
    std::ofstream(dir / "01_hazy.png") << "not a png";
    auto img = ImageTensor{torch::rand({1, 3, 8, 8}), ColorSpace::kRGB};
    save_image(img, dir / "01_GT.png");
    auto ds = load_dataset(DatasetSpec::for_dataset(DatasetName::kSynthetic, dir));
    REQUIRE(ds.size() == 1);
    CHECK_THROWS_WITH_AS(ds.load(0), doctest::Contains("01_hazy"), IoError);
}
