#include <doctest.h>
#include <torch/torch.h>

#include <cmath>

#include "bppnet/losses.hpp"
#include "oracles.hpp"

using namespace bppnet;

namespace {
const auto kF64 = torch::TensorOptions().dtype(torch::kFloat64);
}

TEST_CASE("adversarial generator loss arithmetic") {
    CHECK(adv_generator_loss(torch::full({1, 1, 2, 2}, 0.5, kF64)).item<double>() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    const double eps = 1e-4;
    CHECK(adv_generator_loss(torch::full({1, 1, 2, 2}, 1.0 - eps, kF64)).item<double>() ==
          doctest::Approx(eps).epsilon(1e-3));

    torch::manual_seed(3);
    auto map = torch::rand({1, 1, 2, 2}, kF64) * 0.8 + 0.1;
    double expected = 0.0;
    for (int i = 0; i < 4; ++i) expected -= std::log(map.view(-1)[i].item<double>());
    expected /= 4.0;
    CHECK(adv_generator_loss(map).item<double>() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("adversarial discriminator loss arithmetic") {
    auto half = torch::full({1, 1, 3, 3}, 0.5, kF64);
    CHECK(adv_discriminator_loss(half, half).item<double>() ==
          doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    const double eps = 1e-4;
    auto real = torch::full({1, 1, 2, 2}, 1.0 - eps, kF64);
    auto fake = torch::full({1, 1, 2, 2}, eps, kF64);
    CHECK(adv_discriminator_loss(real, fake).item<double>() == doctest::Approx(2 * eps).epsilon(1e-3));

    torch::manual_seed(4);
    auto r = torch::rand({1, 1, 2, 2}, kF64) * 0.8 + 0.1;
    auto f = torch::rand({1, 1, 2, 2}, kF64) * 0.8 + 0.1;
    double expected = 0.0;
    for (int i = 0; i < 4; ++i) {
        expected -= std::log(r.view(-1)[i].item<double>()) / 4.0;
        expected -= std::log(1.0 - f.view(-1)[i].item<double>()) / 4.0;
    }
    CHECK(adv_discriminator_loss(r, f).item<double>() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log losses stay finite on saturated maps") {
    auto zero = torch::zeros({1, 1, 2, 2});
    auto one = torch::ones({1, 1, 2, 2});
    CHECK(std::isfinite(adv_generator_loss(zero).item<double>()));
    CHECK(std::isfinite(adv_discriminator_loss(zero, one).item<double>()));
    CHECK_THROWS_AS(adv_generator_loss(torch::full({1, 1, 2, 2}, NAN)), DimensionError);
}

TEST_CASE("l2 loss") {
    auto a = torch::rand({1, 3, 4, 4}, kF64);
    CHECK(l2_loss(a, a).item<double>() == 0.0);
    CHECK(l2_loss(torch::zeros({1, 3, 4, 4}), torch::ones({1, 3, 4, 4})).item<double>() ==
          doctest::Approx(1.0).epsilon(1e-12));

    torch::manual_seed(5);
    auto gt = torch::rand({2, 3, 4, 4}, kF64);
    auto pred = torch::rand({2, 3, 4, 4}, kF64);
    double expected = 0.0;
    for (int64_t i = 0; i < gt.numel(); ++i) {
        const double d = gt.view(-1)[i].item<double>() - pred.view(-1)[i].item<double>();
        expected += d * d;
    }
    expected /= static_cast<double>(gt.numel());
    CHECK(l2_loss(gt, pred).item<double>() == doctest::Approx(expected).epsilon(1e-12));
    CHECK_THROWS_AS(l2_loss(gt, torch::rand({1, 3, 4, 4}, kF64)), DimensionError);
}

TEST_CASE("content loss: identity extractor reduces to mean absolute difference") {
    ContentLossConfig cfg;
    cfg.extractor = std::make_shared<IdentityFeatureExtractor>();
    auto gt = torch::zeros({1, 3, 4, 4}, kF64);
    auto pred = torch::ones({1, 3, 4, 4}, kF64);
    CHECK(content_loss(cfg, gt, pred).item<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(content_loss(cfg, pred, pred).item<double>() == 0.0);
}

TEST_CASE("content loss matches a straight-line reimplementation") {
    auto extractor = std::make_shared<TinyFeatureExtractor>(11);
    ContentLossConfig cfg{extractor, ContentNorm::kL1};
    torch::manual_seed(6);
    auto gt = torch::rand({1, 3, 8, 8}, kF64);
    auto pred = torch::rand({1, 3, 8, 8}, kF64);

    double expected = 0.0;
    auto phi_gt = extractor->activations(gt);
    auto phi_pred = extractor->activations(pred);
    for (size_t i = 0; i < phi_gt.size(); ++i) {
        auto diff = (phi_gt[i] - phi_pred[i]).view(-1);
        double sum = 0.0;
        for (int64_t j = 0; j < diff.numel(); ++j) sum += std::abs(diff[j].item<double>());
        expected += sum / static_cast<double>(diff.numel());
    }
    CHECK(content_loss(cfg, gt, pred).item<double>() == doctest::Approx(expected).epsilon(1e-12));

    cfg.norm = ContentNorm::kL2Squared;
    double expected_sq = 0.0;
    for (size_t i = 0; i < phi_gt.size(); ++i) {
        auto diff = (phi_gt[i] - phi_pred[i]).view(-1);
        double sum = 0.0;
        for (int64_t j = 0; j < diff.numel(); ++j) {
            const double d = diff[j].item<double>();
            sum += d * d;
        }
        expected_sq += sum / static_cast<double>(diff.numel());
    }
    CHECK(content_loss(cfg, gt, pred).item<double>() == doctest::Approx(expected_sq).epsilon(1e-12));
}

TEST_CASE("ssim of an image with itself is 1") {
    torch::manual_seed(7);
    auto img = torch::rand({1, 3, 16, 16}, kF64);
    CHECK(ssim(img, img).item<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ssim_loss(img, img).item<double>() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ssim closed form on constant images") {
    auto zeros = torch::zeros({1, 1, 16, 16}, kF64);
    auto ones = torch::ones({1, 1, 16, 16}, kF64);
    const double c1 = 1e-4;
    const double expected = c1 / (1.0 + c1);  // zero variances, means 0 and 1
    CHECK(ssim(zeros, ones).item<double>() == doctest::Approx(expected).epsilon(1e-9));
    CHECK(ssim_loss(zeros, ones).item<double>() == doctest::Approx(1.0 - expected).epsilon(1e-9));
}

TEST_CASE("ssim matches the brute-force sliding-window oracle") {
    torch::manual_seed(8);
    auto a = torch::rand({1, 3, 32, 32}, kF64);
    auto b = (a + 0.2 * torch::randn({1, 3, 32, 32}, kF64)).clamp(0, 1);
    const double impl = ssim(a, b).item<double>();
    const double ref = oracles::ssim_bruteforce(a, b);
    CHECK(std::abs(impl - ref) <= 1e-6);

    // float32 inputs agree at float precision
    const double impl32 = ssim(a.to(torch::kFloat32), b.to(torch::kFloat32)).item<double>();
    CHECK(std::abs(impl32 - ref) <= 1e-4);
}

TEST_CASE("ssim is symmetric to machine precision") {
    torch::manual_seed(9);
    auto a = torch::rand({1, 3, 16, 16}, kF64);
    auto b = torch::rand({1, 3, 16, 16}, kF64);
    CHECK(ssim(a, b).item<double>() == ssim(b, a).item<double>());
}

TEST_CASE("ssim map has valid-window geometry and window-size guard") {
    auto a = torch::rand({1, 3, 16, 20}, kF64);
    auto map = ssim_map(a, a);
    CHECK(map.sizes() == torch::IntArrayRef({1, 3, 6, 10}));
    CHECK_THROWS_AS(ssim(torch::rand({1, 3, 8, 8}), torch::rand({1, 3, 8, 8})), DimensionError);
    SsimParams even;
    even.window_size = 10;
    CHECK_THROWS_AS(ssim(a, a, even), ConfigError);
}

TEST_CASE("ssim loss grows with noise amplitude") {
    torch::manual_seed(10);
    auto gt = torch::rand({1, 3, 24, 24}, kF64);
    auto noise = torch::randn({1, 3, 24, 24}, kF64);
    double previous = -1.0;
    for (double amp : {0.0, 0.05, 0.1, 0.2, 0.4}) {
        const double loss = ssim_loss(gt, (gt + amp * noise).clamp(0, 1)).item<double>();
        CHECK(loss >= previous);
        previous = loss;
    }
}

TEST_CASE("weighted totals") {
    LossWeights w;
    auto one = torch::ones({}, kF64);
    CHECK(total_generator_loss(w, one, one, one, one).item<double>() == 3.2);
    auto zero = torch::zeros({}, kF64);
    CHECK(total_generator_loss(w, zero, zero, zero, zero).item<double>() == 0.0);

    torch::manual_seed(11);
    auto parts = torch::rand({4}, kF64);
    const double expected = 0.7 * parts[0].item<double>() + 0.5 * parts[1].item<double>() +
                            1.0 * parts[2].item<double>() + 1.0 * parts[3].item<double>();
    CHECK(total_generator_loss(w, parts[0], parts[1], parts[2], parts[3]).item<double>() ==
          doctest::Approx(expected).epsilon(1e-15));

    CHECK(total_discriminator_loss(w, torch::full({}, 1.3863, kF64)).item<double>() ==
          doctest::Approx(1.3863).epsilon(1e-15));
    w.disc = 0.0;
    CHECK(total_discriminator_loss(w, one).item<double>() == 0.0);

    CHECK_THROWS_AS(total_generator_loss(w, torch::full({}, INFINITY, kF64), one, one, one),
                    DimensionError);
}

TEST_CASE("zeroed weight drops exactly that term") {
    torch::manual_seed(12);
    auto parts = torch::rand({4}, kF64);
    LossWeights w;
    w.content = 0.0;
    const double with_zero =
        total_generator_loss(w, parts[0], parts[1], parts[2], parts[3]).item<double>();
    const double without_term = 0.7 * parts[0].item<double>() + 0.0 +
                                1.0 * parts[2].item<double>() + 1.0 * parts[3].item<double>();
    CHECK(with_zero == without_term);
}

TEST_CASE("weights must be finite and nonnegative") {
    LossWeights w;
    w.l2 = -0.1;
    CHECK_THROWS_AS(w.validate(), ConfigError);
}

TEST_CASE("analytic gradients match finite differences (spot check)") {
    torch::manual_seed(13);
    auto gt = torch::rand({1, 3, 8, 8}, kF64);
    auto start = torch::rand({1, 3, 8, 8}, kF64) * 0.8 + 0.1;

    SsimParams small_window;
    small_window.window_size = 5;

    auto check_loss = [&](const std::function<torch::Tensor(const torch::Tensor&)>& loss) {
        auto pred = start.clone().set_requires_grad(true);
        auto value = loss(pred);
        value.backward();
        auto fd = oracles::finite_diff_grad(
            [&](const torch::Tensor& x) { return loss(x).item<double>(); }, start);
        CHECK(oracles::max_rel_error(pred.grad(), fd) <= 1e-3);
    };

    check_loss([&](const torch::Tensor& p) { return l2_loss(gt, p); });
    check_loss([&](const torch::Tensor& p) { return ssim_loss(gt, p, small_window); });

    ContentLossConfig content_cfg{std::make_shared<TinyFeatureExtractor>(21), ContentNorm::kL1};
    check_loss([&](const torch::Tensor& p) { return content_loss(content_cfg, gt, p); });
}
