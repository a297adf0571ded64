#include <doctest.h>
#include <torch/torch.h>

#include "bppnet/conv_utils.hpp"
#include "bppnet/generator.hpp"

using namespace bppnet;

namespace {

// Small-but-real configuration for fast unit runs.
GeneratorConfig toy_config(uint64_t seed = 7) {
    GeneratorConfig cfg;
    cfg.unet.depth = 2;
    cfg.unet.base_channels = 4;
    cfg.pycon_kernels = {3, 5};
    cfg.pycon_channels_per_kernel = 4;
    cfg.init_seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("default config channel arithmetic") {
    GeneratorConfig cfg;
    CHECK(cfg.num_unets == 4);
    CHECK(cfg.concat_channels() == 12);
    CHECK(cfg.pycon_kernels.size() == 8);
    CHECK(cfg.pycon_channels() == 128);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config rejects even kernels, M < 1, indivisible budgets") {
    GeneratorConfig cfg = toy_config();
    cfg.pycon_kernels = {3, 4};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = toy_config();
    cfg.num_unets = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = toy_config();
    cfg.final_kernel = 2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = toy_config();  // 2 kernels cannot split 129 channels
    CHECK_THROWS_AS(cfg.set_total_pycon_channels(129), ConfigError);
    CHECK_NOTHROW(cfg.set_total_pycon_channels(32));
    CHECK(cfg.pycon_channels_per_kernel == 16);
}

TEST_CASE("minimal configuration builds: M=1, single kernel") {
    auto cfg = toy_config();
    cfg.num_unets = 1;
    cfg.pycon_kernels = {3};
    auto gen = build_generator(cfg);
    auto out = gen->forward(torch::rand({1, 3, 16, 16}));
    CHECK(out.sizes() == torch::IntArrayRef({1, 3, 16, 16}));
}

TEST_CASE("iub chains units and concatenates in order") {
    auto gen = build_generator(toy_config());
    auto x = torch::rand({1, 3, 16, 16});
    auto iub = gen->iub_forward(x);
    CHECK(iub.concat.size(1) == 12);
    CHECK(iub.intermediates.size() == 4);

    // oracle: compose the unit forwards by hand
    std::vector<torch::Tensor> chain;
    torch::Tensor h = x;
    for (auto unit : gen->units()) {
        h = unit->forward(h);
        chain.push_back(h);
    }
    for (size_t i = 0; i < chain.size(); ++i) {
        CHECK(torch::equal(chain[i], iub.intermediates[i]));
    }
    CHECK(torch::equal(torch::cat(chain, 1), iub.concat));
}

TEST_CASE("single-unit concat is the unit output itself") {
    auto cfg = toy_config();
    cfg.num_unets = 1;
    auto gen = build_generator(cfg);
    auto iub = gen->iub_forward(torch::rand({1, 3, 16, 16}));
    CHECK(torch::equal(iub.concat, iub.intermediates[0]));
}

TEST_CASE("pycon output channels follow the kernel ladder") {
    auto gen = build_generator(toy_config());
    auto feat = torch::rand({1, 12, 16, 16});
    auto out = gen->pycon_forward(feat);
    CHECK(out.sizes() == torch::IntArrayRef({1, 8, 16, 16}));

    auto single = toy_config();
    single.pycon_kernels = {3};
    single.pycon_channels_per_kernel = 16;
    auto gen1 = build_generator(single);
    CHECK(gen1->pycon_forward(feat).sizes() == torch::IntArrayRef({1, 16, 16, 16}));

    CHECK_THROWS_AS(gen->pycon_forward(torch::rand({1, 5, 16, 16})), DimensionError);
}

TEST_CASE("zero feature map with zero biases gives zero branches") {
    auto gen = build_generator(toy_config());  // biases zero-initialized
    auto out = gen->pycon_forward(torch::zeros({1, 12, 16, 16}));
    CHECK(out.abs().max().item<double>() == 0.0);
}

TEST_CASE("no-pycon model maps the concat straight to 3 channels") {
    auto cfg = toy_config();
    cfg.use_pycon = false;
    auto gen = build_generator(cfg);
    auto out = gen->forward(torch::rand({2, 3, 16, 16}));
    CHECK(out.sizes() == torch::IntArrayRef({2, 3, 16, 16}));
    CHECK_THROWS_AS(gen->pycon_forward(torch::rand({1, 12, 16, 16})), ConfigError);
}

TEST_CASE("forward preserves shape and batch") {
    auto gen = build_generator(toy_config());
    CHECK(gen->forward(torch::rand({1, 3, 32, 32})).sizes() == torch::IntArrayRef({1, 3, 32, 32}));
    CHECK(gen->forward(torch::rand({2, 3, 16, 16})).sizes() == torch::IntArrayRef({2, 3, 16, 16}));
    // depth 2 wants H, W divisible by 4
    CHECK_THROWS_AS(gen->forward(torch::rand({1, 3, 18, 18})), DimensionError);
    CHECK_THROWS_AS(gen->forward(torch::rand({1, 4, 16, 16})), DimensionError);
}

TEST_CASE("fixed seed gives byte-identical builds and outputs") {
    torch::manual_seed(123);
    auto x = torch::rand({1, 3, 16, 16});
    auto a = build_generator(toy_config(42));
    auto b = build_generator(toy_config(42));
    CHECK(torch::equal(a->forward(x), b->forward(x)));
    auto c = build_generator(toy_config(43));
    CHECK_FALSE(torch::equal(a->forward(x), c->forward(x)));
}

TEST_CASE("forward equals the composed stages bit for bit") {
    auto gen = build_generator(toy_config());
    auto x = torch::rand({1, 3, 16, 16});
    auto whole = gen->forward(x);
    auto staged = gen->reconstruct(gen->pycon_forward(gen->iub_forward(x).concat));
    CHECK(torch::equal(whole, staged));
}

TEST_CASE("identity-initialized branch preserves an impulse") {
    auto cfg = toy_config();
    cfg.pycon_kernels = {5};
    cfg.pycon_channels_per_kernel = 1;
    auto gen = build_generator(cfg);
    {
        torch::NoGradGuard no_grad;
        auto params = gen->named_parameters();
        auto w = params["pycon_k5.weight"];  // (1, 12, 5, 5)
        w.zero_();
        w[0][0][2][2] = 1.0;  // center tap on channel 0
        params["pycon_k5.bias"].zero_();
    }
    auto feat = torch::zeros({1, 12, 16, 16});
    feat[0][0][5][9] = 1.0;
    auto out = gen->pycon_forward(feat);
    CHECK(out[0][0][5][9].item<float>() == doctest::Approx(1.0));
    CHECK(out.abs().sum().item<double>() == doctest::Approx(1.0));
}

TEST_CASE("fft and direct conv routes agree") {
    torch::manual_seed(5);
    auto x = torch::randn({1, 12, 48, 48});
    auto w = torch::randn({16, 12, 25, 25});
    auto b = torch::randn({16});
    auto direct = conv2d_same(x, w, b, false);
    auto fft = conv2d_same(x, w, b, true);
    CHECK(direct.sizes() == fft.sizes());
    const double scale = direct.abs().max().item<double>();
    CHECK((direct - fft).abs().max().item<double>() / scale < 1e-5);

    auto xd = x.to(torch::kFloat64);
    auto wd = w.to(torch::kFloat64);
    auto bd = b.to(torch::kFloat64);
    CHECK((conv2d_same(xd, wd, bd, false) - conv2d_same(xd, wd, bd, true))
              .abs()
              .max()
              .item<double>() / scale < 1e-12);
}

TEST_CASE("param_count is stable, monotone in M, and pinned for defaults") {
    auto a = build_generator(toy_config());
    auto b = build_generator(toy_config());
    CHECK(param_count(*a) == param_count(*b));

    auto cfg1 = toy_config();
    cfg1.num_unets = 1;
    CHECK(param_count(*build_generator(cfg1)) < param_count(*a));

    // regression constant for the default architecture (see README)
    GeneratorConfig defaults;
    CHECK(param_count(*build_generator(defaults)) == 124975887);
}

TEST_CASE("every parameter sees gradient somewhere") {
    auto gen = build_generator(toy_config());
    std::map<std::string, double> grad_mass;
    for (int draw = 0; draw < 3; ++draw) {
        torch::manual_seed(100 + draw);
        gen->zero_grad();
        auto out = gen->forward(torch::rand({1, 3, 16, 16}));
        (out * torch::rand_like(out)).sum().backward();
        for (const auto& item : gen->named_parameters()) {
            if (item.value().grad().defined()) {
                grad_mass[item.key()] += item.value().grad().abs().sum().item<double>();
            }
        }
    }
    for (const auto& item : gen->named_parameters()) {
        INFO("parameter ", item.key());
        CHECK(grad_mass[item.key()] > 0.0);
    }
}

TEST_CASE("dump_intermediates lists every unit and branch with stats") {
    auto gen = build_generator(toy_config());
    auto dump = gen->dump_intermediates(torch::rand({1, 3, 16, 16}));
    CHECK(dump.activations.size() == 4 + 2);
    CHECK(dump.activations.count("unet_1") == 1);
    CHECK(dump.activations.count("unet_4") == 1);
    CHECK(dump.activations.count("pycon_k3") == 1);
    CHECK(dump.activations.count("pycon_k5") == 1);
    for (const auto& [name, stats] : dump.stats) {
        INFO("entry ", name);
        CHECK(stats.channel_std.size() == static_cast<size_t>(dump.activations.at(name).size(1)));
    }
}

TEST_CASE("stats of a constant image have zero std") {
    auto stats = activation_stats(torch::full({1, 3, 8, 8}, 0.37));
    for (double s : stats.channel_std) CHECK(s == doctest::Approx(0.0));
}
