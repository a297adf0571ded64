#include "bppnet/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bppnet/colorspace.hpp"
#include "bppnet/evalsuite.hpp"
#include "bppnet/hazesynth.hpp"
#include "bppnet/runconfig.hpp"
#include "bppnet/trainer.hpp"

namespace bppnet {

namespace {

constexpr const char* kEnvPrefix = "BPPNET_";

std::vector<int64_t> parse_int_list(const std::string& csv, const char* what) {
    std::vector<int64_t> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            values.push_back(std::stoll(item));
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": bad integer '" + item + "'");
        }
    }
    if (values.empty()) throw ConfigError(std::string(what) + ": empty list");
    return values;
}

// "1024x4,2048x4" -> [{1024,4},{2048,4}]
std::vector<CropSpec> parse_crop_plan(const std::string& text) {
    std::vector<CropSpec> plan;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto x = item.find('x');
        if (x == std::string::npos) throw ConfigError("crop plan: expected SIZExCOUNT, got " + item);
        plan.push_back({std::stoll(item.substr(0, x)), std::stoll(item.substr(x + 1))});
    }
    if (plan.empty()) throw ConfigError("crop plan: empty");
    return plan;
}

std::string env_key(const std::string& key) {
    std::string name = kEnvPrefix;
    for (char c : key) name += c == '.' ? '_' : static_cast<char>(::toupper(c));
    return name;
}

// Environment mirrors of flags, fixed BPPNET_ prefix; flags still win.
void apply_env(RunConfig& rc, const std::vector<std::string>& keys) {
    for (const auto& key : keys) {
        if (const char* v = std::getenv(env_key(key).c_str())) {
            rc.set_from_flag(key, v);
        }
    }
}

void write_run_manifest(const std::filesystem::path& out_dir,
                        const std::string& command,
                        const std::vector<std::string>& outputs) {
    std::ofstream mf(out_dir / "run_manifest.txt");
    mf << "command = " << command << "\n";
    for (const auto& o : outputs) mf << "output = " << o << "\n";
}

// Budget presets fill the defaults; config file and flags still win.
void declare_arch_keys(RunConfig& rc, const std::string& budget) {
    const bool toy = budget != "full";
    rc.declare("budget", budget);
    rc.declare("unets", "4");
    rc.declare("use_pycon", "1");
    rc.declare("pycon_kernels", toy ? "3,5,7" : "3,5,7,11,17,25,35,45");
    rc.declare("pycon_channels_per_kernel", toy ? "8" : "16");
    rc.declare("unet_depth", toy ? "2" : "4");
    rc.declare("unet_base_channels", toy ? "8" : "64");
    rc.declare("final_kernel", "3");
}

void declare_train_keys(RunConfig& rc, const std::string& budget) {
    const bool toy = budget != "full";
    declare_arch_keys(rc, budget);
    rc.declare("dataset", "");
    rc.declare("dataset_name", "synthetic");
    rc.declare("colorspace", "auto");
    rc.declare("crop_plan", "auto");
    rc.declare("resize", toy ? "64" : "512");
    rc.declare("epochs", toy ? "400" : "300");
    rc.declare("batch_size", "1");
    rc.declare("lr_gen", "0.001");
    rc.declare("lr_disc", "0.001");
    rc.declare("lr_decay_factor", "0.1");
    rc.declare("plateau_window", "10");
    rc.declare("plateau_threshold", "0.01");
    rc.declare("lr_floor", "0.00001");
    rc.declare("w_adv", "0.7");
    rc.declare("w_con", "0.5");
    rc.declare("w_l2", "1.0");
    rc.declare("w_ssim", "1.0");
    rc.declare("w_disc", "1.0");
    rc.declare("drop_loss", "none");
    rc.declare("content_norm", "l1");
    rc.declare("vgg_weights", "");
    rc.declare("checkpoint_every", "50");
    rc.declare("log_every", toy ? "25" : "5");
}

GeneratorConfig generator_config_from(const RunConfig& rc, uint64_t seed) {
    GeneratorConfig cfg;
    cfg.num_unets = rc.get_int("unets");
    cfg.use_pycon = rc.get_bool("use_pycon");
    cfg.pycon_kernels = parse_int_list(rc.get("pycon_kernels"), "pycon_kernels");
    cfg.pycon_channels_per_kernel = rc.get_int("pycon_channels_per_kernel");
    cfg.final_kernel = rc.get_int("final_kernel");
    cfg.unet.depth = rc.get_int("unet_depth");
    cfg.unet.base_channels = rc.get_int("unet_base_channels");
    cfg.init_seed = derive_seed(seed, "gen_init");
    cfg.validate();
    return cfg;
}

TrainConfig train_config_from(const RunConfig& rc, uint64_t seed,
                              const std::filesystem::path& out_dir) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.gen = generator_config_from(rc, seed);
    cfg.disc = DiscriminatorConfig::defaults();
    cfg.disc.init_seed = derive_seed(seed, "disc_init");

    const auto name = dataset_name_from_string(rc.get("dataset_name"));
    const auto root = rc.get("dataset");
    if (root.empty()) throw ConfigError("train: --dataset is required");
    cfg.dataset = DatasetSpec::for_dataset(name, root);
    if (rc.get("colorspace") != "auto") {
        cfg.dataset.colorspace = colorspace_from_string(rc.get("colorspace"));
    }
    if (rc.get("crop_plan") != "auto") {
        cfg.dataset.crop_plan = parse_crop_plan(rc.get("crop_plan"));
    } else if (rc.get("budget") != "full") {
        cfg.dataset.crop_plan = {{rc.get_int("resize"), 1}};
    }

    cfg.lr_gen_init = rc.get_double("lr_gen");
    cfg.lr_disc = rc.get_double("lr_disc");
    cfg.lr_decay_factor = rc.get_double("lr_decay_factor");
    cfg.plateau_window = rc.get_int("plateau_window");
    cfg.plateau_threshold = rc.get_double("plateau_threshold");
    cfg.lr_floor = rc.get_double("lr_floor");
    cfg.max_epochs = rc.get_int("epochs");
    cfg.batch_size = rc.get_int("batch_size");
    cfg.resize_target = rc.get_int("resize");
    cfg.checkpoint_every = rc.get_int("checkpoint_every");
    cfg.log_every = rc.get_int("log_every");
    cfg.weights.adv = rc.get_double("w_adv");
    cfg.weights.content = rc.get_double("w_con");
    cfg.weights.l2 = rc.get_double("w_l2");
    cfg.weights.ssim = rc.get_double("w_ssim");
    cfg.weights.disc = rc.get_double("w_disc");
    const auto drop = rc.get("drop_loss");
    if (drop == "adv") cfg.weights.adv = 0;
    else if (drop == "con") cfg.weights.content = 0;
    else if (drop == "l2") cfg.weights.l2 = 0;
    else if (drop == "ssim") cfg.weights.ssim = 0;
    else if (drop != "none") throw ConfigError("train: unknown --drop-loss " + drop);
    cfg.content_norm = rc.get("content_norm") == "l2sq" ? ContentNorm::kL2Squared : ContentNorm::kL1;
    if (!rc.get("vgg_weights").empty()) {
        cfg.extractor = Vgg19FeatureExtractor::from_archive(rc.get("vgg_weights"));
    }
    cfg.out_dir = out_dir;
    cfg.validate();
    return cfg;
}

// Min-max normalize each channel and tile into a grid image for inspection.
torch::Tensor tile_channels(const torch::Tensor& act) {
    const int64_t c = act.size(1), h = act.size(2), w = act.size(3);
    const auto cols = static_cast<int64_t>(std::ceil(std::sqrt(static_cast<double>(c))));
    const auto rows = (c + cols - 1) / cols;
    auto grid = torch::zeros({1, 1, rows * h, cols * w});
    for (int64_t i = 0; i < c; ++i) {
        auto ch = act.select(1, i).select(0, 0);
        const auto lo = ch.min();
        const auto hi = ch.max();
        auto norm = (hi - lo).item<double>() > 0 ? (ch - lo) / (hi - lo) : torch::zeros_like(ch);
        grid[0][0].slice(0, (i / cols) * h, (i / cols + 1) * h)
            .slice(1, (i % cols) * w, (i % cols + 1) * w) = norm;
    }
    return grid.repeat({1, 3, 1, 1});
}

int cmd_synth(const RunConfig& rc, const std::filesystem::path& out_dir, uint64_t seed) {
    generate_pairs(rc.get_int("n"), rc.get_int("size"), haze_mode_from_string(rc.get("mode")),
                   seed, out_dir);
    std::cout << "wrote " << rc.get("n") << " pairs to " << out_dir.string() << "\n";
    return 0;
}

int cmd_train(const RunConfig& rc, const std::filesystem::path& out_dir, uint64_t seed) {
    auto cfg = train_config_from(rc, seed, out_dir);
    auto result = train(cfg);
    std::cout << "checkpoint: " << result.final_checkpoint.string() << "\n"
              << "history:    " << (out_dir / "history.csv").string() << "\n";
    write_run_manifest(out_dir, "train",
                       {result.final_checkpoint.string(), (out_dir / "history.csv").string()});
    return 0;
}

int cmd_resume(const RunConfig& rc, const std::filesystem::path& out_dir, uint64_t seed) {
    const auto ckpt = rc.get("checkpoint");
    if (ckpt.empty()) throw ConfigError("resume: --checkpoint is required");
    auto cfg = train_config_from(rc, seed, out_dir);
    auto result = resume(ckpt, cfg);
    std::cout << "checkpoint: " << result.final_checkpoint.string() << "\n";
    write_run_manifest(out_dir, "resume", {result.final_checkpoint.string()});
    return 0;
}

int cmd_infer(const RunConfig& rc, const std::filesystem::path& out_dir) {
    const auto ckpt = rc.get("checkpoint");
    const auto input = rc.get("input");
    auto output = rc.get("output");
    if (ckpt.empty() || input.empty()) throw ConfigError("infer: --checkpoint and --input are required");
    if (output.empty()) output = (out_dir / "dehazed.png").string();

    auto loaded = load_generator_checkpoint(ckpt);
    loaded.gen->eval();
    torch::NoGradGuard no_grad;
    auto img = load_image(input);
    auto resized = bicubic_resize(img, rc.get_int("resize"));
    auto model_in = convert_colorspace(resized, loaded.train_space);
    auto pred = loaded.gen->forward(model_in.data).clamp(0.0, 1.0);
    auto rgb = convert_colorspace({pred, loaded.train_space}, ColorSpace::kRGB);
    save_image(rgb, output);
    std::cout << "wrote " << output << "\n";
    write_run_manifest(out_dir, "infer", {output});
    return 0;
}

int cmd_eval(const RunConfig& rc, const std::filesystem::path& out_dir) {
    const auto ckpt = rc.get("checkpoint");
    const auto root = rc.get("dataset");
    if (ckpt.empty() || root.empty()) throw ConfigError("eval: --checkpoint and --dataset are required");
    auto spec = DatasetSpec::for_dataset(dataset_name_from_string(rc.get("dataset_name")), root);
    auto dataset = load_dataset(spec);
    auto loaded = load_generator_checkpoint(ckpt);
    EvalOptions opts;
    opts.resize_target = rc.get_int("resize");
    if (rc.get_bool("dump")) opts.dump_dir = out_dir / "dumps";
    auto report = evaluate(loaded.gen, loaded.train_space, dataset, opts);
    report.write_csv(out_dir / "eval.csv");
    std::cout << report.render_table();
    write_run_manifest(out_dir, "eval", {(out_dir / "eval.csv").string()});
    return 0;
}

int cmd_ablate(const RunConfig& rc, const std::filesystem::path& out_dir, uint64_t seed) {
    const auto val_root = rc.get("val_dataset");
    if (val_root.empty()) throw ConfigError("ablate: --val-dataset is required");
    auto base_cfg = train_config_from(rc, seed, out_dir);

    AblationGrid grid;
    if (rc.get("cells") == "standard") {
        grid = AblationGrid::standard({1, 2, 3, 5}, true, {"adv", "con", "l2", "ssim"}, true);
    } else {
        for (const auto& label : [&] {
                 std::vector<std::string> out;
                 std::stringstream ss(rc.get("cells"));
                 std::string item;
                 while (std::getline(ss, item, ',')) out.push_back(item);
                 return out;
             }()) {
            if (label == "reference") grid.cells.push_back({"reference", 4, true, "none", ColorSpace::kYCbCr});
            else if (label.ends_with("_unet")) grid.cells.push_back({label, std::stoll(label), true, "none", ColorSpace::kYCbCr});
            else if (label == "no_pycon") grid.cells.push_back({label, 4, false, "none", ColorSpace::kYCbCr});
            else if (label.starts_with("drop_")) grid.cells.push_back({label, 4, true, label.substr(5), ColorSpace::kYCbCr});
            else if (label == "rgb_space") grid.cells.push_back({label, 4, true, "none", ColorSpace::kRGB});
            else throw ConfigError("ablate: unknown cell label " + label);
        }
        bool has_reference = false;
        for (const auto& c : grid.cells) has_reference |= c.label == "reference";
        if (!has_reference) {
            grid.cells.insert(grid.cells.begin(), {"reference", 4, true, "none", ColorSpace::kYCbCr});
        }
    }

    auto val_spec = DatasetSpec::for_dataset(dataset_name_from_string(rc.get("dataset_name")), val_root);
    auto result = run_ablation(grid, base_cfg, val_spec);
    result.write_csv(out_dir / "ablation.csv");
    std::cout << result.render_table();
    write_run_manifest(out_dir, "ablate", {(out_dir / "ablation.csv").string()});
    return 0;
}

int cmd_inspect(const RunConfig& rc, const std::filesystem::path& out_dir) {
    const auto ckpt = rc.get("checkpoint");
    const auto input = rc.get("input");
    if (ckpt.empty() || input.empty()) throw ConfigError("inspect: --checkpoint and --input are required");
    auto loaded = load_generator_checkpoint(ckpt);
    loaded.gen->eval();
    auto img = load_image(input);
    auto resized = bicubic_resize(img, rc.get_int("resize"));
    auto model_in = convert_colorspace(resized, loaded.train_space);
    auto dump = loaded.gen->dump_intermediates(model_in.data);

    std::vector<std::string> outputs;
    std::ofstream stds(out_dir / "stds.csv");
    stds << "entry,channel,std\n";
    std::ofstream hist(out_dir / "histograms.csv");
    hist << "entry,channel,bin,count\n";
    for (const auto& [name, act] : dump.activations) {
        const auto png = out_dir / (name + ".png");
        save_image({tile_channels(act), ColorSpace::kRGB}, png);
        outputs.push_back(png.string());
        const auto& st = dump.stats.at(name);
        for (size_t c = 0; c < st.channel_std.size(); ++c) {
            stds << name << "," << c << "," << st.channel_std[c] << "\n";
            for (size_t b = 0; b < st.channel_histograms[c].size(); ++b) {
                hist << name << "," << c << "," << b << "," << st.channel_histograms[c][b] << "\n";
            }
        }
    }
    std::cout << "wrote " << outputs.size() << " activation dumps to " << out_dir.string() << "\n";
    write_run_manifest(out_dir, "inspect", outputs);
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"bppnet: back-projected pyramid network for single-image dehazing"};
    app.require_subcommand(1);

    std::map<std::string, std::map<std::string, std::string>> flags;
    std::map<std::string, std::string> common;  // per-subcommand common flags
    struct Sub {
        CLI::App* cmd;
        std::string config_file;
        std::string out_dir = "out";
        std::string seed = "0";
        bool seed_set = false, out_set = false;
    };
    std::map<std::string, Sub> subs;

    auto add_sub = [&](const std::string& name, const std::string& desc) -> CLI::App* {
        auto* cmd = app.add_subcommand(name, desc);
        auto& sub = subs[name];
        sub.cmd = cmd;
        cmd->add_option("--config", sub.config_file, "key = value config file");
        cmd->add_option("--out-dir", sub.out_dir, "output directory")
            ->each([&subs, name](const std::string&) { subs[name].out_set = true; });
        cmd->add_option("--seed", sub.seed, "run seed")
            ->each([&subs, name](const std::string&) { subs[name].seed_set = true; });
        return cmd;
    };
    auto capture = [&flags](CLI::App* cmd, const std::string& sub, const std::string& flag,
                            const std::string& key, const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&flags, sub, key](const std::string& v) { flags[sub][key] = v; }, help);
    };

    // synth
    auto* synth = add_sub("synth", "generate synthetic hazy/GT pairs (Koschmieder model)");
    capture(synth, "synth", "--n", "n", "number of pairs");
    capture(synth, "synth", "--size", "size", "square image size");
    capture(synth, "synth", "--mode", "mode", "homogeneous|dense|inhomogeneous");

    // train / resume share the training keys
    auto* train_cmd = add_sub("train", "train generator+discriminator");
    auto* resume_cmd = add_sub("resume", "continue training from a full checkpoint");
    for (auto [name, cmd] : {std::pair{"train", train_cmd}, std::pair{"resume", resume_cmd}}) {
        capture(cmd, name, "--dataset", "dataset", "paired dataset directory");
        capture(cmd, name, "--dataset-name", "dataset_name",
                "ihaze|ohaze|densehaze|ntire2020|synthetic");
        capture(cmd, name, "--colorspace", "colorspace", "rgb|ycbcr (training space)");
        capture(cmd, name, "--unets", "unets", "number of UNet units (M)");
        cmd->add_flag_callback("--no-pycon", [&flags, n = std::string(name)] { flags[n]["use_pycon"] = "0"; },
                               "drop the pyramid convolution block");
        capture(cmd, name, "--pycon-kernels", "pycon_kernels", "odd kernel ladder, e.g. 3,5,7");
        capture(cmd, name, "--pycon-channels", "pycon_channels_per_kernel", "channels per kernel");
        capture(cmd, name, "--unet-depth", "unet_depth", "UNet encoder depth");
        capture(cmd, name, "--unet-base", "unet_base_channels", "UNet base channels");
        capture(cmd, name, "--drop-loss", "drop_loss", "adv|con|l2|ssim");
        capture(cmd, name, "--crop-plan", "crop_plan", "e.g. 1024x4,2048x4");
        capture(cmd, name, "--resize", "resize", "patch size after bicubic resize");
        capture(cmd, name, "--epochs", "epochs", "total epochs");
        capture(cmd, name, "--batch-size", "batch_size", "patches per step");
        capture(cmd, name, "--budget", "budget", "toy|full presets");
        capture(cmd, name, "--vgg-weights", "vgg_weights", "VGG-19 named-tensor archive");
        capture(cmd, name, "--checkpoint-every", "checkpoint_every", "checkpoint cadence (epochs)");
        capture(cmd, name, "--log-every", "log_every", "console cadence (epochs)");
    }
    capture(resume_cmd, "resume", "--checkpoint", "checkpoint", "full training checkpoint");

    // infer
    auto* infer = add_sub("infer", "dehaze one image");
    capture(infer, "infer", "--checkpoint", "checkpoint", "generator checkpoint");
    capture(infer, "infer", "--input", "input", "hazy PNG/JPEG");
    capture(infer, "infer", "--output", "output", "output PNG path");
    capture(infer, "infer", "--resize", "resize", "inference size");

    // eval
    auto* eval_cmd = add_sub("eval", "SSIM/PSNR report over a paired dataset");
    capture(eval_cmd, "eval", "--checkpoint", "checkpoint", "generator checkpoint");
    capture(eval_cmd, "eval", "--dataset", "dataset", "paired dataset directory");
    capture(eval_cmd, "eval", "--dataset-name", "dataset_name", "dataset layout name");
    capture(eval_cmd, "eval", "--resize", "resize", "evaluation size");
    eval_cmd->add_flag_callback("--dump", [&flags] { flags["eval"]["dump"] = "1"; },
                                "save dehazed / difference images");

    // ablate
    auto* ablate = add_sub("ablate", "train+eval an ablation grid");
    for (const char* f : {"--dataset", "--dataset-name", "--budget", "--epochs", "--resize",
                          "--unet-depth", "--unet-base", "--pycon-kernels", "--pycon-channels",
                          "--crop-plan", "--batch-size"}) {
        std::string key = std::string(f).substr(2);
        for (auto& c : key) if (c == '-') c = '_';
        if (key == "unet_base") key = "unet_base_channels";
        if (key == "pycon_channels") key = "pycon_channels_per_kernel";
        capture(ablate, "ablate", f, key, "");
    }
    capture(ablate, "ablate", "--val-dataset", "val_dataset", "validation dataset directory");
    capture(ablate, "ablate", "--cells", "cells", "standard or labels, e.g. reference,1_unet");

    // inspect
    auto* inspect = add_sub("inspect", "dump UNet/PyCon activations, stds, histograms");
    capture(inspect, "inspect", "--checkpoint", "checkpoint", "generator checkpoint");
    capture(inspect, "inspect", "--input", "input", "hazy PNG/JPEG");
    capture(inspect, "inspect", "--resize", "resize", "inference size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        auto& sub = subs.at(name);
        auto& flag_values = flags[name];

        // pass 1: resolve the budget so presets can seed the defaults
        std::string budget = "toy";
        if (auto it = flag_values.find("budget"); it != flag_values.end()) budget = it->second;

        RunConfig rc;
        rc.declare("seed", "0");
        rc.declare("out_dir", "out");
        if (name == "synth") {
            rc.declare("n", "4");
            rc.declare("size", "64");
            rc.declare("mode", "homogeneous");
        } else if (name == "train" || name == "resume" || name == "ablate") {
            declare_train_keys(rc, budget);
            if (name == "resume") rc.declare("checkpoint", "");
            if (name == "ablate") {
                rc.declare("val_dataset", "");
                rc.declare("cells", "standard");
            }
        } else if (name == "infer" || name == "inspect") {
            rc.declare("checkpoint", "");
            rc.declare("input", "");
            rc.declare("resize", "512");
            if (name == "infer") rc.declare("output", "");
        } else if (name == "eval") {
            rc.declare("checkpoint", "");
            rc.declare("dataset", "");
            rc.declare("dataset_name", "synthetic");
            rc.declare("resize", "512");
            rc.declare("dump", "0");
        }

        if (!sub.config_file.empty()) rc.load_file(sub.config_file);
        apply_env(rc, rc.keys());
        for (const auto& [key, value] : flag_values) rc.set_from_flag(key, value);
        if (sub.seed_set) rc.set_from_flag("seed", sub.seed);
        if (sub.out_set) rc.set_from_flag("out_dir", sub.out_dir);

        const std::filesystem::path out_dir = rc.get("out_dir");
        std::filesystem::create_directories(out_dir);
        rc.write_resolved(out_dir / "config_resolved.txt");
        const uint64_t seed = static_cast<uint64_t>(rc.get_int("seed"));

        if (name == "synth") return cmd_synth(rc, out_dir, seed);
        if (name == "train") return cmd_train(rc, out_dir, seed);
        if (name == "resume") return cmd_resume(rc, out_dir, seed);
        if (name == "infer") return cmd_infer(rc, out_dir);
        if (name == "eval") return cmd_eval(rc, out_dir);
        if (name == "ablate") return cmd_ablate(rc, out_dir, seed);
        if (name == "inspect") return cmd_inspect(rc, out_dir);
        throw ConfigError("unknown subcommand " + name);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace bppnet
