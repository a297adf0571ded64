#include "bppnet/checkpoint.hpp"

#include <cstdio>

namespace bppnet {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::pair<std::string, torch::Tensor>> named_param_entries(
    torch::nn::Module& module, const std::string& prefix) {
    std::vector<std::pair<std::string, torch::Tensor>> entries;
    for (const auto& item : module.named_parameters()) {
        entries.emplace_back(prefix + item.key(), item.value());
    }
    return entries;
}

archive::Manifest encode_train_state(const TrainState& s) {
    archive::Manifest m;
    m["train.epoch"] = std::to_string(s.epoch);
    m["train.lr_gen"] = fmt_double(s.lr_gen);
    m["train.lr_disc"] = fmt_double(s.lr_disc);
    m["train.seed"] = std::to_string(s.seed);
    m["train.colorspace"] = to_string(s.colorspace);
    m["train.w_adv"] = fmt_double(s.weights.adv);
    m["train.w_content"] = fmt_double(s.weights.content);
    m["train.w_l2"] = fmt_double(s.weights.l2);
    m["train.w_ssim"] = fmt_double(s.weights.ssim);
    m["train.w_disc"] = fmt_double(s.weights.disc);
    m["train.sched_floor_plateau"] = s.sched_floor_plateau ? "1" : "0";
    return m;
}

TrainState decode_train_state(const archive::Manifest& m) {
    TrainState s;
    s.epoch = archive::get_int(m, "train.epoch");
    s.lr_gen = archive::get_double(m, "train.lr_gen");
    s.lr_disc = archive::get_double(m, "train.lr_disc");
    s.seed = archive::get_uint(m, "train.seed");
    s.colorspace = colorspace_from_string(archive::get(m, "train.colorspace"));
    s.weights.adv = archive::get_double(m, "train.w_adv");
    s.weights.content = archive::get_double(m, "train.w_content");
    s.weights.l2 = archive::get_double(m, "train.w_l2");
    s.weights.ssim = archive::get_double(m, "train.w_ssim");
    s.weights.disc = archive::get_double(m, "train.w_disc");
    s.sched_floor_plateau = archive::get(m, "train.sched_floor_plateau") == "1";
    return s;
}

}  // namespace

archive::Manifest encode_generator_config(const GeneratorConfig& cfg) {
    archive::Manifest m;
    m["gen.num_unets"] = std::to_string(cfg.num_unets);
    m["gen.pycon_kernels"] = archive::join_ints(cfg.pycon_kernels);
    m["gen.pycon_channels_per_kernel"] = std::to_string(cfg.pycon_channels_per_kernel);
    m["gen.use_pycon"] = cfg.use_pycon ? "1" : "0";
    m["gen.final_kernel"] = std::to_string(cfg.final_kernel);
    m["gen.unet_depth"] = std::to_string(cfg.unet.depth);
    m["gen.unet_base_channels"] = std::to_string(cfg.unet.base_channels);
    m["gen.init_seed"] = std::to_string(cfg.init_seed);
    return m;
}

GeneratorConfig decode_generator_config(const archive::Manifest& m) {
    GeneratorConfig cfg;
    cfg.num_unets = archive::get_int(m, "gen.num_unets");
    cfg.pycon_kernels = archive::get_int_list(m, "gen.pycon_kernels");
    cfg.pycon_channels_per_kernel = archive::get_int(m, "gen.pycon_channels_per_kernel");
    cfg.use_pycon = archive::get(m, "gen.use_pycon") == "1";
    cfg.final_kernel = archive::get_int(m, "gen.final_kernel");
    cfg.unet.depth = archive::get_int(m, "gen.unet_depth");
    cfg.unet.base_channels = archive::get_int(m, "gen.unet_base_channels");
    cfg.init_seed = archive::get_uint(m, "gen.init_seed");
    return cfg;
}

archive::Manifest encode_discriminator_config(const DiscriminatorConfig& cfg) {
    archive::Manifest m;
    std::string layers;
    for (const auto& l : cfg.layers) {
        if (!layers.empty()) layers += ";";
        layers += std::to_string(l.in_channels) + "," + std::to_string(l.out_channels) + "," +
                  std::to_string(l.kernel) + "," + std::to_string(l.stride) + "," +
                  std::to_string(l.padding);
    }
    m["disc.layers"] = layers;
    m["disc.leaky_slope"] = fmt_double(cfg.leaky_slope);
    m["disc.init_seed"] = std::to_string(cfg.init_seed);
    return m;
}

DiscriminatorConfig decode_discriminator_config(const archive::Manifest& m) {
    DiscriminatorConfig cfg;
    cfg.layers.clear();
    std::stringstream ss(archive::get(m, "disc.layers"));
    std::string item;
    while (std::getline(ss, item, ';')) {
        DiscLayerSpec l;
        if (std::sscanf(item.c_str(), "%ld,%ld,%ld,%ld,%ld", &l.in_channels, &l.out_channels,
                        &l.kernel, &l.stride, &l.padding) != 5) {
            throw IoError("checkpoint: malformed disc.layers entry: " + item);
        }
        cfg.layers.push_back(l);
    }
    cfg.leaky_slope = archive::get_double(m, "disc.leaky_slope");
    cfg.init_seed = archive::get_uint(m, "disc.init_seed");
    return cfg;
}

void load_params_into(torch::nn::Module& module, const std::map<std::string, torch::Tensor>& tensors,
                      const std::string& prefix) {
    torch::NoGradGuard no_grad;
    size_t used = 0;
    for (const auto& item : module.named_parameters()) {
        const std::string key = prefix + item.key();
        auto it = tensors.find(key);
        if (it == tensors.end()) {
            throw IoError("checkpoint: missing tensor entry " + key);
        }
        if (!it->second.sizes().equals(item.value().sizes())) {
            throw IoError("checkpoint: shape mismatch for " + key);
        }
        item.value().copy_(it->second.to(item.value().dtype()));
        ++used;
    }
    size_t present = 0;
    for (const auto& [name, _] : tensors) {
        if (name.starts_with(prefix) && name.find('/', prefix.size()) == std::string::npos) ++present;
    }
    if (present != used) {
        throw IoError("checkpoint: archive holds " + std::to_string(present) + " entries under " +
                      prefix + " but the model has " + std::to_string(used) + " parameters");
    }
}

void append_adam_state(std::vector<std::pair<std::string, torch::Tensor>>& entries,
                       const std::string& prefix, torch::optim::Adam& opt,
                       torch::nn::Module& module) {
    const auto& state = opt.state();
    for (const auto& item : module.named_parameters()) {
        auto it = state.find(item.value().unsafeGetTensorImpl());
        if (it == state.end()) continue;  // parameter not yet stepped
        auto& adam = static_cast<torch::optim::AdamParamState&>(*it->second);
        const std::string base = prefix + item.key();
        entries.emplace_back(base + "/step", torch::tensor(adam.step(), torch::kInt64));
        entries.emplace_back(base + "/exp_avg", adam.exp_avg());
        entries.emplace_back(base + "/exp_avg_sq", adam.exp_avg_sq());
    }
}

void restore_adam_state(torch::optim::Adam& opt, torch::nn::Module& module,
                        const std::map<std::string, torch::Tensor>& tensors,
                        const std::string& prefix) {
    bool any = false;
    for (const auto& item : module.named_parameters()) {
        const std::string base = prefix + item.key();
        auto step_it = tensors.find(base + "/step");
        if (step_it == tensors.end()) continue;
        auto avg_it = tensors.find(base + "/exp_avg");
        auto sq_it = tensors.find(base + "/exp_avg_sq");
        if (avg_it == tensors.end() || sq_it == tensors.end()) {
            throw IoError("checkpoint: incomplete optimizer state for " + base);
        }
        auto state = std::make_unique<torch::optim::AdamParamState>();
        state->step(step_it->second.item<int64_t>());
        state->exp_avg(avg_it->second.clone());
        state->exp_avg_sq(sq_it->second.clone());
        opt.state()[item.value().unsafeGetTensorImpl()] = std::move(state);
        any = true;
    }
    if (!any) {
        throw IoError("checkpoint: missing optimizer state under " + prefix);
    }
}

void save_generator_checkpoint(const std::filesystem::path& dir, Generator& gen,
                               ColorSpace train_space, const archive::Manifest& extra) {
    auto manifest = encode_generator_config(gen->config());
    manifest["kind"] = "generator";
    manifest["train.colorspace"] = to_string(train_space);
    for (const auto& [k, v] : extra) manifest[k] = v;
    archive::write(dir, manifest, named_param_entries(*gen, "gen/"));
}

LoadedGenerator load_generator_checkpoint(const std::filesystem::path& dir) {
    auto loaded = archive::read(dir);
    LoadedGenerator result;
    result.manifest = loaded.manifest;
    result.gen = build_generator(decode_generator_config(loaded.manifest));
    load_params_into(*result.gen, loaded.tensors, "gen/");
    result.train_space = colorspace_from_string(archive::get(loaded.manifest, "train.colorspace"));
    return result;
}

void save_train_checkpoint(const std::filesystem::path& dir, Generator& gen, Discriminator& disc,
                           torch::optim::Adam& opt_gen, torch::optim::Adam& opt_disc,
                           const TrainState& state, const archive::Manifest& extra) {
    auto manifest = encode_generator_config(gen->config());
    auto disc_manifest = encode_discriminator_config(disc->config());
    manifest.insert(disc_manifest.begin(), disc_manifest.end());
    auto state_manifest = encode_train_state(state);
    manifest.insert(state_manifest.begin(), state_manifest.end());
    manifest["kind"] = "train";
    for (const auto& [k, v] : extra) manifest[k] = v;

    auto entries = named_param_entries(*gen, "gen/");
    auto disc_entries = named_param_entries(*disc, "disc/");
    entries.insert(entries.end(), disc_entries.begin(), disc_entries.end());
    append_adam_state(entries, "optg/", opt_gen, *gen);
    append_adam_state(entries, "optd/", opt_disc, *disc);
    entries.emplace_back("rng/torch_state", at::globalContext().defaultGenerator(at::kCPU).get_state());
    if (!state.sched_recent.empty()) {
        entries.emplace_back("sched/recent",
                             torch::tensor(state.sched_recent, torch::kFloat64));
    }
    archive::write(dir, manifest, entries);
}

LoadedTrainCheckpoint load_train_checkpoint(const std::filesystem::path& dir) {
    auto loaded = archive::read(dir);
    if (archive::get(loaded.manifest, "kind") != "train") {
        throw IoError("checkpoint: " + dir.string() + " is not a full training checkpoint");
    }
    LoadedTrainCheckpoint result;
    result.manifest = loaded.manifest;
    result.tensors = loaded.tensors;
    result.gen = build_generator(decode_generator_config(loaded.manifest));
    load_params_into(*result.gen, loaded.tensors, "gen/");
    result.disc = build_discriminator(decode_discriminator_config(loaded.manifest));
    load_params_into(*result.disc, loaded.tensors, "disc/");
    result.state = decode_train_state(loaded.manifest);
    auto rng_it = loaded.tensors.find("rng/torch_state");
    if (rng_it != loaded.tensors.end()) {
        auto generator = at::globalContext().defaultGenerator(at::kCPU);
        generator.set_state(rng_it->second);
    }
    auto sched_it = loaded.tensors.find("sched/recent");
    if (sched_it != loaded.tensors.end()) {
        auto acc = sched_it->second.accessor<double, 1>();
        for (int64_t i = 0; i < acc.size(0); ++i) result.state.sched_recent.push_back(acc[i]);
    }
    return result;
}

}  // namespace bppnet
