#include "bppnet/evalsuite.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "bppnet/colorspace.hpp"

namespace bppnet {

double psnr(const torch::Tensor& gt, const torch::Tensor& pred) {
    if (!gt.sizes().equals(pred.sizes())) {
        throw DimensionError("psnr: shape mismatch");
    }
    const double mse = (gt.to(torch::kFloat64) - pred.to(torch::kFloat64)).square().mean().item<double>();
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

std::string fmt_metric(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void dump_eval_artifacts(const std::filesystem::path& dir, const std::string& id,
                         const torch::Tensor& pred_rgb, const torch::Tensor& gt_rgb) {
    std::filesystem::create_directories(dir);
    save_image({pred_rgb, ColorSpace::kRGB}, dir / (id + "_dehazed.png"));
    auto diff = (pred_rgb - gt_rgb).abs().clamp(0.0, 1.0);
    save_image({diff, ColorSpace::kRGB}, dir / (id + "_absdiff.png"));
}

}  // namespace

void EvalReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("eval report: cannot write " + path.string());
    out << "id,ssim,psnr_db,inference_ms\n";
    for (const auto& r : images) {
        out << r.id << "," << fmt_metric(r.ssim) << "," << fmt_metric(r.psnr_db) << ","
            << fmt_metric(r.inference_ms) << "\n";
    }
    out << "mean," << fmt_metric(mean_ssim) << "," << fmt_metric(mean_psnr) << ","
        << fmt_metric(mean_ms) << "\n";
}

std::string EvalReport::render_table() const {
    std::ostringstream out;
    out << "image            SSIM      PSNR      time(ms)\n";
    for (const auto& r : images) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-16s %-9s %-9s %s\n", r.id.c_str(),
                      fmt_metric(r.ssim).c_str(), fmt_metric(r.psnr_db).c_str(),
                      fmt_metric(r.inference_ms).c_str());
        out << line;
    }
    char line[128];
    std::snprintf(line, sizeof(line), "%-16s %-9s %-9s %s\n", "mean", fmt_metric(mean_ssim).c_str(),
                  fmt_metric(mean_psnr).c_str(), fmt_metric(mean_ms).c_str());
    out << line;
    return out.str();
}

namespace {

EvalReport evaluate_impl(const std::function<torch::Tensor(const torch::Tensor&)>& rgb_forward,
                         const PairedDataset& dataset, const EvalOptions& opts,
                         const std::string& fingerprint) {
    EvalReport report;
    report.config_fingerprint = fingerprint;
    double sum_ssim = 0, sum_psnr = 0, sum_ms = 0;
    for (size_t i = 0; i < dataset.size(); ++i) {
        auto pair = dataset.load(i);
        auto hazy = bicubic_resize(pair.hazy, opts.resize_target);
        auto gt = bicubic_resize(pair.clear, opts.resize_target);

        const auto t0 = std::chrono::steady_clock::now();
        auto pred_rgb = rgb_forward(hazy.data);
        const auto t1 = std::chrono::steady_clock::now();

        if (opts.metric_space_probe) opts.metric_space_probe(ColorSpace::kRGB);
        PerImageResult r;
        r.id = pair.id;
        r.ssim = ssim(gt.data, pred_rgb, opts.ssim).item<double>();
        r.psnr_db = psnr(gt.data, pred_rgb);
        r.inference_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        if (opts.dump_dir) dump_eval_artifacts(*opts.dump_dir, r.id, pred_rgb, gt.data);
        sum_ssim += r.ssim;
        sum_psnr += r.psnr_db;
        sum_ms += r.inference_ms;
        report.images.push_back(std::move(r));
    }
    if (!report.images.empty()) {
        const auto n = static_cast<double>(report.images.size());
        report.mean_ssim = sum_ssim / n;
        report.mean_psnr = sum_psnr / n;
        report.mean_ms = sum_ms / n;
    }
    return report;
}

}  // namespace

EvalReport evaluate(Generator& gen, ColorSpace train_space, const PairedDataset& dataset,
                    const EvalOptions& opts) {
    gen->eval();
    torch::NoGradGuard no_grad;
    auto forward = [&](const torch::Tensor& hazy_rgb) {
        ImageTensor input{hazy_rgb, ColorSpace::kRGB};
        auto model_in = convert_colorspace(input, train_space);
        auto pred = gen->forward(model_in.data).clamp(0.0, 1.0);
        return convert_colorspace({pred, train_space}, ColorSpace::kRGB).data;
    };
    auto fingerprint = "gen:M=" + std::to_string(gen->config().num_unets) +
                       ",pycon=" + (gen->config().use_pycon ? "on" : "off") +
                       ",space=" + to_string(train_space) +
                       ",resize=" + std::to_string(opts.resize_target);
    return evaluate_impl(forward, dataset, opts, fingerprint);
}

EvalReport evaluate_op(const ImageOp& op, const PairedDataset& dataset, const EvalOptions& opts) {
    return evaluate_impl(op, dataset, opts, "op");
}

AblationGrid AblationGrid::standard(const std::vector<int64_t>& unet_counts, bool include_no_pycon,
                                    const std::vector<std::string>& dropped_losses,
                                    bool include_rgb) {
    AblationGrid grid;
    grid.cells.push_back({"reference", 4, true, "none", ColorSpace::kYCbCr});
    for (int64_t m : unet_counts) {
        if (m == 4) continue;
        grid.cells.push_back({std::to_string(m) + "_unet", m, true, "none", ColorSpace::kYCbCr});
    }
    if (include_no_pycon) {
        grid.cells.push_back({"no_pycon", 4, false, "none", ColorSpace::kYCbCr});
    }
    for (const auto& drop : dropped_losses) {
        if (drop == "none") continue;
        grid.cells.push_back({"drop_" + drop, 4, true, drop, ColorSpace::kYCbCr});
    }
    if (include_rgb) {
        grid.cells.push_back({"rgb_space", 4, true, "none", ColorSpace::kRGB});
    }
    return grid;
}

std::string AblationResult::render_table() const {
    std::ostringstream out;
    out << "cell             SSIM      PSNR\n";
    for (const auto& c : cells) {
        char line[128];
        if (c.report) {
            std::snprintf(line, sizeof(line), "%-16s %-9s %s\n", c.cell.label.c_str(),
                          fmt_metric(c.report->mean_ssim).c_str(),
                          fmt_metric(c.report->mean_psnr).c_str());
        } else {
            std::snprintf(line, sizeof(line), "%-16s FAILED: %s\n", c.cell.label.c_str(),
                          c.error.c_str());
        }
        out << line;
    }
    return out.str();
}

void AblationResult::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("ablation: cannot write " + path.string());
    out << "cell,ssim,psnr_db,error\n";
    for (const auto& c : cells) {
        if (c.report) {
            out << c.cell.label << "," << fmt_metric(c.report->mean_ssim) << ","
                << fmt_metric(c.report->mean_psnr) << ",\n";
        } else {
            out << c.cell.label << ",,," << c.error << "\n";
        }
    }
}

AblationResult run_ablation(const AblationGrid& grid, const TrainConfig& base_cfg,
                            const DatasetSpec& val_spec, const EvalOptions& eval_opts) {
    AblationResult result;
    for (size_t i = 0; i < grid.cells.size(); ++i) {
        const auto& cell = grid.cells[i];
        AblationCellResult cell_result;
        cell_result.cell = cell;
        try {
            TrainConfig cfg = base_cfg;
            cfg.gen.num_unets = cell.num_unets;
            cfg.gen.use_pycon = cell.use_pycon;
            cfg.dataset.colorspace = cell.colorspace;
            cfg.seed = derive_seed(base_cfg.seed, cell.label);
            cfg.gen.init_seed = derive_seed(cfg.seed, "gen_init");
            cfg.disc.init_seed = derive_seed(cfg.seed, "disc_init");
            cfg.out_dir = base_cfg.out_dir / cell.label;
            if (cell.dropped_loss == "adv") cfg.weights.adv = 0.0;
            else if (cell.dropped_loss == "con") cfg.weights.content = 0.0;
            else if (cell.dropped_loss == "l2") cfg.weights.l2 = 0.0;
            else if (cell.dropped_loss == "ssim") cfg.weights.ssim = 0.0;
            else if (cell.dropped_loss != "none") {
                throw ConfigError("run_ablation: unknown loss tag " + cell.dropped_loss);
            }

            auto trained = train(cfg);
            auto loaded = load_generator_checkpoint(trained.final_checkpoint);
            auto val = load_dataset(val_spec);
            EvalOptions opts = eval_opts;
            opts.resize_target = cfg.resize_target;
            cell_result.report = evaluate(loaded.gen, loaded.train_space, val, opts);
        } catch (const std::exception& e) {
            cell_result.error = e.what();
        }
        result.cells.push_back(std::move(cell_result));
    }
    return result;
}

}  // namespace bppnet
