#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bppnet/datapipe.hpp"
#include "bppnet/generator.hpp"
#include "bppnet/losses.hpp"
#include "bppnet/trainer.hpp"

namespace bppnet {

// 10*log10(peak^2 / MSE) with peak 1.0; +inf for identical images.
double psnr(const torch::Tensor& gt, const torch::Tensor& pred);

struct PerImageResult {
    std::string id;
    double ssim = 0;
    double psnr_db = 0;
    double inference_ms = 0;
};

struct EvalReport {
    std::vector<PerImageResult> images;
    double mean_ssim = 0;
    double mean_psnr = 0;   // +inf propagates
    double mean_ms = 0;
    std::string config_fingerprint;

    void write_csv(const std::filesystem::path& path) const;
    std::string render_table() const;
};

struct EvalOptions {
    int64_t resize_target = 512;
    SsimParams ssim;
    // Dump dehazed outputs / |pred-GT| maps / histograms under out_dir.
    std::optional<std::filesystem::path> dump_dir;
    // Observes the colorspace of the tensors metrics run on (always RGB).
    std::function<void(ColorSpace)> metric_space_probe;
};

// Metrics are computed in RGB regardless of the training space: inputs are
// resized, converted to the model's space for the forward pass, and the
// clamped prediction is converted back before SSIM/PSNR. Timing covers the
// generator forward only.
EvalReport evaluate(Generator& gen, ColorSpace train_space, const PairedDataset& dataset,
                    const EvalOptions& opts = {});

// Same protocol with an arbitrary RGB->RGB image operator (test stubs).
using ImageOp = std::function<torch::Tensor(const torch::Tensor&)>;
EvalReport evaluate_op(const ImageOp& op, const PairedDataset& dataset,
                       const EvalOptions& opts = {});

// One ablation cell: an architecture/loss/colorspace variant trained and
// evaluated with a cell-derived seed.
struct AblationCell {
    std::string label;
    int64_t num_unets = 4;
    bool use_pycon = true;
    std::string dropped_loss = "none";  // none|adv|con|l2|ssim
    ColorSpace colorspace = ColorSpace::kYCbCr;
};

struct AblationGrid {
    std::vector<AblationCell> cells;

    // Reference cell (M=4, PyCon on, all losses, YCbCr) plus requested axes.
    static AblationGrid standard(const std::vector<int64_t>& unet_counts, bool include_no_pycon,
                                 const std::vector<std::string>& dropped_losses,
                                 bool include_rgb);
};

struct AblationCellResult {
    AblationCell cell;
    std::optional<EvalReport> report;  // empty on failure
    std::string error;
};

struct AblationResult {
    std::vector<AblationCellResult> cells;
    std::string render_table() const;
    void write_csv(const std::filesystem::path& path) const;
};

// Trains and evaluates every cell; a failing cell is recorded and the rest
// proceed. base_cfg supplies the common budget/dataset; the validation set
// provides the reported metrics.
AblationResult run_ablation(const AblationGrid& grid, const TrainConfig& base_cfg,
                            const DatasetSpec& val_spec, const EvalOptions& eval_opts = {});

}  // namespace bppnet
