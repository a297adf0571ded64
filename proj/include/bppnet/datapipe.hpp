#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bppnet/colorspace.hpp"
#include "bppnet/image_tensor.hpp"

namespace bppnet {

enum class DatasetName { kIHaze, kOHaze, kDenseHaze, kNtire2020, kSynthetic };

std::string to_string(DatasetName name);
DatasetName dataset_name_from_string(const std::string& name);

struct CropSpec {
    int64_t size;
    int64_t count;  // crops per image per epoch
};

struct DatasetSpec {
    DatasetName name = DatasetName::kSynthetic;
    std::filesystem::path root;
    ColorSpace colorspace = ColorSpace::kYCbCr;
    std::vector<CropSpec> crop_plan = {{1024, 4}};

    // Per-dataset defaults: I/O-Haze crop 4x1024 + 4x2048 in YCbCr,
    // Dense-Haze 4x1024 in RGB, NTIRE2020 4x1024 in YCbCr.
    static DatasetSpec for_dataset(DatasetName name, std::filesystem::path root);
};

struct ImagePair {
    std::string id;
    ImageTensor hazy;
    ImageTensor clear;
};

// Lazily decoded paired dataset with stable lexicographic ordering.
class PairedDataset {
public:
    struct Entry {
        std::string id;
        std::filesystem::path hazy_path;
        std::filesystem::path clear_path;
    };

    explicit PairedDataset(std::vector<Entry> entries) : entries_(std::move(entries)) {}

    size_t size() const { return entries_.size(); }
    const Entry& entry(size_t i) const { return entries_.at(i); }
    ImagePair load(size_t i) const;

private:
    std::vector<Entry> entries_;
};

// Scans `hazy/` + `GT/` subdirectories or flat NTIRE `NN_hazy.* / NN_GT.*`
// naming. Unpaired images are an error naming the orphan.
PairedDataset load_dataset(const DatasetSpec& spec);

// Decode PNG/JPEG to an RGB (1,3,H,W) float tensor in [0,1].
ImageTensor load_image(const std::filesystem::path& path);
// Encode to 8-bit PNG (input clamped to [0,1]; YCbCr inputs are converted).
void save_image(const ImageTensor& img, const std::filesystem::path& path);

// Identically placed crops for hazy and GT. Coordinates come from a stream
// derived from (seed, epoch, pair id, crop index), so every epoch is fresh
// and every run with the same seed replays exactly.
std::vector<ImagePair> random_crops(const ImagePair& pair, const std::vector<CropSpec>& plan,
                                    uint64_t seed, int64_t epoch);

// Separable Catmull-Rom bicubic (a = -0.5), clamped border handling, output
// clamped to [0,1]. Square targets only (the training patch contract).
ImageTensor bicubic_resize(const ImageTensor& img, int64_t target);
torch::Tensor bicubic_resize(const torch::Tensor& img, int64_t target_h, int64_t target_w);

}  // namespace bppnet
