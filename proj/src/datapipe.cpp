#include "bppnet/datapipe.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>

namespace bppnet {

std::string to_string(DatasetName name) {
    switch (name) {
        case DatasetName::kIHaze: return "ihaze";
        case DatasetName::kOHaze: return "ohaze";
        case DatasetName::kDenseHaze: return "densehaze";
        case DatasetName::kNtire2020: return "ntire2020";
        case DatasetName::kSynthetic: return "synthetic";
    }
    return "unknown";
}

DatasetName dataset_name_from_string(const std::string& name) {
    if (name == "ihaze") return DatasetName::kIHaze;
    if (name == "ohaze") return DatasetName::kOHaze;
    if (name == "densehaze") return DatasetName::kDenseHaze;
    if (name == "ntire2020") return DatasetName::kNtire2020;
    if (name == "synthetic") return DatasetName::kSynthetic;
    throw ConfigError("unknown dataset name: " + name);
}

DatasetSpec DatasetSpec::for_dataset(DatasetName name, std::filesystem::path root) {
    DatasetSpec spec;
    spec.name = name;
    spec.root = std::move(root);
    switch (name) {
        case DatasetName::kIHaze:
        case DatasetName::kOHaze:
            spec.crop_plan = {{1024, 4}, {2048, 4}};
            spec.colorspace = ColorSpace::kYCbCr;
            break;
        case DatasetName::kDenseHaze:
            spec.crop_plan = {{1024, 4}};
            spec.colorspace = ColorSpace::kRGB;
            break;
        case DatasetName::kNtire2020:
            spec.crop_plan = {{1024, 4}};
            spec.colorspace = ColorSpace::kYCbCr;
            break;
        case DatasetName::kSynthetic:
            spec.crop_plan = {{64, 1}};
            spec.colorspace = ColorSpace::kYCbCr;
            break;
    }
    return spec;
}

namespace {

bool is_image_file(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// NN_hazy.png -> {NN, hazy}; returns empty role otherwise.
std::pair<std::string, std::string> split_ntire_name(const std::filesystem::path& p) {
    const auto stem = p.stem().string();
    const auto us = stem.rfind('_');
    if (us == std::string::npos) return {stem, ""};
    auto role = stem.substr(us + 1);
    std::transform(role.begin(), role.end(), role.begin(), ::tolower);
    if (role == "hazy" || role == "gt") return {stem.substr(0, us), role};
    return {stem, ""};
}

}  // namespace

PairedDataset load_dataset(const DatasetSpec& spec) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(spec.root)) {
        throw IoError("load_dataset: no such directory: " + spec.root.string());
    }

    std::vector<PairedDataset::Entry> entries;
    const fs::path hazy_dir = spec.root / "hazy";
    const fs::path gt_dir = spec.root / "GT";
    if (fs::is_directory(hazy_dir) && fs::is_directory(gt_dir)) {
        std::map<std::string, fs::path> gt_by_stem;
        for (const auto& e : fs::directory_iterator(gt_dir)) {
            if (e.is_regular_file() && is_image_file(e.path())) {
                gt_by_stem[e.path().stem().string()] = e.path();
            }
        }
        std::map<std::string, fs::path> hazy_by_stem;
        for (const auto& e : fs::directory_iterator(hazy_dir)) {
            if (e.is_regular_file() && is_image_file(e.path())) {
                hazy_by_stem[e.path().stem().string()] = e.path();
            }
        }
        for (const auto& [stem, hazy_path] : hazy_by_stem) {
            auto it = gt_by_stem.find(stem);
            if (it == gt_by_stem.end()) {
                throw IoError("load_dataset: no GT partner for " + hazy_path.string());
            }
            entries.push_back({stem, hazy_path, it->second});
            gt_by_stem.erase(it);
        }
        if (!gt_by_stem.empty()) {
            throw IoError("load_dataset: no hazy partner for " +
                          gt_by_stem.begin()->second.string());
        }
    } else {
        std::map<std::string, fs::path> hazy_by_id, gt_by_id;
        for (const auto& e : fs::directory_iterator(spec.root)) {
            if (!e.is_regular_file() || !is_image_file(e.path())) continue;
            const auto [id, role] = split_ntire_name(e.path());
            if (role == "hazy") {
                hazy_by_id[id] = e.path();
            } else if (role == "gt") {
                gt_by_id[id] = e.path();
            }
        }
        if (hazy_by_id.empty()) {
            throw IoError("load_dataset: " + spec.root.string() +
                          " has neither hazy/+GT/ subdirectories nor NN_hazy/NN_GT files");
        }
        for (const auto& [id, hazy_path] : hazy_by_id) {
            auto it = gt_by_id.find(id);
            if (it == gt_by_id.end()) {
                throw IoError("load_dataset: no GT partner for " + hazy_path.string());
            }
            entries.push_back({id, hazy_path, it->second});
            gt_by_id.erase(it);
        }
        if (!gt_by_id.empty()) {
            throw IoError("load_dataset: no hazy partner for " + gt_by_id.begin()->second.string());
        }
    }
    // std::map iteration already gave lexicographic id order.
    return PairedDataset(std::move(entries));
}

ImagePair PairedDataset::load(size_t i) const {
    const auto& e = entries_.at(i);
    return {e.id, load_image(e.hazy_path), load_image(e.clear_path)};
}

ImageTensor load_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) {
        throw IoError("load_image: cannot decode " + path.string());
    }
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    auto t = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
    t = t.permute({2, 0, 1}).unsqueeze(0).to(torch::kFloat32) / 255.0f;
    return {t, ColorSpace::kRGB};
}

void save_image(const ImageTensor& img, const std::filesystem::path& path) {
    require_image(img.data, 3, "save_image");
    if (img.batch() != 1) {
        throw DimensionError("save_image: expected a single image, got batch " +
                             std::to_string(img.batch()));
    }
    auto rgb = convert_colorspace(img, ColorSpace::kRGB);
    auto bytes = (rgb.data.squeeze(0).clamp(0.0, 1.0) * 255.0f)
                     .round()
                     .to(torch::kUInt8)
                     .permute({1, 2, 0})
                     .contiguous();
    cv::Mat mat(static_cast<int>(bytes.size(0)), static_cast<int>(bytes.size(1)), CV_8UC3,
                bytes.data_ptr());
    cv::Mat bgr;
    cv::cvtColor(mat, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path.string(), bgr)) {
        throw IoError("save_image: cannot write " + path.string());
    }
}

std::vector<ImagePair> random_crops(const ImagePair& pair, const std::vector<CropSpec>& plan,
                                    uint64_t seed, int64_t epoch) {
    require_image(pair.hazy.data, 3, "random_crops");
    require_image(pair.clear.data, 3, "random_crops");
    if (!pair.hazy.data.sizes().equals(pair.clear.data.sizes())) {
        throw DimensionError("random_crops: hazy/GT sizes differ for pair " + pair.id);
    }
    const int64_t h = pair.hazy.height();
    const int64_t w = pair.hazy.width();
    const uint64_t pair_stream = derive_seed(derive_seed(seed, pair.id), static_cast<uint64_t>(epoch));

    std::vector<ImagePair> patches;
    for (size_t s = 0; s < plan.size(); ++s) {
        const auto& crop = plan[s];
        if (crop.size > h || crop.size > w) {
            throw DimensionError("random_crops: crop " + std::to_string(crop.size) +
                                 " exceeds image " + std::to_string(h) + "x" + std::to_string(w));
        }
        for (int64_t j = 0; j < crop.count; ++j) {
            std::mt19937_64 rng(derive_seed(pair_stream, (s << 32) | static_cast<uint64_t>(j)));
            std::uniform_int_distribution<int64_t> dy(0, h - crop.size);
            std::uniform_int_distribution<int64_t> dx(0, w - crop.size);
            const int64_t y = dy(rng);
            const int64_t x = dx(rng);
            auto slice = [&](const torch::Tensor& t) {
                return t.index({torch::indexing::Slice(), torch::indexing::Slice(),
                                torch::indexing::Slice(y, y + crop.size),
                                torch::indexing::Slice(x, x + crop.size)})
                    .contiguous();
            };
            patches.push_back({pair.id + "_s" + std::to_string(crop.size) + "_c" + std::to_string(j),
                               {slice(pair.hazy.data), pair.hazy.space},
                               {slice(pair.clear.data), pair.clear.space}});
        }
    }
    return patches;
}

namespace {

// Cubic convolution kernel, a = -0.5 (Catmull-Rom).
inline double cubic_weight(double x) {
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return a * (((x - 5.0) * x + 8.0) * x - 4.0);
    return 0.0;
}

// One separable pass along the last axis; src (rows, n_in) -> (rows, n_out).
void resample_axis(const double* src, int64_t rows, int64_t n_in, double* dst, int64_t n_out) {
    const double scale = static_cast<double>(n_in) / static_cast<double>(n_out);
    std::vector<std::array<int64_t, 4>> taps(n_out);
    std::vector<std::array<double, 4>> weights(n_out);
    for (int64_t o = 0; o < n_out; ++o) {
        const double center = (static_cast<double>(o) + 0.5) * scale - 0.5;
        const int64_t base = static_cast<int64_t>(std::floor(center));
        for (int64_t t = 0; t < 4; ++t) {
            const int64_t idx = base - 1 + t;
            taps[o][t] = std::clamp<int64_t>(idx, 0, n_in - 1);
            weights[o][t] = cubic_weight(center - static_cast<double>(idx));
        }
    }
    for (int64_t r = 0; r < rows; ++r) {
        const double* row = src + r * n_in;
        double* out = dst + r * n_out;
        for (int64_t o = 0; o < n_out; ++o) {
            out[o] = weights[o][0] * row[taps[o][0]] + weights[o][1] * row[taps[o][1]] +
                     weights[o][2] * row[taps[o][2]] + weights[o][3] * row[taps[o][3]];
        }
    }
}

}  // namespace

torch::Tensor bicubic_resize(const torch::Tensor& img, int64_t target_h, int64_t target_w) {
    require_image(img, -1, "bicubic_resize");
    if (target_h < 1 || target_w < 1) {
        throw DimensionError("bicubic_resize: target must be >= 1");
    }
    const int64_t n = img.size(0), c = img.size(1), h = img.size(2), w = img.size(3);
    if (h == target_h && w == target_w) {
        return img.clone();
    }
    auto planes = img.reshape({n * c, h, w}).to(torch::kFloat64).contiguous();

    // horizontal pass, then vertical via transpose
    auto pass1 = torch::empty({n * c, h, target_w}, torch::kFloat64);
    resample_axis(planes.const_data_ptr<double>(), n * c * h, w, pass1.data_ptr<double>(), target_w);
    auto pass1_t = pass1.transpose(1, 2).contiguous();
    auto pass2 = torch::empty({n * c, target_w, target_h}, torch::kFloat64);
    resample_axis(pass1_t.const_data_ptr<double>(), n * c * target_w, h, pass2.data_ptr<double>(),
                  target_h);
    auto out = pass2.transpose(1, 2).reshape({n, c, target_h, target_w});
    return out.clamp(0.0, 1.0).to(img.dtype());
}

ImageTensor bicubic_resize(const ImageTensor& img, int64_t target) {
    return {bicubic_resize(img.data, target, target), img.space};
}

}  // namespace bppnet
