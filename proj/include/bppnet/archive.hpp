#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bppnet/common.hpp"

namespace bppnet::archive {

// Named-tensor archive: a directory holding
//   manifest.txt  - "key = value" lines, human readable, includes format_version
//   tensors.bin   - one named entry per tensor: name, dtype, shape,
//                   little-endian raw values
// Writes go to a temp directory first and are renamed into place.

inline constexpr int kFormatVersion = 1;

using Manifest = std::map<std::string, std::string>;

struct Loaded {
    Manifest manifest;
    std::map<std::string, torch::Tensor> tensors;
};

void write(const std::filesystem::path& dir, const Manifest& manifest,
           const std::vector<std::pair<std::string, torch::Tensor>>& entries);

Loaded read(const std::filesystem::path& dir);

// Manifest helpers; get() throws IoError when the key is absent.
std::string get(const Manifest& m, const std::string& key);
int64_t get_int(const Manifest& m, const std::string& key);
uint64_t get_uint(const Manifest& m, const std::string& key);
double get_double(const Manifest& m, const std::string& key);
std::vector<int64_t> get_int_list(const Manifest& m, const std::string& key);
std::string join_ints(const std::vector<int64_t>& values);

}  // namespace bppnet::archive
