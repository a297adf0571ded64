#include "bppnet/archive.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace bppnet::archive {

namespace {

constexpr char kMagic[8] = {'B', 'P', 'P', 'T', 'E', 'N', 'S', '1'};

uint8_t dtype_tag(torch::ScalarType t) {
    switch (t) {
        case torch::kFloat32: return 0;
        case torch::kFloat64: return 1;
        case torch::kInt64: return 2;
        case torch::kUInt8: return 3;
        default: throw IoError("archive: unsupported dtype " + std::string(c10::toString(t)));
    }
}

torch::ScalarType tag_dtype(uint8_t tag) {
    switch (tag) {
        case 0: return torch::kFloat32;
        case 1: return torch::kFloat64;
        case 2: return torch::kInt64;
        case 3: return torch::kUInt8;
        default: throw IoError("archive: unknown dtype tag " + std::to_string(tag));
    }
}

template <typename T>
void write_pod(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw IoError("archive: truncated tensor file");
    return value;
}

}  // namespace

void write(const std::filesystem::path& dir, const Manifest& manifest,
           const std::vector<std::pair<std::string, torch::Tensor>>& entries) {
    namespace fs = std::filesystem;
    const fs::path tmp = dir.string() + ".tmp";
    std::error_code ec;
    fs::remove_all(tmp, ec);
    fs::create_directories(tmp);

    {
        std::ofstream mf(tmp / "manifest.txt");
        if (!mf) throw IoError("archive: cannot write " + (tmp / "manifest.txt").string());
        mf << "format_version = " << kFormatVersion << "\n";
        for (const auto& [key, value] : manifest) {
            if (key == "format_version") continue;
            mf << key << " = " << value << "\n";
        }
    }
    {
        std::ofstream tf(tmp / "tensors.bin", std::ios::binary);
        if (!tf) throw IoError("archive: cannot write " + (tmp / "tensors.bin").string());
        tf.write(kMagic, sizeof(kMagic));
        write_pod<uint32_t>(tf, static_cast<uint32_t>(entries.size()));
        for (const auto& [name, tensor] : entries) {
            auto t = tensor.detach().contiguous().cpu();
            write_pod<uint32_t>(tf, static_cast<uint32_t>(name.size()));
            tf.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_pod<uint8_t>(tf, dtype_tag(t.scalar_type()));
            write_pod<uint8_t>(tf, static_cast<uint8_t>(t.dim()));
            for (int64_t d = 0; d < t.dim(); ++d) write_pod<int64_t>(tf, t.size(d));
            const uint64_t nbytes = static_cast<uint64_t>(t.numel()) * t.element_size();
            write_pod<uint64_t>(tf, nbytes);
            tf.write(static_cast<const char*>(t.const_data_ptr()), static_cast<std::streamsize>(nbytes));
        }
        if (!tf) throw IoError("archive: short write to " + (tmp / "tensors.bin").string());
    }

    fs::remove_all(dir, ec);
    fs::rename(tmp, dir);
}

Loaded read(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir / "manifest.txt") || !fs::exists(dir / "tensors.bin")) {
        throw IoError("archive: " + dir.string() + " is not a named-tensor archive");
    }
    Loaded loaded;
    {
        std::ifstream mf(dir / "manifest.txt");
        std::string line;
        while (std::getline(mf, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw IoError("archive: malformed manifest line: " + line);
            }
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t");
                const auto e = s.find_last_not_of(" \t");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            loaded.manifest[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
    }
    if (get_int(loaded.manifest, "format_version") != kFormatVersion) {
        throw IoError("archive: unsupported format_version " +
                      get(loaded.manifest, "format_version"));
    }
    {
        std::ifstream tf(dir / "tensors.bin", std::ios::binary);
        char magic[sizeof(kMagic)];
        tf.read(magic, sizeof(magic));
        if (!tf || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
            throw IoError("archive: bad magic in " + (dir / "tensors.bin").string());
        }
        const auto count = read_pod<uint32_t>(tf);
        for (uint32_t i = 0; i < count; ++i) {
            const auto name_len = read_pod<uint32_t>(tf);
            std::string name(name_len, '\0');
            tf.read(name.data(), name_len);
            const auto dtype = tag_dtype(read_pod<uint8_t>(tf));
            const auto ndim = read_pod<uint8_t>(tf);
            std::vector<int64_t> dims(ndim);
            for (auto& d : dims) d = read_pod<int64_t>(tf);
            const auto nbytes = read_pod<uint64_t>(tf);
            auto tensor = torch::empty(dims, torch::TensorOptions().dtype(dtype));
            if (static_cast<uint64_t>(tensor.numel()) * tensor.element_size() != nbytes) {
                throw IoError("archive: size mismatch for entry " + name);
            }
            tf.read(static_cast<char*>(tensor.data_ptr()), static_cast<std::streamsize>(nbytes));
            if (!tf) throw IoError("archive: truncated data for entry " + name);
            loaded.tensors[name] = tensor;
        }
    }
    return loaded;
}

std::string get(const Manifest& m, const std::string& key) {
    auto it = m.find(key);
    if (it == m.end()) throw IoError("archive manifest: missing key '" + key + "'");
    return it->second;
}

int64_t get_int(const Manifest& m, const std::string& key) {
    return std::stoll(get(m, key));
}

uint64_t get_uint(const Manifest& m, const std::string& key) {
    return std::stoull(get(m, key));
}

double get_double(const Manifest& m, const std::string& key) {
    return std::stod(get(m, key));
}

std::vector<int64_t> get_int_list(const Manifest& m, const std::string& key) {
    std::vector<int64_t> values;
    std::stringstream ss(get(m, key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) values.push_back(std::stoll(item));
    }
    return values;
}

std::string join_ints(const std::vector<int64_t>& values) {
    std::string out;
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(values[i]);
    }
    return out;
}

}  // namespace bppnet::archive
