#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bppnet/common.hpp"

namespace bppnet {

// Layered run configuration: declared defaults <- config file <- command
// line. Every key carries its provenance and the resolved set is written
// next to the run's outputs. Unknown keys in a config file are errors.
class RunConfig {
public:
    void declare(const std::string& key, const std::string& default_value);

    // "key = value" lines; '#' starts a comment.
    void load_file(const std::filesystem::path& path);

    void set_from_flag(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return items_.count(key) > 0; }
    std::vector<std::string> keys() const;
    std::string get(const std::string& key) const;
    int64_t get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::string provenance(const std::string& key) const;

    void write_resolved(const std::filesystem::path& path) const;

private:
    struct Item {
        std::string value;
        std::string source;  // "default" | "config" | "flag"
    };
    std::map<std::string, Item> items_;
};

}  // namespace bppnet
