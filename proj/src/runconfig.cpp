#include "bppnet/runconfig.hpp"

#include <fstream>

namespace bppnet {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::declare(const std::string& key, const std::string& default_value) {
    items_[key] = {default_value, "default"};
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot read " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: malformed line " + std::to_string(lineno) + " in " +
                              path.string());
        }
        const auto key = trim(line.substr(0, eq));
        auto it = items_.find(key);
        if (it == items_.end()) {
            throw ConfigError("config: unknown key '" + key + "' in " + path.string());
        }
        it->second = {trim(line.substr(eq + 1)), "config"};
    }
}

void RunConfig::set_from_flag(const std::string& key, const std::string& value) {
    auto it = items_.find(key);
    if (it == items_.end()) throw ConfigError("config: undeclared key '" + key + "'");
    it->second = {value, "flag"};
}

std::vector<std::string> RunConfig::keys() const {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& [key, _] : items_) out.push_back(key);
    return out;
}

std::string RunConfig::get(const std::string& key) const {
    auto it = items_.find(key);
    if (it == items_.end()) throw ConfigError("config: undeclared key '" + key + "'");
    return it->second.value;
}

int64_t RunConfig::get_int(const std::string& key) const {
    try {
        return std::stoll(get(key));
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' is not an integer: " + get(key));
    }
}

double RunConfig::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' is not a number: " + get(key));
    }
}

bool RunConfig::get_bool(const std::string& key) const {
    const auto v = get(key);
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw ConfigError("config: key '" + key + "' is not a boolean: " + v);
}

std::string RunConfig::provenance(const std::string& key) const {
    auto it = items_.find(key);
    if (it == items_.end()) throw ConfigError("config: undeclared key '" + key + "'");
    return it->second.source;
}

void RunConfig::write_resolved(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("config: cannot write " + path.string());
    for (const auto& [key, item] : items_) {
        out << key << " = " << item.value << "  # " << item.source << "\n";
    }
}

}  // namespace bppnet
