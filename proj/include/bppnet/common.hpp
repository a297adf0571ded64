#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bppnet {

// Invalid architecture / run configuration (bad kernel parity, M < 1, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor shape violates an operation's contract.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem / decode / archive failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent seed from a base seed and a stream tag. Chained
// calls give every worker / epoch / image its own reproducible stream.
inline uint64_t derive_seed(uint64_t base, uint64_t tag) {
    return splitmix64(base ^ splitmix64(tag));
}

inline uint64_t derive_seed(uint64_t base, const std::string& tag) {
    uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return derive_seed(base, h);
}

}  // namespace bppnet
