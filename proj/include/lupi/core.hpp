#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lupi {

// Error taxonomy. The CLI maps these onto exit codes:
// ConfigError/ArgumentError -> 2, IoError/FormatError/DataError -> 3,
// NumericError -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ArgumentError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

// Index-aligned (raw, enhanced) pairs whose channel 0 disagrees.
struct PairingError : DataError {
    using DataError::DataError;
};

struct NumericError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& key_path, const std::string& what)
        : Error(key_path + ": " + what), key_path(key_path) {}
    std::string key_path;
};

// FNV-1a, used for config hashes and seed-stream derivation. Stable across
// platforms and runs, unlike std::hash.
constexpr uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64_bytes(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(uint64_t v);

}  // namespace lupi
