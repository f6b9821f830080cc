#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lupi/core.hpp"
#include "lupi/nn/tensor.hpp"

namespace lupi::nn {

// Single-file parameter checkpoint: magic + endianness + precision header,
// then shape-tagged named arrays (parameters and batch-norm running stats).
// Writing and re-reading round-trips bit-exactly.

enum class Precision : uint8_t { f32 = 4, f64 = 8 };

// Optional self-describing model header (segmentation-network files carry it).
struct ModelHeader {
    int32_t in_channels = 0;
    int32_t base_width = 0;
    int32_t depth = 0;
    int32_t class_count = 0;
};

struct CheckpointInfo {
    Precision precision = Precision::f32;
    std::optional<ModelHeader> model;
    std::vector<std::string> entry_names;
};

template <class T>
struct NamedArray {
    std::string name;
    Shape shape;
    std::vector<T> values;
};

template <class T>
struct Checkpoint {
    std::optional<ModelHeader> model;
    std::vector<NamedArray<T>> entries;

    const NamedArray<T>& find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return e;
        throw FormatError("checkpoint: missing entry '" + name + "'");
    }
};

template <class T>
void write_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& ckpt);

template <class T>
Checkpoint<T> read_checkpoint(const std::filesystem::path& path);

// Header-only peek, used to pick the precision before a full read.
CheckpointInfo inspect_checkpoint(const std::filesystem::path& path);

template <class T>
constexpr Precision precision_of();
template <>
constexpr Precision precision_of<float>() {
    return Precision::f32;
}
template <>
constexpr Precision precision_of<double>() {
    return Precision::f64;
}

}  // namespace lupi::nn
