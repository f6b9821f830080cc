#include "lupi/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lupi::nn {
namespace {

constexpr char kMagic[8] = {'L', 'U', 'P', 'I', 'C', 'K', 'P', '1'};
constexpr uint8_t kLittleEndian = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written little-endian; add byte swaps before "
              "building for a big-endian target");

template <class V>
void write_pod(std::ofstream& out, const V& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V read_pod(std::ifstream& in, const char* what) {
    V v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(V));
    if (!in) throw FormatError(std::string("checkpoint: truncated ") + what);
    return v;
}

void open_and_check_header(std::ifstream& in, const std::filesystem::path& path,
                           Precision& precision, std::optional<ModelHeader>& model,
                           uint32_t& count) {
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError(path.string() + ": not a checkpoint file");
    const auto endian = read_pod<uint8_t>(in, "endianness byte");
    if (endian != kLittleEndian)
        throw FormatError(path.string() + ": unsupported endianness tag");
    const auto prec = read_pod<uint8_t>(in, "precision byte");
    if (prec != static_cast<uint8_t>(Precision::f32) &&
        prec != static_cast<uint8_t>(Precision::f64))
        throw FormatError(path.string() + ": unsupported precision tag");
    precision = static_cast<Precision>(prec);
    const auto has_model = read_pod<uint8_t>(in, "model flag");
    if (has_model) {
        ModelHeader h;
        h.in_channels = read_pod<int32_t>(in, "model header");
        h.base_width = read_pod<int32_t>(in, "model header");
        h.depth = read_pod<int32_t>(in, "model header");
        h.class_count = read_pod<int32_t>(in, "model header");
        model = h;
    }
    count = read_pod<uint32_t>(in, "entry count");
}

}  // namespace

template <class T>
void write_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& ckpt) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, 8);
    write_pod(out, kLittleEndian);
    write_pod(out, static_cast<uint8_t>(precision_of<T>()));
    write_pod(out, static_cast<uint8_t>(ckpt.model.has_value() ? 1 : 0));
    if (ckpt.model) {
        write_pod(out, ckpt.model->in_channels);
        write_pod(out, ckpt.model->base_width);
        write_pod(out, ckpt.model->depth);
        write_pod(out, ckpt.model->class_count);
    }
    write_pod(out, static_cast<uint32_t>(ckpt.entries.size()));
    for (const auto& e : ckpt.entries) {
        if (e.name.size() > 0xffff) throw ArgumentError("checkpoint: entry name too long");
        write_pod(out, static_cast<uint16_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        write_pod(out, static_cast<uint8_t>(e.shape.size()));
        for (int64_t d : e.shape) write_pod(out, d);
        if (static_cast<int64_t>(e.values.size()) != numel(e.shape))
            throw ArgumentError("checkpoint: entry '" + e.name + "' shape/value mismatch");
        out.write(reinterpret_cast<const char*>(e.values.data()),
                  static_cast<std::streamsize>(e.values.size() * sizeof(T)));
    }
    if (!out) throw IoError("short write to " + path.string());
}

template <class T>
Checkpoint<T> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    Precision prec;
    Checkpoint<T> ckpt;
    uint32_t count = 0;
    open_and_check_header(in, path, prec, ckpt.model, count);
    if (prec != precision_of<T>())
        throw FormatError(path.string() + ": precision mismatch (use inspect_checkpoint)");
    ckpt.entries.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        NamedArray<T> e;
        const auto name_len = read_pod<uint16_t>(in, "entry name length");
        e.name.resize(name_len);
        in.read(e.name.data(), name_len);
        const auto ndim = read_pod<uint8_t>(in, "entry rank");
        e.shape.resize(ndim);
        for (auto& d : e.shape) d = read_pod<int64_t>(in, "entry dims");
        const int64_t n = numel(e.shape);
        if (n < 0) throw FormatError(path.string() + ": negative entry size");
        e.values.resize(static_cast<size_t>(n));
        in.read(reinterpret_cast<char*>(e.values.data()),
                static_cast<std::streamsize>(e.values.size() * sizeof(T)));
        if (!in) throw FormatError(path.string() + ": truncated entry payload");
        ckpt.entries.push_back(std::move(e));
    }
    return ckpt;
}

CheckpointInfo inspect_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    CheckpointInfo info;
    uint32_t count = 0;
    open_and_check_header(in, path, info.precision, info.model, count);
    const size_t elem = info.precision == Precision::f32 ? 4 : 8;
    for (uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<uint16_t>(in, "entry name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto ndim = read_pod<uint8_t>(in, "entry rank");
        int64_t n = 1;
        for (uint8_t d = 0; d < ndim; ++d) n *= read_pod<int64_t>(in, "entry dims");
        in.seekg(static_cast<std::streamoff>(static_cast<size_t>(n) * elem), std::ios::cur);
        if (!in) throw FormatError(path.string() + ": truncated entry payload");
        info.entry_names.push_back(std::move(name));
    }
    return info;
}

template void write_checkpoint<float>(const std::filesystem::path&, const Checkpoint<float>&);
template void write_checkpoint<double>(const std::filesystem::path&, const Checkpoint<double>&);
template Checkpoint<float> read_checkpoint<float>(const std::filesystem::path&);
template Checkpoint<double> read_checkpoint<double>(const std::filesystem::path&);

}  // namespace lupi::nn
