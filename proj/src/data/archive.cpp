#include "lupi/archive.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "lupi/image_io.hpp"

namespace lupi {
namespace {

using nlohmann::json;

constexpr const char* kPatchArchiveFormat = "lupiseg-patch-archive-v1";
constexpr const char* kEnhancedArchiveFormat = "lupiseg-enhanced-archive-v1";

std::string patch_id(size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%06zu", index);
    return buf;
}

json params_to_json(const ExtractionParams& p) {
    return json{{"h_ppi", p.h_ppi},
                {"nh_ppi", p.nh_ppi},
                {"mar", p.mar},
                {"bar", p.bar},
                {"patch_size", p.patch_size},
                {"max_attempts_per_patch", p.max_attempts_per_patch},
                {"background_threshold", p.background_threshold}};
}

ExtractionParams params_from_json(const json& j) {
    ExtractionParams p;
    p.h_ppi = j.at("h_ppi").get<int64_t>();
    p.nh_ppi = j.at("nh_ppi").get<int64_t>();
    p.mar = j.at("mar").get<double>();
    p.bar = j.at("bar").get<double>();
    p.patch_size = j.at("patch_size").get<int64_t>();
    p.max_attempts_per_patch = j.at("max_attempts_per_patch").get<int64_t>();
    p.background_threshold = j.at("background_threshold").get<double>();
    return p;
}

json load_manifest(const std::filesystem::path& dir, const char* expected_format) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }
    if (j.value("format", "") != expected_format)
        throw FormatError(manifest_path.string() + ": unexpected archive format");
    return j;
}

void write_manifest(const std::filesystem::path& dir, const json& j) {
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << j.dump(2) << "\n";
}

GrayImage as_16bit(GrayImage img) {
    img.source_bit_depth = 16;
    return img;
}

}  // namespace

void write_patch_archive(const std::filesystem::path& dir, const PatchArchive& archive) {
    std::filesystem::create_directories(dir / "patches");
    std::filesystem::create_directories(dir / "masks");

    json patches = json::array();
    for (size_t i = 0; i < archive.patches.size(); ++i) {
        const auto& p = archive.patches[i];
        const std::string id = patch_id(i);
        const std::string image_rel = "patches/" + id + ".pgm";
        const std::string mask_rel = "masks/" + id + ".pgm";
        save_gray_image(as_16bit(p.image), dir / image_rel);
        save_mask_image(p.mask, dir / mask_rel);
        patches.push_back(json{{"id", id},
                               {"patient_id", p.patient_id},
                               {"source_image_id", p.source_image_id},
                               {"origin", json::array({p.origin_x, p.origin_y})},
                               {"class_tag", to_string(p.class_tag)},
                               {"image", image_rel},
                               {"mask", mask_rel}});
    }
    json manifest{{"format", kPatchArchiveFormat},
                  {"seed", archive.seed},
                  {"params", params_to_json(archive.params)},
                  {"shortfall", json{{"healthy", archive.shortfall_healthy},
                                     {"non_healthy", archive.shortfall_non_healthy}}},
                  {"patches", patches}};
    write_manifest(dir, manifest);
}

PatchArchive read_patch_archive(const std::filesystem::path& dir) {
    const json manifest = load_manifest(dir, kPatchArchiveFormat);
    PatchArchive archive;
    archive.seed = manifest.at("seed").get<uint64_t>();
    archive.params = params_from_json(manifest.at("params"));
    archive.shortfall_healthy = manifest.at("shortfall").at("healthy").get<int64_t>();
    archive.shortfall_non_healthy = manifest.at("shortfall").at("non_healthy").get<int64_t>();
    for (const auto& entry : manifest.at("patches")) {
        PatchRecord p;
        p.patient_id = entry.at("patient_id").get<std::string>();
        p.source_image_id = entry.at("source_image_id").get<std::string>();
        p.origin_x = entry.at("origin").at(0).get<int64_t>();
        p.origin_y = entry.at("origin").at(1).get<int64_t>();
        p.class_tag = class_tag_from_string(entry.at("class_tag").get<std::string>());
        p.image = load_gray_image(dir / entry.at("image").get<std::string>());
        p.mask = load_mask_image(dir / entry.at("mask").get<std::string>());
        if (p.image.width != p.mask.width || p.image.height != p.mask.height)
            throw DataError(dir.string() + ": patch '" + entry.at("id").get<std::string>() +
                            "' image/mask dimensions disagree");
        archive.patches.push_back(std::move(p));
    }
    return archive;
}

void write_enhanced_archive(const std::filesystem::path& dir,
                            const std::vector<EnhancedPatch>& patches) {
    std::filesystem::create_directories(dir / "channels");
    std::filesystem::create_directories(dir / "masks");
    json entries = json::array();
    for (size_t i = 0; i < patches.size(); ++i) {
        const auto& p = patches[i];
        const std::string id = patch_id(i);
        json channel_paths = json::array();
        for (size_t c = 0; c < p.channels.size(); ++c) {
            const std::string rel = "channels/" + id + "_c" + std::to_string(c) + ".pgm";
            save_gray_image(as_16bit(p.channels[c]), dir / rel);
            channel_paths.push_back(rel);
        }
        const std::string mask_rel = "masks/" + id + ".pgm";
        save_mask_image(p.mask, dir / mask_rel);
        entries.push_back(json{{"id", id}, {"channels", channel_paths}, {"mask", mask_rel}});
    }
    write_manifest(dir, json{{"format", kEnhancedArchiveFormat}, {"patches", entries}});
}

std::vector<EnhancedPatch> read_enhanced_archive(const std::filesystem::path& dir) {
    const json manifest = load_manifest(dir, kEnhancedArchiveFormat);
    std::vector<EnhancedPatch> out;
    for (const auto& entry : manifest.at("patches")) {
        EnhancedPatch p;
        const auto& channels = entry.at("channels");
        if (channels.size() != 3)
            throw FormatError(dir.string() + ": enhanced patch must have 3 channels");
        for (size_t c = 0; c < 3; ++c)
            p.channels[c] = load_gray_image(dir / channels.at(c).get<std::string>());
        p.mask = load_mask_image(dir / entry.at("mask").get<std::string>());
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace lupi
