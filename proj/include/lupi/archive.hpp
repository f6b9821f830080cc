#pragma once

#include <filesystem>
#include <vector>

#include "lupi/patch.hpp"

namespace lupi {

// On-disk patch archive: one directory per split with a JSON manifest (the
// source of truth for provenance) plus one 16-bit PGM per patch image and one
// 8-bit PGM per mask. 16-bit quantization is lossless for 8- and 16-bit
// sources, so a write/read cycle preserves intensities exactly.
struct PatchArchive {
    std::vector<PatchRecord> patches;
    ExtractionParams params;
    uint64_t seed = 0;
    int64_t shortfall_healthy = 0;
    int64_t shortfall_non_healthy = 0;
};

void write_patch_archive(const std::filesystem::path& dir, const PatchArchive& archive);
PatchArchive read_patch_archive(const std::filesystem::path& dir);

// Teacher-channel archive produced by the `enhance` command: three channel
// files per patch plus the carried-through mask.
void write_enhanced_archive(const std::filesystem::path& dir,
                            const std::vector<EnhancedPatch>& patches);
std::vector<EnhancedPatch> read_enhanced_archive(const std::filesystem::path& dir);

}  // namespace lupi
