#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lupi/patch.hpp"

namespace lupi {

// Patient-disjoint train/test partition with contiguous in-order folds over
// the train indices.
struct DatasetSplit {
    std::vector<PatchRecord> train_patches;
    std::vector<PatchRecord> test_patches;
    std::vector<std::pair<int64_t, int64_t>> folds;  // [begin, end) into train_patches
    uint64_t seed = 0;                               // provenance only

    void check_patient_disjointness() const;  // throws DataError on overlap
};

// Train set = all patches of the first train_patient_count distinct patients
// in order of first appearance (patient blocks are contiguous); the rest form
// the test set. Train indices are cut into fold_count contiguous blocks whose
// sizes differ by at most one.
DatasetSplit build_split(std::vector<PatchRecord> patches, int64_t train_patient_count,
                         int64_t fold_count, uint64_t seed);

// k contiguous [begin, end) blocks over n indices, sizes differing by at most one.
std::vector<std::pair<int64_t, int64_t>> contiguous_folds(int64_t n, int64_t k);

// Split assembled from already-separated archives (e.g. a user-supplied
// patch collection); folds are cut from the train patches in order.
DatasetSplit split_from_patches(std::vector<PatchRecord> train, std::vector<PatchRecord> test,
                                int64_t fold_count);

}  // namespace lupi
