#include "lupi/split.hpp"

#include <set>
#include <string>

namespace lupi {

void DatasetSplit::check_patient_disjointness() const {
    std::set<std::string> train_ids;
    for (const auto& p : train_patches) train_ids.insert(p.patient_id);
    for (const auto& p : test_patches)
        if (train_ids.count(p.patient_id))
            throw DataError("split: patient '" + p.patient_id + "' appears in train and test");
}

DatasetSplit build_split(std::vector<PatchRecord> patches, int64_t train_patient_count,
                         int64_t fold_count, uint64_t seed) {
    if (patches.empty()) throw ArgumentError("build_split: empty patch list");
    if (fold_count < 1) throw ArgumentError("build_split: fold_count must be >= 1");

    std::vector<std::string> patient_order;
    std::set<std::string> seen;
    for (const auto& p : patches)
        if (seen.insert(p.patient_id).second) patient_order.push_back(p.patient_id);
    if (train_patient_count < 1 ||
        train_patient_count >= static_cast<int64_t>(patient_order.size()))
        throw ArgumentError("build_split: need 1 <= train_patient_count < distinct patients (" +
                            std::to_string(patient_order.size()) + ")");

    std::set<std::string> train_ids(patient_order.begin(),
                                    patient_order.begin() + train_patient_count);
    DatasetSplit split;
    split.seed = seed;
    for (auto& p : patches) {
        if (train_ids.count(p.patient_id))
            split.train_patches.push_back(std::move(p));
        else
            split.test_patches.push_back(std::move(p));
    }

    split.folds = contiguous_folds(static_cast<int64_t>(split.train_patches.size()), fold_count);
    split.check_patient_disjointness();
    return split;
}

std::vector<std::pair<int64_t, int64_t>> contiguous_folds(int64_t n, int64_t k) {
    if (k < 1) throw ArgumentError("contiguous_folds: fold count must be >= 1");
    std::vector<std::pair<int64_t, int64_t>> blocks;
    const int64_t base = n / k;
    const int64_t extra = n % k;  // first `extra` folds get one more
    int64_t begin = 0;
    for (int64_t f = 0; f < k; ++f) {
        const int64_t size = base + (f < extra ? 1 : 0);
        blocks.emplace_back(begin, begin + size);
        begin += size;
    }
    return blocks;
}

DatasetSplit split_from_patches(std::vector<PatchRecord> train, std::vector<PatchRecord> test,
                                int64_t fold_count) {
    if (train.empty()) throw ArgumentError("split_from_patches: empty train set");
    DatasetSplit split;
    split.train_patches = std::move(train);
    split.test_patches = std::move(test);
    split.folds = contiguous_folds(static_cast<int64_t>(split.train_patches.size()), fold_count);
    split.check_patient_disjointness();
    return split;
}

}  // namespace lupi
