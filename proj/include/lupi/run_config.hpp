#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lupi/experiment.hpp"

namespace lupi {

// Declarative configuration for the experimentation-map runner. Unknown keys
// anywhere in the file are rejected with their dotted path; the FNV hash of
// the canonical serialization names run directories and report headers.
struct RunConfig {
    uint64_t seed = 0;

    std::string train_archive;  // paths.train_archive
    std::string test_archive;   // paths.test_archive
    std::string out_dir;        // paths.out_dir (optional; hash+timestamp dir when empty)

    int64_t base_width = 16;  // model.base_width

    TrainConfig train;

    // map.*
    std::vector<int64_t> training_folds = {1, 2, 3, 4};
    std::vector<std::pair<int64_t, int64_t>> sample_ranges = {{1, 400}, {1, 600}, {1, 800},
                                                              {1, 1000}};
    std::vector<double> alphas = {0.8, 0.6, 0.4};
    int64_t repetitions = 5;
    int64_t cv_folds = 5;
    int64_t fold_count = 4;       // folds cut from the train archive
    int64_t train_patient_count = 0;  // 0 = train archive is already the train split
    ModelSelection selection = ModelSelection::best_validation;
    F1Aggregation aggregation = F1Aggregation::micro;

    int64_t workers = 0;  // map.workers; 0 = logical cores

    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_json_text(const std::string& text, const std::string& origin);

    std::string canonical_json() const;
    uint64_t hash() const;

    // Expands folds x ranges into experiment specs with resolved seeds.
    std::vector<ExperimentSpec> experiment_specs() const;
    ExperimentSettings settings() const;

    void validate() const;
};

}  // namespace lupi
