#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lupi/split.hpp"
#include "lupi/train.hpp"

namespace lupi {

// How the cross-validation fold models of one repetition turn into the single
// test-set score: evaluate the fold with the best final validation F1 (the
// default), average the fold models' test scores, or use the last fold.
enum class ModelSelection { best_validation, average_of_folds, last_fold };

ModelSelection selection_from_string(const std::string& s);
std::string to_string(ModelSelection s);

// One cell of the experimentation map.
struct ExperimentSpec {
    std::string experiment_id;                      // E1.. style label
    int64_t training_fold = 1;                      // 1-based fold index
    std::pair<int64_t, int64_t> sample_range = {1, 400};  // 1-based, inclusive
    int64_t repetitions = 5;
    std::vector<double> alphas = {0.8, 0.6, 0.4};
    int64_t cv_folds = 5;
    std::vector<uint64_t> seeds;  // one per repetition

    void validate_against(const DatasetSplit& split) const;
    // Fills `seeds` deterministically from a global seed when empty.
    void resolve_seeds(uint64_t global_seed);
};

struct VariantResult {
    std::string variant;  // "teacher", "student", "pi_a0.8", ...
    std::vector<double> rep_f1;
    double mean_f1 = 0.0;
    // Absent (NaN) when repetitions < 2.
    double ci_half_width = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentResult {
    ExperimentSpec spec;
    std::vector<VariantResult> variants;
    bool failed = false;
    std::string error;  // partial-results report carries the failure reason
};

struct ExperimentSettings {
    int64_t base_width = 16;
    TrainConfig train;  // seed/alpha are overridden per run
    ModelSelection selection = ModelSelection::best_validation;
    F1Aggregation aggregation = F1Aggregation::micro;
};

std::string pi_variant_name(double alpha);

// One experiment cell: per repetition, k-fold CV over the chosen sample range
// of the chosen training fold; trains teacher, baseline student, and one PI
// student per alpha per CV fold; scores the selected model of each variant on
// the full test set; aggregates mean +/- 95% CI over repetitions.
ExperimentResult run_experiment(const ExperimentSpec& spec, const DatasetSplit& split,
                                const ExperimentSettings& settings);

// Independent cells scheduled over a bounded worker pool (workers = 0 picks
// the hardware concurrency). Results arrive in spec order regardless of
// scheduling; a cell failure is recorded in its slot, the rest proceed.
std::vector<ExperimentResult> run_experiment_map(const std::vector<ExperimentSpec>& specs,
                                                 const DatasetSplit& split,
                                                 const ExperimentSettings& settings,
                                                 int64_t workers = 0);

}  // namespace lupi
