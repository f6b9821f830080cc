#include "lupi/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "lupi/rng.hpp"

namespace lupi {

ModelSelection selection_from_string(const std::string& s) {
    if (s == "best-validation") return ModelSelection::best_validation;
    if (s == "average-of-folds") return ModelSelection::average_of_folds;
    if (s == "last-fold") return ModelSelection::last_fold;
    throw ArgumentError("unknown model selection '" + s + "'");
}

std::string to_string(ModelSelection s) {
    switch (s) {
        case ModelSelection::best_validation: return "best-validation";
        case ModelSelection::average_of_folds: return "average-of-folds";
        default: return "last-fold";
    }
}

std::string pi_variant_name(double alpha) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "pi_a%.2g", alpha);
    return buf;
}

void ExperimentSpec::validate_against(const DatasetSplit& split) const {
    if (repetitions < 1) throw ArgumentError(experiment_id + ": repetitions must be >= 1");
    if (cv_folds < 2) throw ArgumentError(experiment_id + ": cv_folds must be >= 2");
    if (split.test_patches.empty()) throw ArgumentError(experiment_id + ": empty test set");
    if (training_fold < 1 || training_fold > static_cast<int64_t>(split.folds.size()))
        throw ArgumentError(experiment_id + ": training_fold out of range");
    const auto [fb, fe] = split.folds[static_cast<size_t>(training_fold - 1)];
    const int64_t fold_size = fe - fb;
    if (sample_range.first < 1 || sample_range.second < sample_range.first ||
        sample_range.second > fold_size)
        throw ArgumentError(experiment_id + ": sample_range outside fold bounds (fold has " +
                            std::to_string(fold_size) + " patches)");
    const int64_t n_samples = sample_range.second - sample_range.first + 1;
    if (n_samples < cv_folds)
        throw ArgumentError(experiment_id + ": fewer samples than CV folds");
    if (!seeds.empty() && static_cast<int64_t>(seeds.size()) != repetitions)
        throw ArgumentError(experiment_id + ": seeds list must match repetitions");
    for (double a : alphas)
        if (!(a >= 0.0 && a <= 1.0))
            throw ArgumentError(experiment_id + ": alpha outside [0,1]");
}

void ExperimentSpec::resolve_seeds(uint64_t global_seed) {
    if (!seeds.empty()) return;
    for (int64_t r = 0; r < repetitions; ++r)
        seeds.push_back(Rng::derive_seed(global_seed, experiment_id, static_cast<uint64_t>(r)));
}

namespace {

double last_val_f1(const std::vector<EpochStats>& history) {
    for (auto it = history.rbegin(); it != history.rend(); ++it)
        if (!std::isnan(it->val_f1)) return it->val_f1;
    return std::numeric_limits<double>::quiet_NaN();
}

template <class T>
struct FoldOutcome {
    UNetModel<T> model;
    double val_f1;
};

// Reduce the CV fold models of one variant to a single test-set F1.
template <class T>
double score_variant(std::vector<FoldOutcome<T>>& folds, const TensorDataset<T>& test,
                     const ExperimentSettings& settings) {
    auto eval = [&](UNetModel<T>& m) {
        return evaluate_f1(m, test, settings.train.batch_size, settings.aggregation);
    };
    switch (settings.selection) {
        case ModelSelection::average_of_folds: {
            double sum = 0.0;
            for (auto& f : folds) sum += eval(f.model);
            return sum / static_cast<double>(folds.size());
        }
        case ModelSelection::last_fold:
            return eval(folds.back().model);
        case ModelSelection::best_validation:
        default: {
            size_t best = 0;
            for (size_t i = 1; i < folds.size(); ++i)
                if (folds[i].val_f1 > folds[best].val_f1) best = i;
            return eval(folds[best].model);
        }
    }
}

template <class T>
ExperimentResult run_experiment_impl(ExperimentSpec spec, const DatasetSplit& split,
                                     const ExperimentSettings& settings) {
    spec.validate_against(split);
    if (spec.seeds.empty())
        throw ArgumentError(spec.experiment_id + ": seeds unresolved (call resolve_seeds)");

    const auto [fb, fe] = split.folds[static_cast<size_t>(spec.training_fold - 1)];
    const int64_t lo = fb + spec.sample_range.first - 1;
    const int64_t hi = fb + spec.sample_range.second;  // exclusive
    const std::vector<PatchRecord> samples(split.train_patches.begin() + lo,
                                           split.train_patches.begin() + hi);

    // Test tensors are shared across repetitions.
    const auto test_student = tensorize_student<T>(split.test_patches);
    const auto test_enhanced = enhance_all(split.test_patches);
    const auto test_teacher = tensorize_teacher<T>(test_enhanced);

    std::vector<std::string> variant_names{"teacher", "student"};
    for (double a : spec.alphas) variant_names.push_back(pi_variant_name(a));

    ExperimentResult result;
    result.spec = spec;
    for (const auto& name : variant_names) {
        VariantResult v;
        v.variant = name;
        result.variants.push_back(std::move(v));
    }

    try {
        for (int64_t rep = 0; rep < spec.repetitions; ++rep) {
            const uint64_t rep_seed = spec.seeds[static_cast<size_t>(rep)];
            const auto blocks = contiguous_folds(static_cast<int64_t>(samples.size()),
                                                 spec.cv_folds);

            std::vector<FoldOutcome<T>> teacher_folds, student_folds;
            std::vector<std::vector<FoldOutcome<T>>> pi_folds(spec.alphas.size());

            for (int64_t j = 0; j < spec.cv_folds; ++j) {
                const auto [vb, ve] = blocks[static_cast<size_t>(j)];
                std::vector<PatchRecord> fold_train;
                std::vector<PatchRecord> fold_val(samples.begin() + vb, samples.begin() + ve);
                fold_train.insert(fold_train.end(), samples.begin(), samples.begin() + vb);
                fold_train.insert(fold_train.end(), samples.begin() + ve, samples.end());

                const auto enhanced_train = enhance_all(fold_train);
                const auto enhanced_val = enhance_all(fold_val);

                TrainConfig cfg = settings.train;
                cfg.quiet = true;
                cfg.seed = Rng::derive_seed(rep_seed, "teacher", static_cast<uint64_t>(j));
                auto teacher = train_teacher<T>(enhanced_train, settings.base_width, cfg,
                                                &enhanced_val);
                teacher_folds.push_back(
                    {std::move(teacher.model), last_val_f1(teacher.history)});

                cfg.seed = Rng::derive_seed(rep_seed, "student", static_cast<uint64_t>(j));
                auto student = train_student<T>(fold_train, settings.base_width, cfg, &fold_val);
                student_folds.push_back(
                    {std::move(student.model), last_val_f1(student.history)});

                for (size_t ai = 0; ai < spec.alphas.size(); ++ai) {
                    cfg.alpha = spec.alphas[ai];
                    cfg.seed = Rng::derive_seed(rep_seed, variant_names[2 + ai],
                                                static_cast<uint64_t>(j));
                    auto pi = train_pi_student<T>(fold_train, enhanced_train,
                                                  teacher_folds.back().model,
                                                  settings.base_width, cfg, &fold_val);
                    pi_folds[ai].push_back({std::move(pi.model), last_val_f1(pi.history)});
                }
            }

            result.variants[0].rep_f1.push_back(
                score_variant(teacher_folds, test_teacher, settings));
            result.variants[1].rep_f1.push_back(
                score_variant(student_folds, test_student, settings));
            for (size_t ai = 0; ai < spec.alphas.size(); ++ai)
                result.variants[2 + ai].rep_f1.push_back(
                    score_variant(pi_folds[ai], test_student, settings));
        }
    } catch (const Error& e) {
        result.failed = true;
        result.error = e.what();
    }

    for (auto& v : result.variants) {
        if (v.rep_f1.empty()) continue;
        if (v.rep_f1.size() >= 2) {
            const auto ci = confidence_interval_95(v.rep_f1);
            v.mean_f1 = ci.mean;
            v.ci_half_width = ci.half_width;
        } else {
            v.mean_f1 = v.rep_f1[0];
        }
    }
    return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const DatasetSplit& split,
                                const ExperimentSettings& settings) {
    if (settings.train.precision == Precision::f64)
        return run_experiment_impl<double>(spec, split, settings);
    return run_experiment_impl<float>(spec, split, settings);
}

std::vector<ExperimentResult> run_experiment_map(const std::vector<ExperimentSpec>& specs,
                                                 const DatasetSplit& split,
                                                 const ExperimentSettings& settings,
                                                 int64_t workers) {
    if (workers <= 0) workers = static_cast<int64_t>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = std::min<int64_t>(workers, static_cast<int64_t>(specs.size()));

    std::vector<ExperimentResult> results(specs.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= specs.size()) return;
            try {
                results[i] = run_experiment(specs[i], split, settings);
            } catch (const Error& e) {
                results[i].spec = specs[i];
                results[i].failed = true;
                results[i].error = e.what();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int64_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

}  // namespace lupi
