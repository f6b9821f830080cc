#include "lupi/run_config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "lupi/rng.hpp"

namespace lupi {
namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& prefix) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.count(key))
            throw ConfigError(prefix.empty() ? key : prefix + "." + key, "unknown key");
    }
}

template <class V>
V get_or(const json& obj, const std::string& key, const V& fallback, const std::string& prefix) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<V>();
    } catch (const json::exception& e) {
        throw ConfigError(prefix.empty() ? key : prefix + "." + key, e.what());
    }
}

}  // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text, path.string());
}

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(origin, std::string("JSON parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError(origin, "top level must be an object");
    reject_unknown_keys(doc, {"seed", "paths", "model", "training", "map"}, "");

    RunConfig cfg;
    cfg.seed = get_or<uint64_t>(doc, "seed", cfg.seed, "");

    if (doc.contains("paths")) {
        const auto& p = doc.at("paths");
        reject_unknown_keys(p, {"train_archive", "test_archive", "out_dir"}, "paths");
        cfg.train_archive = get_or<std::string>(p, "train_archive", "", "paths");
        cfg.test_archive = get_or<std::string>(p, "test_archive", "", "paths");
        cfg.out_dir = get_or<std::string>(p, "out_dir", "", "paths");
    }

    if (doc.contains("model")) {
        const auto& m = doc.at("model");
        reject_unknown_keys(m, {"base_width"}, "model");
        cfg.base_width = get_or<int64_t>(m, "base_width", cfg.base_width, "model");
    }

    if (doc.contains("training")) {
        const auto& t = doc.at("training");
        reject_unknown_keys(t,
                            {"optimizer", "learning_rate", "batch_size", "epochs", "max_steps",
                             "precision"},
                            "training");
        cfg.train.optimizer = optimizer_from_string(
            get_or<std::string>(t, "optimizer", to_string(cfg.train.optimizer), "training"));
        cfg.train.learning_rate =
            get_or<double>(t, "learning_rate", cfg.train.learning_rate, "training");
        cfg.train.batch_size = get_or<int64_t>(t, "batch_size", cfg.train.batch_size, "training");
        cfg.train.epochs = get_or<int64_t>(t, "epochs", cfg.train.epochs, "training");
        cfg.train.max_steps = get_or<int64_t>(t, "max_steps", cfg.train.max_steps, "training");
        cfg.train.precision = precision_from_string(
            get_or<std::string>(t, "precision", to_string(cfg.train.precision), "training"));
    }

    if (doc.contains("map")) {
        const auto& m = doc.at("map");
        reject_unknown_keys(m,
                            {"training_folds", "sample_ranges", "alphas", "repetitions",
                             "cv_folds", "fold_count", "train_patient_count", "model_selection",
                             "f1_aggregation", "workers"},
                            "map");
        cfg.training_folds =
            get_or<std::vector<int64_t>>(m, "training_folds", cfg.training_folds, "map");
        if (m.contains("sample_ranges")) {
            cfg.sample_ranges.clear();
            for (const auto& r : m.at("sample_ranges")) {
                if (!r.is_array() || r.size() != 2)
                    throw ConfigError("map.sample_ranges", "each range must be [start, end]");
                cfg.sample_ranges.emplace_back(r.at(0).get<int64_t>(), r.at(1).get<int64_t>());
            }
        }
        cfg.alphas = get_or<std::vector<double>>(m, "alphas", cfg.alphas, "map");
        cfg.repetitions = get_or<int64_t>(m, "repetitions", cfg.repetitions, "map");
        cfg.cv_folds = get_or<int64_t>(m, "cv_folds", cfg.cv_folds, "map");
        cfg.fold_count = get_or<int64_t>(m, "fold_count", cfg.fold_count, "map");
        cfg.train_patient_count =
            get_or<int64_t>(m, "train_patient_count", cfg.train_patient_count, "map");
        cfg.selection = selection_from_string(
            get_or<std::string>(m, "model_selection", to_string(cfg.selection), "map"));
        const std::string agg =
            get_or<std::string>(m, "f1_aggregation",
                                cfg.aggregation == F1Aggregation::micro ? "micro" : "macro",
                                "map");
        if (agg == "micro") cfg.aggregation = F1Aggregation::micro;
        else if (agg == "macro") cfg.aggregation = F1Aggregation::macro;
        else throw ConfigError("map.f1_aggregation", "want micro or macro");
        cfg.workers = get_or<int64_t>(m, "workers", cfg.workers, "map");
    }

    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    if (train_archive.empty()) throw ConfigError("paths.train_archive", "required");
    if (test_archive.empty()) throw ConfigError("paths.test_archive", "required");
    if (base_width < 1) throw ConfigError("model.base_width", "must be >= 1");
    if (training_folds.empty()) throw ConfigError("map.training_folds", "must be non-empty");
    if (sample_ranges.empty()) throw ConfigError("map.sample_ranges", "must be non-empty");
    if (repetitions < 1) throw ConfigError("map.repetitions", "must be >= 1");
    if (cv_folds < 2) throw ConfigError("map.cv_folds", "must be >= 2");
    if (fold_count < 1) throw ConfigError("map.fold_count", "must be >= 1");
    if (workers < 0) throw ConfigError("map.workers", "must be >= 0");
    for (int64_t f : training_folds)
        if (f < 1 || f > fold_count)
            throw ConfigError("map.training_folds", "fold index outside 1..fold_count");
    for (double a : alphas)
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("map.alphas", "alpha outside [0,1]");
    try {
        train.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError("training", e.what());
    }
}

std::string RunConfig::canonical_json() const {
    json ranges = json::array();
    for (const auto& [a, b] : sample_ranges) ranges.push_back(json::array({a, b}));
    json doc{
        {"seed", seed},
        {"paths",
         {{"train_archive", train_archive}, {"test_archive", test_archive}, {"out_dir", out_dir}}},
        {"model", {{"base_width", base_width}}},
        {"training",
         {{"optimizer", to_string(train.optimizer)},
          {"learning_rate", train.learning_rate},
          {"batch_size", train.batch_size},
          {"epochs", train.epochs},
          {"max_steps", train.max_steps},
          {"precision", to_string(train.precision)}}},
        {"map",
         {{"training_folds", training_folds},
          {"sample_ranges", ranges},
          {"alphas", alphas},
          {"repetitions", repetitions},
          {"cv_folds", cv_folds},
          {"fold_count", fold_count},
          {"train_patient_count", train_patient_count},
          {"model_selection", to_string(selection)},
          {"f1_aggregation", aggregation == F1Aggregation::micro ? "micro" : "macro"},
          {"workers", workers}}}};
    return doc.dump(2);
}

uint64_t RunConfig::hash() const { return fnv1a64(canonical_json()); }

std::vector<ExperimentSpec> RunConfig::experiment_specs() const {
    std::vector<ExperimentSpec> specs;
    int64_t index = 0;
    for (int64_t fold : training_folds)
        for (const auto& range : sample_ranges) {
            ExperimentSpec spec;
            spec.experiment_id = "E" + std::to_string(++index);
            spec.training_fold = fold;
            spec.sample_range = range;
            spec.repetitions = repetitions;
            spec.alphas = alphas;
            spec.cv_folds = cv_folds;
            spec.resolve_seeds(seed);
            specs.push_back(std::move(spec));
        }
    return specs;
}

ExperimentSettings RunConfig::settings() const {
    ExperimentSettings s;
    s.base_width = base_width;
    s.train = train;
    s.selection = selection;
    s.aggregation = aggregation;
    return s;
}

}  // namespace lupi
