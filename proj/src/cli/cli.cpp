#include "lupi/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lupi/archive.hpp"
#include "lupi/image_io.hpp"
#include "lupi/report.hpp"
#include "lupi/rng.hpp"
#include "lupi/run_config.hpp"
#include "lupi/synth.hpp"

namespace lupi::cli {
namespace {

using nlohmann::json;

std::string timestamp_string() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&t));
    return buf;
}

// Every command logs its resolved option set and the hash of that set; run
// directories default to <hash>-<timestamp>.
uint64_t log_resolved_config(const std::string& command, const json& resolved) {
    const std::string dump = resolved.dump();
    const uint64_t hash = fnv1a64(dump);
    std::cerr << command << " config_hash=" << hex64(hash) << " config=" << dump << "\n";
    return hash;
}

std::filesystem::path resolve_out_dir(const std::string& requested, uint64_t config_hash) {
    if (!requested.empty()) return requested;
    return std::filesystem::path("runs") / (hex64(config_hash).substr(0, 12) + "-" +
                                            timestamp_string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

}  // namespace

struct Options {
    struct Synth {
        std::string out;
        int64_t image_size = 256;
        int64_t patients = 4;
        int64_t images_per_patient = 1;
        int64_t tumor_min = 1, tumor_max = 3;
        int64_t axis_min = 12, axis_max = 24;
        std::string texture = "flat";
        double contrast_gap = 0.3;
        uint64_t seed = 0;
    } synth;

    struct Extract {
        std::string scenes;
        std::string out;
        int64_t train_patients = 0;
        int64_t h_ppi = 40, nh_ppi = 40;
        double mar = 0.01, bar = 0.8;
        int64_t patch_size = 1024;
        int64_t max_attempts = 200;
        double background_threshold = 0.02;
        uint64_t seed = 0;
    } extract;

    struct Enhance {
        std::string archive;
        std::string out;
    } enhance;

    struct Train {
        std::string mode;  // teacher | student | pi
        std::string archive;
        std::string val_archive;
        std::string teacher_checkpoint;
        std::string out;
        double alpha = 0.6;
        int64_t base_width = 16;
        int64_t epochs = 1;
        int64_t batch_size = 8;
        double learning_rate = 1e-3;
        std::string optimizer = "adam";
        uint64_t seed = 0;
        std::string precision = "f32";
        int64_t max_steps = 0;
    } train;

    struct Evaluate {
        std::string checkpoint;
        std::string archive;
        std::string aggregation = "micro";
        std::string out;
        int64_t batch_size = 8;
    } evaluate;

    struct RunMap {
        std::string config;
        std::string out;
        int64_t workers = -1;  // -1 = take from config
        bool has_seed = false;
        uint64_t seed = 0;
    } run_map;

    struct Report {
        std::string results;
        std::string format = "table-text";
        std::string out;
    } report;

    CLI::App* chosen = nullptr;
};

namespace {

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

void cmd_synth(const Options::Synth& o) {
    SyntheticSceneSpec spec;
    spec.image_size = o.image_size;
    spec.patient_count = o.patients;
    spec.images_per_patient = o.images_per_patient;
    spec.tumor_count_range = {o.tumor_min, o.tumor_max};
    spec.tumor_axis_range = {o.axis_min, o.axis_max};
    spec.background_texture = texture_from_string(o.texture);
    spec.contrast_gap = o.contrast_gap;
    spec.seed = o.seed;
    spec.validate();

    const json resolved{{"command", "synth"},
                        {"out", o.out},
                        {"image_size", o.image_size},
                        {"patients", o.patients},
                        {"images_per_patient", o.images_per_patient},
                        {"tumor_count", json::array({o.tumor_min, o.tumor_max})},
                        {"tumor_axes", json::array({o.axis_min, o.axis_max})},
                        {"texture", o.texture},
                        {"contrast_gap", o.contrast_gap},
                        {"seed", o.seed}};
    log_resolved_config("synth", resolved);

    const auto scenes = generate_scene(spec);
    const std::filesystem::path dir = o.out;
    std::filesystem::create_directories(dir / "images");
    std::filesystem::create_directories(dir / "masks");

    json entries = json::array();
    for (const auto& s : scenes) {
        const std::string image_rel = "images/" + s.image_id + ".png";
        const std::string mask_rel = "masks/" + s.image_id + ".png";
        save_gray_image(s.image, dir / image_rel);
        save_mask_image(s.mask, dir / mask_rel);
        entries.push_back(json{{"patient_id", s.patient_id},
                               {"image_id", s.image_id},
                               {"image", image_rel},
                               {"mask", mask_rel}});
    }
    json manifest{{"format", "lupiseg-scenes-v1"},
                  {"seed", o.seed},
                  {"image_size", o.image_size},
                  {"images", entries}};
    write_text_file(dir / "scenes.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << scenes.size() << " scene image(s) to " << dir.string() << "\n";
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

void cmd_extract(const Options::Extract& o) {
    ExtractionParams params;
    params.h_ppi = o.h_ppi;
    params.nh_ppi = o.nh_ppi;
    params.mar = o.mar;
    params.bar = o.bar;
    params.patch_size = o.patch_size;
    params.max_attempts_per_patch = o.max_attempts;
    params.background_threshold = o.background_threshold;
    params.validate();
    if (o.train_patients < 1) throw ArgumentError("extract: --train-patients must be >= 1");

    const json resolved{{"command", "extract"},       {"scenes", o.scenes},
                        {"out", o.out},               {"train_patients", o.train_patients},
                        {"h_ppi", o.h_ppi},           {"nh_ppi", o.nh_ppi},
                        {"mar", o.mar},               {"bar", o.bar},
                        {"patch_size", o.patch_size}, {"max_attempts", o.max_attempts},
                        {"background_threshold", o.background_threshold},
                        {"seed", o.seed}};
    log_resolved_config("extract", resolved);

    const std::filesystem::path scenes_dir = o.scenes;
    std::ifstream in(scenes_dir / "scenes.json");
    if (!in) throw IoError("cannot open " + (scenes_dir / "scenes.json").string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("scenes.json: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "lupiseg-scenes-v1")
        throw FormatError("scenes.json: unexpected format");

    std::vector<PatchRecord> all;
    int64_t shortfall_h = 0, shortfall_nh = 0;
    for (const auto& entry : manifest.at("images")) {
        const auto img = load_gray_image(scenes_dir / entry.at("image").get<std::string>());
        const auto mask = load_mask_image(scenes_dir / entry.at("mask").get<std::string>());
        auto result = extract_patches(img, mask, params, o.seed,
                                      entry.at("patient_id").get<std::string>(),
                                      entry.at("image_id").get<std::string>());
        shortfall_h += result.shortfall_healthy;
        shortfall_nh += result.shortfall_non_healthy;
        for (auto& p : result.patches) all.push_back(std::move(p));
    }

    auto split = build_split(std::move(all), o.train_patients, /*fold_count=*/1, o.seed);

    PatchArchive train_archive{std::move(split.train_patches), params, o.seed, shortfall_h,
                               shortfall_nh};
    PatchArchive test_archive{std::move(split.test_patches), params, o.seed, shortfall_h,
                              shortfall_nh};
    write_patch_archive(std::filesystem::path(o.out) / "train", train_archive);
    write_patch_archive(std::filesystem::path(o.out) / "test", test_archive);

    std::cout << "train=" << train_archive.patches.size()
              << " test=" << test_archive.patches.size()
              << " shortfall_healthy=" << shortfall_h
              << " shortfall_non_healthy=" << shortfall_nh << "\n";
}

// ---------------------------------------------------------------------------
// enhance
// ---------------------------------------------------------------------------

void cmd_enhance(const Options::Enhance& o) {
    log_resolved_config("enhance",
                        json{{"command", "enhance"}, {"archive", o.archive}, {"out", o.out}});
    const auto archive = read_patch_archive(o.archive);
    std::vector<EnhancedPatch> enhanced;
    enhanced.reserve(archive.patches.size());
    for (const auto& p : archive.patches) enhanced.push_back(enhance_patch(p));
    write_enhanced_archive(o.out, enhanced);
    std::cout << "wrote " << enhanced.size() << " enhanced patch(es) to " << o.out << "\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

template <class T>
void run_train_typed(const Options::Train& o, const TrainConfig& cfg,
                     const std::filesystem::path& out_dir) {
    const auto archive = read_patch_archive(o.archive);
    std::optional<PatchArchive> val_archive;
    if (!o.val_archive.empty()) val_archive = read_patch_archive(o.val_archive);

    TrainedModel<T> trained;
    if (o.mode == "teacher") {
        const auto enhanced = enhance_all(archive.patches);
        std::vector<EnhancedPatch> val;
        if (val_archive) val = enhance_all(val_archive->patches);
        trained = train_teacher<T>(enhanced, o.base_width, cfg,
                                   val_archive ? &val : nullptr);
    } else if (o.mode == "student") {
        trained = train_student<T>(archive.patches, o.base_width, cfg,
                                   val_archive ? &val_archive->patches : nullptr);
    } else if (o.mode == "pi") {
        if (o.teacher_checkpoint.empty())
            throw ArgumentError("train --mode pi requires --teacher");
        auto teacher = UNetModel<T>::load(o.teacher_checkpoint);
        const auto enhanced = enhance_all(archive.patches);
        trained = train_pi_student<T>(archive.patches, enhanced, teacher, o.base_width, cfg,
                                      val_archive ? &val_archive->patches : nullptr);
    } else {
        throw ArgumentError("train: --mode must be teacher, student, or pi");
    }

    std::filesystem::create_directories(out_dir);
    trained.model.save(out_dir / "checkpoint.lupickpt");

    json history = json::array();
    for (const auto& e : trained.history) {
        json entry{{"epoch", e.epoch}, {"train_loss", e.train_loss}};
        if (!std::isnan(e.val_f1)) entry["val_f1"] = e.val_f1;
        history.push_back(std::move(entry));
    }
    write_text_file(out_dir / "history.json", history.dump(2) + "\n");
    std::cout << "checkpoint: " << (out_dir / "checkpoint.lupickpt").string() << "\n";
}

void cmd_train(const Options::Train& o) {
    TrainConfig cfg;
    cfg.alpha = o.alpha;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch_size;
    cfg.learning_rate = o.learning_rate;
    cfg.optimizer = optimizer_from_string(o.optimizer);
    cfg.seed = o.seed;
    cfg.precision = precision_from_string(o.precision);
    cfg.max_steps = o.max_steps;
    cfg.validate();

    const json resolved{{"command", "train"},
                        {"mode", o.mode},
                        {"archive", o.archive},
                        {"val_archive", o.val_archive},
                        {"teacher", o.teacher_checkpoint},
                        {"alpha", o.alpha},
                        {"base_width", o.base_width},
                        {"epochs", o.epochs},
                        {"batch_size", o.batch_size},
                        {"learning_rate", o.learning_rate},
                        {"optimizer", o.optimizer},
                        {"seed", o.seed},
                        {"precision", o.precision},
                        {"max_steps", o.max_steps}};
    const uint64_t hash = log_resolved_config("train", resolved);
    const auto out_dir = resolve_out_dir(o.out, hash);

    if (cfg.precision == Precision::f64)
        run_train_typed<double>(o, cfg, out_dir);
    else
        run_train_typed<float>(o, cfg, out_dir);
    write_text_file(out_dir / "config.json", resolved.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

template <class T>
double evaluate_typed(const Options::Evaluate& o, F1Aggregation aggregation) {
    auto model = UNetModel<T>::load(o.checkpoint);
    const auto archive = read_patch_archive(o.archive);
    if (archive.patches.empty()) throw DataError("evaluate: empty archive");
    if (model.config.in_channels == 3) {
        const auto ds = tensorize_teacher<T>(enhance_all(archive.patches));
        return evaluate_f1(model, ds, o.batch_size, aggregation);
    }
    const auto ds = tensorize_student<T>(archive.patches);
    return evaluate_f1(model, ds, o.batch_size, aggregation);
}

void cmd_evaluate(const Options::Evaluate& o) {
    const json resolved{{"command", "evaluate"},
                        {"checkpoint", o.checkpoint},
                        {"archive", o.archive},
                        {"aggregation", o.aggregation},
                        {"batch_size", o.batch_size},
                        {"out", o.out}};
    log_resolved_config("evaluate", resolved);

    F1Aggregation aggregation;
    if (o.aggregation == "micro") aggregation = F1Aggregation::micro;
    else if (o.aggregation == "macro") aggregation = F1Aggregation::macro;
    else throw ArgumentError("evaluate: --aggregation must be micro or macro");

    const auto info = inspect_model_file(o.checkpoint);
    const double f1 = info.precision == nn::Precision::f64
                          ? evaluate_typed<double>(o, aggregation)
                          : evaluate_typed<float>(o, aggregation);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "f1=%.6f\n", f1);
    std::cout << buf;
    if (!o.out.empty())
        write_text_file(o.out, json{{"f1", f1}, {"aggregation", o.aggregation}}.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// run-map
// ---------------------------------------------------------------------------

void cmd_run_map(const Options::RunMap& o) {
    RunConfig cfg = RunConfig::from_file(o.config);
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.workers >= 0) cfg.workers = o.workers;
    if (o.has_seed) cfg.seed = o.seed;
    cfg.validate();

    const uint64_t hash = cfg.hash();
    std::cerr << "run-map config_hash=" << hex64(hash) << " config=" << cfg.canonical_json()
              << "\n";
    const auto out_dir = resolve_out_dir(cfg.out_dir, hash);
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir / "config.json", cfg.canonical_json() + "\n");

    auto train_archive = read_patch_archive(cfg.train_archive);
    auto test_archive = read_patch_archive(cfg.test_archive);
    DatasetSplit split;
    if (cfg.train_patient_count > 0) {
        std::vector<PatchRecord> all = std::move(train_archive.patches);
        for (auto& p : test_archive.patches) all.push_back(std::move(p));
        split = build_split(std::move(all), cfg.train_patient_count, cfg.fold_count, cfg.seed);
    } else {
        split = split_from_patches(std::move(train_archive.patches),
                                   std::move(test_archive.patches), cfg.fold_count);
    }

    const auto specs = cfg.experiment_specs();
    std::cerr << "run-map cells=" << specs.size() << " train=" << split.train_patches.size()
              << " test=" << split.test_patches.size() << " workers="
              << (cfg.workers > 0 ? cfg.workers : 0) << "\n";

    const auto results = run_experiment_map(specs, split, cfg.settings(), cfg.workers);

    ReportMeta meta;
    meta.config_hash = hash;
    for (const auto& spec : specs)
        meta.seeds.insert(meta.seeds.end(), spec.seeds.begin(), spec.seeds.end());

    write_results_json(out_dir / "results.json", results, meta);
    const std::string table = render_report(results, ReportFormat::table_text, meta);
    write_text_file(out_dir / "report.txt", table);
    write_text_file(out_dir / "report.csv", render_report(results, ReportFormat::csv, meta));
    write_text_file(out_dir / "plot_data.csv",
                    render_report(results, ReportFormat::plot_data, meta));
    std::cout << table;
    std::cout << "artifacts: " << out_dir.string() << "\n";

    for (const auto& r : results)
        if (r.failed) throw DataError("experiment " + r.spec.experiment_id + " failed: " + r.error);
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

void cmd_report(const Options::Report& o) {
    log_resolved_config("report", json{{"command", "report"},
                                       {"results", o.results},
                                       {"format", o.format},
                                       {"out", o.out}});
    const auto [rows, meta] = read_results_json(o.results);
    const std::string text = render_report(rows, report_format_from_string(o.format), meta);
    if (o.out.empty())
        std::cout << text;
    else
        write_text_file(o.out, text);
}

}  // namespace

std::shared_ptr<CLI::App> make_app(std::shared_ptr<Options>& options_out) {
    auto opts = std::make_shared<Options>();
    options_out = opts;
    auto app = std::make_shared<CLI::App>(
        "lupiseg - privileged-information training for tumor segmentation");
    app->require_subcommand(1);

    {
        auto* c = app->add_subcommand("synth", "Generate synthetic mammogram-like scenes");
        auto& o = opts->synth;
        c->add_option("--out", o.out, "Output scene directory")->required();
        c->add_option("--image-size", o.image_size, "Square scene side in pixels");
        c->add_option("--patients", o.patients, "Number of synthetic patients");
        c->add_option("--images-per-patient", o.images_per_patient, "Images per patient");
        c->add_option("--tumor-min", o.tumor_min, "Minimum tumors per image");
        c->add_option("--tumor-max", o.tumor_max, "Maximum tumors per image");
        c->add_option("--axis-min", o.axis_min, "Minimum tumor semi-axis in pixels");
        c->add_option("--axis-max", o.axis_max, "Maximum tumor semi-axis in pixels");
        c->add_option("--texture", o.texture, "Background texture: flat, gradient, or speckle");
        c->add_option("--contrast-gap", o.contrast_gap, "Tumor minus tissue intensity gap");
        c->add_option("--seed", o.seed, "Generator seed");
        c->callback([&o] { cmd_synth(o); });
    }
    {
        auto* c = app->add_subcommand("extract", "Extract validity-gated patches from scenes");
        auto& o = opts->extract;
        c->add_option("--scenes", o.scenes, "Scene directory (from synth or compatible)")
            ->required();
        c->add_option("--out", o.out, "Output directory (train/ and test/ archives)")->required();
        c->add_option("--train-patients", o.train_patients,
                      "Number of leading patients for the train split")
            ->required();
        c->add_option("--hppi", o.h_ppi, "Healthy patches per image");
        c->add_option("--nhppi", o.nh_ppi, "Non-healthy patches per image");
        c->add_option("--mar", o.mar, "Mass-area-ratio threshold");
        c->add_option("--bar", o.bar, "Breast-area-ratio threshold");
        c->add_option("--patch-size", o.patch_size, "Square patch side in pixels");
        c->add_option("--max-attempts", o.max_attempts, "Sampling attempts per requested patch");
        c->add_option("--background-threshold", o.background_threshold,
                      "Intensity above which a pixel counts as tissue");
        c->add_option("--seed", o.seed, "Extraction seed");
        c->callback([&o] { cmd_extract(o); });
    }
    {
        auto* c = app->add_subcommand("enhance", "Build teacher channels for a patch archive");
        auto& o = opts->enhance;
        c->add_option("--archive", o.archive, "Input patch archive directory")->required();
        c->add_option("--out", o.out, "Output enhanced-archive directory")->required();
        c->callback([&o] { cmd_enhance(o); });
    }
    {
        auto* c = app->add_subcommand("train", "Train a teacher, student, or PI student");
        auto& o = opts->train;
        c->add_option("--mode", o.mode, "teacher, student, or pi")->required();
        c->add_option("--archive", o.archive, "Training patch archive")->required();
        c->add_option("--val-archive", o.val_archive, "Validation patch archive");
        c->add_option("--teacher", o.teacher_checkpoint, "Teacher checkpoint (pi mode)");
        c->add_option("--alpha", o.alpha, "Blend weight of the ground-truth term (pi mode)");
        c->add_option("--base-width", o.base_width, "Channel width of the first block");
        c->add_option("--epochs", o.epochs, "Training epochs");
        c->add_option("--batch-size", o.batch_size, "Mini-batch size");
        c->add_option("--lr", o.learning_rate, "Learning rate");
        c->add_option("--optimizer", o.optimizer, "adam or sgd-momentum");
        c->add_option("--seed", o.seed, "Training seed");
        c->add_option("--precision", o.precision, "f32 or f64");
        c->add_option("--max-steps", o.max_steps, "Optimizer-step cap (0 = all epochs)");
        c->add_option("--out", o.out, "Run directory (default: runs/<hash>-<timestamp>)");
        c->callback([&o] { cmd_train(o); });
    }
    {
        auto* c = app->add_subcommand("evaluate", "Score a checkpoint on a patch archive");
        auto& o = opts->evaluate;
        c->add_option("--checkpoint", o.checkpoint, "Model checkpoint file")->required();
        c->add_option("--archive", o.archive, "Test patch archive")->required();
        c->add_option("--aggregation", o.aggregation, "F1 aggregation: micro or macro");
        c->add_option("--batch-size", o.batch_size, "Inference batch size");
        c->add_option("--out", o.out, "Optional metrics JSON output path");
        c->callback([&o] { cmd_evaluate(o); });
    }
    {
        auto* c = app->add_subcommand("run-map", "Run the experimentation map from a config file");
        auto& o = opts->run_map;
        c->add_option("--config", o.config, "Run configuration JSON")->required();
        c->add_option("--out", o.out, "Output directory override");
        c->add_option("--workers", o.workers, "Worker pool size override (0 = logical cores)");
        auto* seed_opt = c->add_option("--seed", o.seed, "Global seed override");
        c->callback([&o, seed_opt] {
            o.has_seed = seed_opt->count() > 0;
            cmd_run_map(o);
        });
    }
    {
        auto* c = app->add_subcommand("report", "Render reports from saved map results");
        auto& o = opts->report;
        c->add_option("--results", o.results, "results.json produced by run-map")->required();
        c->add_option("--format", o.format, "table-text, csv, or plot-data");
        c->add_option("--out", o.out, "Output file (stdout when omitted)");
        c->callback([&o] { cmd_report(o); });
    }
    return app;
}

int run(int argc, const char* const* argv) {
    std::shared_ptr<Options> opts;
    auto app = make_app(opts);
    try {
        app->parse(argc, argv);
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app->exit(e);
    } catch (const CLI::ParseError& e) {
        app->exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {  // IoError, FormatError, DataError, PairingError
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace lupi::cli
