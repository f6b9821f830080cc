// Acceptance suite: one check per release criterion, each printing a
// [PASS]/[FAIL] line with its wall time. Run `acceptance all` or a single
// criterion number. Exits nonzero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "lupi/archive.hpp"
#include "lupi/losses.hpp"
#include "lupi/nn/grad_check.hpp"
#include "lupi/report.hpp"
#include "lupi/rng.hpp"
#include "lupi/run_config.hpp"
#include "lupi/synth.hpp"

using namespace lupi;
using namespace lupi::nn;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            detail = msg;
        }
    }
    void note(const std::string& msg) {
        if (!detail.empty()) detail += "; ";
        detail += msg;
    }
};

std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("lupiseg-accept-" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

NodePtr<double> randn_node(Shape shape, Rng& rng, bool requires_grad, double scale = 1.0) {
    auto node = make_node<double>(std::move(shape), requires_grad);
    for (auto& v : node->value) v = rng.gaussian() * scale;
    return node;
}

NodePtr<double> random_soft_target(Shape shape, Rng& rng) {
    auto node = make_node<double>(shape);
    const int64_t nb = shape[0], hw = shape[2] * shape[3];
    for (int64_t b = 0; b < nb; ++b)
        for (int64_t i = 0; i < hw; ++i) {
            const double p = rng.uniform(0.05, 0.95);
            node->value[static_cast<size_t>(b * 2 * hw + i)] = p;
            node->value[static_cast<size_t>((b * 2 + 1) * hw + i)] = 1.0 - p;
        }
    return node;
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness: per-op checks < 1e-4 and the full model+loss
//    composition < 1e-3, central differences at 64-bit, 25 trials each.
// ---------------------------------------------------------------------------
Check criterion_1() {
    Check c;
    Rng rng(1001);

    double worst_ops = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        {  // conv2d -> softmax -> cross_entropy
            auto in = randn_node({1, 2, 5, 5}, rng, true);
            auto w = randn_node({2, 2, 3, 3}, rng, true, 0.5);
            auto b = randn_node({2}, rng, true, 0.1);
            auto target = random_soft_target({1, 2, 5, 5}, rng);
            auto fn = [&](Tape<double>* tape) {
                auto probs = softmax_channels(tape, conv2d(tape, in, w, b, 1));
                return cross_entropy(tape, probs, target);
            };
            worst_ops = std::max(worst_ops,
                                 grad_check(fn, std::vector<NodePtr<double>>{in, w, b}));
        }
        {  // transposed_conv2d + concat + relu
            auto x = randn_node({1, 2, 2, 2}, rng, true);
            auto w = randn_node({2, 1, 2, 2}, rng, true, 0.5);
            auto b = randn_node({1}, rng, true, 0.1);
            auto skip = randn_node({1, 1, 4, 4}, rng, true);
            auto target = random_soft_target({1, 2, 4, 4}, rng);
            auto fn = [&](Tape<double>* tape) {
                auto cat = concat_channels(tape, transposed_conv2d(tape, x, w, b), skip);
                auto probs = softmax_channels(tape, relu(tape, cat));
                return cross_entropy(tape, probs, target);
            };
            worst_ops = std::max(
                worst_ops, grad_check(fn, std::vector<NodePtr<double>>{x, w, b, skip}));
        }
        {  // max_pool2d with well-separated values
            auto x = make_node<double>({1, 2, 4, 4}, true);
            std::vector<int64_t> perm(x->value.size());
            for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int64_t>(i);
            rng.shuffle(perm.begin(), perm.end());
            for (size_t i = 0; i < perm.size(); ++i)
                x->value[i] = 0.05 * static_cast<double>(perm[i]);
            auto target = random_soft_target({1, 2, 2, 2}, rng);
            auto fn = [&](Tape<double>* tape) {
                auto probs = softmax_channels(tape, max_pool2d(tape, x));
                return cross_entropy(tape, probs, target);
            };
            worst_ops = std::max(worst_ops, grad_check(fn, std::vector<NodePtr<double>>{x}));
        }
    }
    c.require(worst_ops < 1e-4, "per-op gradient error " + std::to_string(worst_ops));

    double worst_bn = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        auto x = randn_node({2, 2, 3, 3}, rng, true);
        auto gamma = randn_node({2}, rng, true, 0.3);
        for (auto& v : gamma->value) v += 1.0;
        auto beta = randn_node({2}, rng, true, 0.3);
        auto target = random_soft_target({2, 2, 3, 3}, rng);
        BnStats<double> stats(2);
        auto fn = [&](Tape<double>* tape) {
            auto probs = softmax_channels(
                tape, batch_norm(tape, x, gamma, beta, stats, BnMode::train));
            return cross_entropy(tape, probs, target);
        };
        worst_bn = std::max(worst_bn,
                            grad_check(fn, std::vector<NodePtr<double>>{x, gamma, beta}));
    }
    c.require(worst_bn < 1e-3, "batch-norm composition error " + std::to_string(worst_bn));

    double worst_full = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        auto model = UNetModel<double>::init({.in_channels = 1, .base_width = 2},
                                             2000 + static_cast<uint64_t>(trial));
        auto x = randn_node({1, 1, 16, 16}, rng, true, 0.5);
        auto target = make_node<double>({1, 2, 16, 16});
        for (int64_t i = 0; i < 16 * 16; ++i) {
            const double tumor = rng.below(2) ? 1.0 : 0.0;
            target->value[static_cast<size_t>(i)] = 1.0 - tumor;
            target->value[static_cast<size_t>(16 * 16 + i)] = tumor;
        }
        auto fn = [&](Tape<double>* tape) {
            return cross_entropy(tape, model.forward(tape, x, BnMode::train), target);
        };
        std::vector<NodePtr<double>> inputs{x};
        for (auto& [name, node] : model.parameters()) inputs.push_back(node);
        worst_full = std::max(
            worst_full, grad_check(fn, inputs,
                                   {.max_coords_per_tensor = 6,
                                    .seed = 3000 + static_cast<uint64_t>(trial)}));
    }
    c.require(worst_full < 1e-3, "full-composition gradient error " + std::to_string(worst_full));

    char buf[160];
    std::snprintf(buf, sizeof(buf), "op err %.2e, bn-comp err %.2e, full-model err %.2e",
                  worst_ops, worst_bn, worst_full);
    c.note(buf);
    return c;
}

// ---------------------------------------------------------------------------
// 2. Blended-loss identities: alpha=1 equals the baseline loss to 1e-15,
//    affine in alpha to 1e-12 over 20 draws, and a full alpha=1 PI run is
//    bit-identical per step to the baseline run under equal seeds.
// ---------------------------------------------------------------------------
Check criterion_2() {
    Check c;
    Rng rng(1002);

    auto make_probs = [&rng](bool grad) {
        auto node = make_node<double>({2, 2, 4, 4}, grad);
        for (int64_t b = 0; b < 2; ++b)
            for (int64_t i = 0; i < 16; ++i) {
                const double p = rng.uniform(0.05, 0.95);
                node->value[static_cast<size_t>(b * 32 + i)] = p;
                node->value[static_cast<size_t>(b * 32 + 16 + i)] = 1.0 - p;
            }
        return node;
    };
    for (int trial = 0; trial < 10; ++trial) {
        auto s = make_probs(false);
        auto t = make_probs(false);
        auto y = random_soft_target({2, 2, 4, 4}, rng);
        const double base = student_loss<double>(nullptr, s, y)->value[0];
        const double at1 = pi_loss<double>(nullptr, s, t, y, 1.0)->value[0];
        c.require(std::abs(at1 - base) <= 1e-15, "alpha=1 identity violated");

        const double at0 = pi_loss<double>(nullptr, s, t, y, 0.0)->value[0];
        for (int k = 0; k < 20; ++k) {
            const double alpha = rng.uniform();
            const double got = pi_loss<double>(nullptr, s, t, y, alpha)->value[0];
            c.require(std::abs(got - (alpha * at1 + (1.0 - alpha) * at0)) < 1e-12,
                      "affine-in-alpha identity violated");
        }
    }

    // Full training-run equivalence at alpha = 1.
    SyntheticSceneSpec spec;
    spec.image_size = 96;
    spec.patient_count = 3;
    spec.tumor_axis_range = {6, 10};
    spec.seed = 1003;
    ExtractionParams params;
    params.h_ppi = 6;
    params.nh_ppi = 6;
    params.patch_size = 24;
    std::vector<PatchRecord> patches;
    for (const auto& scene : generate_scene(spec)) {
        auto r = extract_patches(scene.image, scene.mask, params, 4, scene.patient_id,
                                 scene.image_id);
        for (auto& p : r.patches) patches.push_back(std::move(p));
    }
    const auto enhanced = enhance_all(patches);

    TrainConfig tcfg;
    tcfg.epochs = 1;
    tcfg.batch_size = 4;
    tcfg.seed = 91;
    tcfg.max_steps = 6;
    tcfg.quiet = true;
    auto teacher = train_teacher<float>(enhanced, 4, tcfg);

    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    cfg.seed = 92;
    cfg.max_steps = 15;
    cfg.quiet = true;
    std::vector<uint64_t> traj_base, traj_pi;
    auto base_run = train_student<float>(
        patches, 4, cfg, nullptr,
        [&traj_base](int64_t, const UNetModel<float>& m) {
            traj_base.push_back(m.parameter_hash());
        });
    cfg.alpha = 1.0;
    auto pi_run = train_pi_student<float>(
        patches, enhanced, teacher.model, 4, cfg, nullptr,
        [&traj_pi](int64_t, const UNetModel<float>& m) {
            traj_pi.push_back(m.parameter_hash());
        });
    c.require(traj_base.size() == traj_pi.size() && traj_base == traj_pi,
              "alpha=1 trajectory differs from the baseline run");
    c.require(base_run.model.parameter_hash() == pi_run.model.parameter_hash(),
              "final alpha=1 checkpoint differs from the baseline");
    c.note("identities hold; " + std::to_string(traj_base.size()) +
           " steps bit-identical at alpha=1");
    return c;
}

// ---------------------------------------------------------------------------
// 3. Pipeline invariants over 1000+ extracted patches.
// ---------------------------------------------------------------------------
Check criterion_3() {
    Check c;
    const auto dir = scratch_dir("c3");

    SyntheticSceneSpec spec;
    spec.image_size = 256;
    spec.patient_count = 13;
    spec.tumor_axis_range = {12, 20};
    spec.seed = 1004;
    ExtractionParams params;
    params.patch_size = 64;  // Table-2 counts, patch scaled to the scene size

    const auto scenes = generate_scene(spec);
    std::vector<PatchRecord> all;
    for (const auto& scene : scenes) {
        auto r = extract_patches(scene.image, scene.mask, params, 5, scene.patient_id,
                                 scene.image_id);
        for (auto& p : r.patches) all.push_back(std::move(p));
    }
    c.require(all.size() >= 1000, "expected at least 1000 patches, got " +
                                      std::to_string(all.size()));

    int64_t healthy = 0;
    for (const auto& p : all) {
        const double mar = mass_area_ratio(p.mask);
        const double bar = breast_area_ratio(p.image, params.background_threshold);
        c.require(bar >= params.bar, "bar gate violated on recomputation");
        if (p.class_tag == ClassTag::healthy) {
            ++healthy;
            c.require(mar == 0.0, "healthy patch contains tumor pixels");
        } else {
            c.require(mar >= params.mar, "mar gate violated on recomputation");
        }
    }

    const auto split = build_split(all, 10, 4, 5);
    std::set<std::string> train_ids, test_ids;
    for (const auto& p : split.train_patches) train_ids.insert(p.patient_id);
    for (const auto& p : split.test_patches) test_ids.insert(p.patient_id);
    for (const auto& id : train_ids)
        c.require(!test_ids.count(id), "patient overlap between train and test");

    // Byte-equal reruns of the full extraction + archive path.
    for (int round = 0; round < 2; ++round) {
        std::vector<PatchRecord> patches;
        int64_t sh = 0, snh = 0;
        for (const auto& scene : scenes) {
            auto r = extract_patches(scene.image, scene.mask, params, 5, scene.patient_id,
                                     scene.image_id);
            sh += r.shortfall_healthy;
            snh += r.shortfall_non_healthy;
            for (auto& p : r.patches) patches.push_back(std::move(p));
        }
        write_patch_archive(dir / ("round" + std::to_string(round)),
                            PatchArchive{std::move(patches), params, 5, sh, snh});
    }
    for (const auto& entry :
         std::filesystem::recursive_directory_iterator(dir / "round0")) {
        if (!entry.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(entry.path(), dir / "round0");
        c.require(read_bytes(entry.path()) == read_bytes(dir / "round1" / rel),
                  "rerun produced different bytes: " + rel.string());
    }

    c.note(std::to_string(all.size()) + " patches (" + std::to_string(healthy) +
           " healthy), gates hold, reruns byte-equal");
    std::filesystem::remove_all(dir);
    return c;
}

// ---------------------------------------------------------------------------
// 4. Metric oracles: exact confusion-count agreement and closed-form t CIs.
// ---------------------------------------------------------------------------
Check criterion_4() {
    Check c;
    Rng rng(1005);
    auto random_mask = [&rng](double fraction) {
        MaskImage m = MaskImage::zeros(16, 16);
        for (auto& v : m.labels) v = rng.uniform() < fraction ? 1 : 0;
        return m;
    };
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<MaskImage> pred{random_mask(rng.uniform(0.0, 1.0))};
        std::vector<MaskImage> truth{random_mask(rng.uniform(0.0, 1.0))};
        int64_t tp = 0, fp = 0, fn = 0;
        for (size_t i = 0; i < pred[0].labels.size(); ++i) {
            tp += pred[0].labels[i] && truth[0].labels[i];
            fp += pred[0].labels[i] && !truth[0].labels[i];
            fn += !pred[0].labels[i] && truth[0].labels[i];
        }
        const double want =
            (2 * tp + fp + fn) == 0
                ? 1.0
                : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        c.require(f1_score(pred, truth) == want, "f1 differs from the confusion oracle");
    }

    std::vector<double> two{0.5, 0.7};
    const auto ci2 = confidence_interval_95(two);
    const double s2 = std::sqrt(0.02);
    c.require(std::abs(ci2.half_width - 12.7062047362 * s2 / std::sqrt(2.0)) < 1e-6,
              "n=2 CI misses the closed-form t value");

    std::vector<double> five{0.52, 0.61, 0.58, 0.55, 0.64};
    const auto ci5 = confidence_interval_95(five);
    double mean = 0.0;
    for (double v : five) mean += v;
    mean /= 5.0;
    double ss = 0.0;
    for (double v : five) ss += (v - mean) * (v - mean);
    const double s5 = std::sqrt(ss / 4.0);
    c.require(std::abs(ci5.half_width - 2.7764451052 * s5 / std::sqrt(5.0)) < 1e-6,
              "n=5 CI misses t = 2.7764");
    c.note("1000 exact f1 agreements; t quantiles match to 1e-6");
    return c;
}

// ---------------------------------------------------------------------------
// 5. Desk-scale learning smoke: teacher and student reach held-out F1 >= 0.85
//    within 200 optimizer steps on 64x64 patches at base width 16.
// ---------------------------------------------------------------------------
Check criterion_5() {
    Check c;
    SyntheticSceneSpec spec;
    spec.image_size = 256;
    spec.patient_count = 10;
    spec.tumor_axis_range = {12, 22};
    spec.seed = 50;
    ExtractionParams params;
    params.h_ppi = 8;
    params.nh_ppi = 8;
    params.patch_size = 64;

    std::vector<PatchRecord> train, test;
    for (const auto& scene : generate_scene(spec)) {
        auto r = extract_patches(scene.image, scene.mask, params, 50, scene.patient_id,
                                 scene.image_id);
        auto& sink =
            (scene.patient_id == "pt008" || scene.patient_id == "pt009") ? test : train;
        for (auto& p : r.patches) sink.push_back(std::move(p));
    }
    const auto train_enhanced = enhance_all(train);
    const auto test_enhanced = enhance_all(test);

    TrainConfig cfg;
    cfg.epochs = 14;
    cfg.batch_size = 8;
    cfg.learning_rate = 1e-3;
    cfg.seed = 1;
    cfg.max_steps = 200;
    cfg.quiet = true;

    auto student = train_student<float>(train, 16, cfg);
    auto student_test = tensorize_student<float>(test);
    const double student_f1 = evaluate_f1(student.model, student_test, cfg.batch_size);
    c.require(student_f1 >= 0.85,
              "student held-out F1 " + std::to_string(student_f1) + " < 0.85");

    auto teacher = train_teacher<float>(train_enhanced, 16, cfg);
    auto teacher_test = tensorize_teacher<float>(test_enhanced);
    const double teacher_f1 = evaluate_f1(teacher.model, teacher_test, cfg.batch_size);
    c.require(teacher_f1 >= 0.85,
              "teacher held-out F1 " + std::to_string(teacher_f1) + " < 0.85");

    char buf[96];
    std::snprintf(buf, sizeof(buf), "student F1 %.3f, teacher F1 %.3f after <=200 steps",
                  student_f1, teacher_f1);
    c.note(buf);
    return c;
}

// ---------------------------------------------------------------------------
// 6. Miniature experimentation map end-to-end on synthetic data.
// ---------------------------------------------------------------------------
Check criterion_6() {
    Check c;
    const auto dir = scratch_dir("c6");

    SyntheticSceneSpec spec;
    spec.image_size = 128;
    spec.patient_count = 12;
    spec.images_per_patient = 1;
    spec.tumor_axis_range = {8, 14};
    spec.seed = 60;
    ExtractionParams params;
    params.h_ppi = 10;
    params.nh_ppi = 10;
    params.patch_size = 32;

    std::vector<PatchRecord> patches;
    for (const auto& scene : generate_scene(spec)) {
        auto r = extract_patches(scene.image, scene.mask, params, 60, scene.patient_id,
                                 scene.image_id);
        for (auto& p : r.patches) patches.push_back(std::move(p));
    }
    auto split = build_split(std::move(patches), 10, 2, 60);
    write_patch_archive(dir / "train", PatchArchive{split.train_patches, params, 60, 0, 0});
    write_patch_archive(dir / "test", PatchArchive{split.test_patches, params, 60, 0, 0});

    const std::string config_text = R"({
        "seed": 61,
        "paths": {"train_archive": ")" + (dir / "train").string() + R"(",
                   "test_archive": ")" + (dir / "test").string() + R"("},
        "model": {"base_width": 8},
        "training": {"epochs": 2, "batch_size": 8, "max_steps": 24, "learning_rate": 0.002},
        "map": {"training_folds": [1, 2], "sample_ranges": [[1, 60], [1, 100]],
                 "alphas": [0.8, 0.6, 0.4], "repetitions": 3, "cv_folds": 2,
                 "fold_count": 2}
    })";
    const auto cfg = RunConfig::from_json_text(config_text, "criterion6");
    auto specs = cfg.experiment_specs();
    c.require(specs.size() == 4, "expected 4 experiment cells");

    auto train_archive = read_patch_archive(dir / "train");
    auto test_archive = read_patch_archive(dir / "test");
    auto run_split = split_from_patches(std::move(train_archive.patches),
                                        std::move(test_archive.patches), cfg.fold_count);
    auto settings = cfg.settings();
    settings.train.quiet = true;
    const auto results = run_experiment_map(specs, run_split, settings, 1);

    for (const auto& row : results) {
        c.require(!row.failed, "cell " + row.spec.experiment_id + " failed: " + row.error);
        c.require(row.variants.size() == 5, "expected 5 variants per row");
        for (const auto& v : row.variants) {
            c.require(v.rep_f1.size() == 3, "expected 3 repetitions");
            c.require(!std::isnan(v.ci_half_width), "missing CI at 3 repetitions");
        }
    }

    ReportMeta meta{cfg.hash(), {}};
    for (const auto& s : specs) meta.seeds.insert(meta.seeds.end(), s.seeds.begin(), s.seeds.end());
    const auto table = render_report(results, ReportFormat::table_text, meta);
    std::ofstream(dir / "report.txt") << table;
    c.require(table.find("config_hash=") != std::string::npos, "report lacks the config hash");
    c.require(table.find("teacher") != std::string::npos &&
                  table.find("pi_a0.6") != std::string::npos,
              "report lacks variant columns");
    c.require(table.find("+/-") != std::string::npos, "report lacks CIs");
    c.require(table.find("*") != std::string::npos, "report lacks best-markers");
    std::istringstream lines(table);
    std::string line;
    int data_rows = 0;
    while (std::getline(lines, line))
        if (line.size() > 1 && line[0] == 'E' && std::isdigit(line[1])) ++data_rows;
    c.require(data_rows == 4, "expected 4 data rows in the table");

    c.note("4-cell map completed; table with CIs and best-markers rendered");
    std::filesystem::remove_all(dir);
    return c;
}

// ---------------------------------------------------------------------------
// 7. Full 16-cell map on a user-supplied stub archive, structure unchanged.
//    Absolute F1 levels from full-scale mammogram training are out of scope
//    and are deliberately not asserted here; this exercises the ingestion
//    interface and the complete map mechanics.
// ---------------------------------------------------------------------------
Check criterion_7() {
    Check c;
    const auto dir = scratch_dir("c7");
    Rng rng(1007);

    // Stub archive in the published split geometry: 88 train patients owning
    // 4500 patches (4 folds of 1125, ranges up to 1-1000), 20 test patients.
    auto make_patch = [&rng](const std::string& pid, const std::string& img_id, int64_t idx) {
        PatchRecord p;
        const int size = 16;
        p.image = GrayImage::filled(size, size, 0.0, 16);
        for (auto& v : p.image.data) v = 0.35 + rng.uniform(-0.05, 0.05);
        p.mask = MaskImage::zeros(size, size);
        p.patient_id = pid;
        p.source_image_id = img_id;
        p.origin_x = idx;
        p.class_tag = idx % 2 ? ClassTag::non_healthy : ClassTag::healthy;
        if (p.class_tag == ClassTag::non_healthy) {
            const int cx = 4 + static_cast<int>(rng.below(8));
            const int cy = 4 + static_cast<int>(rng.below(8));
            for (int y = cy - 2; y <= cy + 2; ++y)
                for (int x = cx - 2; x <= cx + 2; ++x) {
                    p.image.at(x, y) = std::min(1.0, p.image.at(x, y) + 0.4);
                    p.mask.at(x, y) = 1;
                }
        }
        return p;
    };

    std::vector<PatchRecord> train, test;
    for (int pt = 0; pt < 88; ++pt) {
        const std::string pid = "inb" + std::to_string(pt);
        const int64_t count = 51 + (pt < 12 ? 1 : 0);  // 88 patients -> 4500
        for (int64_t i = 0; i < count; ++i)
            train.push_back(make_patch(pid, pid + "_img", i));
    }
    for (int pt = 0; pt < 20; ++pt) {
        const std::string pid = "inb-test" + std::to_string(pt);
        for (int64_t i = 0; i < 10; ++i) test.push_back(make_patch(pid, pid + "_img", i));
    }
    c.require(train.size() == 4500, "stub train archive must hold 4500 patches");

    ExtractionParams params;
    params.patch_size = 16;
    write_patch_archive(dir / "train", PatchArchive{std::move(train), params, 7, 0, 0});
    write_patch_archive(dir / "test", PatchArchive{std::move(test), params, 7, 0, 0});

    // The paper-shaped map: 4 folds x 4 ranges, alphas {0.8, 0.6, 0.4},
    // 5 repetitions, 5-fold CV. Only the per-run step budget is desk-scale.
    const std::string config_text = R"({
        "seed": 70,
        "paths": {"train_archive": ")" + (dir / "train").string() + R"(",
                   "test_archive": ")" + (dir / "test").string() + R"("},
        "model": {"base_width": 2},
        "training": {"epochs": 1, "batch_size": 64, "max_steps": 1},
        "map": {"training_folds": [1, 2, 3, 4],
                 "sample_ranges": [[1, 400], [1, 600], [1, 800], [1, 1000]],
                 "alphas": [0.8, 0.6, 0.4], "repetitions": 5, "cv_folds": 5,
                 "fold_count": 4}
    })";
    const auto cfg = RunConfig::from_json_text(config_text, "criterion7");
    const auto specs = cfg.experiment_specs();
    c.require(specs.size() == 16, "expected the full 16-cell map");

    auto train_archive = read_patch_archive(dir / "train");
    auto test_archive = read_patch_archive(dir / "test");
    c.require(train_archive.patches.size() == 4500, "archive ingestion lost patches");
    auto split = split_from_patches(std::move(train_archive.patches),
                                    std::move(test_archive.patches), cfg.fold_count);
    for (const auto& [b, e] : split.folds)
        c.require(e - b == 1125, "expected folds of 1125");

    auto settings = cfg.settings();
    settings.train.quiet = true;
    const auto results = run_experiment_map(specs, split, settings, 1);
    c.require(results.size() == 16, "expected 16 result rows");
    for (const auto& row : results) {
        c.require(!row.failed, "cell " + row.spec.experiment_id + " failed: " + row.error);
        c.require(row.variants.size() == 5, "expected 5 variants per cell");
        for (const auto& v : row.variants)
            c.require(v.rep_f1.size() == 5, "expected 5 repetitions per variant");
    }

    ReportMeta meta{cfg.hash(), {}};
    const auto table = render_report(results, ReportFormat::table_text, meta);
    std::istringstream lines(table);
    std::string line;
    int rows = 0;
    while (std::getline(lines, line))
        if (line.size() > 1 && line[0] == 'E' && std::isdigit(line[1])) ++rows;
    c.require(rows == 16, "expected 16 table rows");

    c.note("16-cell map (5 reps x 5-fold CV) ran unchanged on the stub archive; "
           "absolute published F1 values are not asserted (licensed data, full-scale "
           "training)");
    std::filesystem::remove_all(dir);
    return c;
}

// ---------------------------------------------------------------------------
// 8. Teacher-channel integrity: bit-identical channel 0, filter channels
//    matching independent oracles to 1e-12, and strictly 1-channel student
//    inference.
// ---------------------------------------------------------------------------
Check criterion_8() {
    Check c;
    SyntheticSceneSpec spec;
    spec.image_size = 128;
    spec.patient_count = 4;
    spec.tumor_axis_range = {8, 14};
    spec.background_texture = BackgroundTexture::speckle;
    spec.seed = 80;
    ExtractionParams params;
    params.h_ppi = 6;
    params.nh_ppi = 6;
    params.patch_size = 32;

    // Independent filter oracles.
    auto oracle_hist = [](const GrayImage& img) {
        std::vector<int64_t> hist(256, 0);
        auto bin_of = [](double v) {
            int b = static_cast<int>(v * 256);
            return b >= 256 ? 255 : b;
        };
        for (double v : img.data) hist[static_cast<size_t>(bin_of(v))]++;
        std::vector<double> cdf(256, 0.0);
        int64_t acc = 0;
        for (int b = 0; b < 256; ++b) {
            acc += hist[static_cast<size_t>(b)];
            cdf[static_cast<size_t>(b)] =
                static_cast<double>(acc) / static_cast<double>(img.pixel_count());
        }
        GrayImage out = img;
        for (double& v : out.data) v = cdf[static_cast<size_t>(bin_of(v))];
        return out;
    };
    auto oracle_stretch = [](const GrayImage& img, double p_low, double p_high) {
        std::vector<double> sorted(img.data);
        std::sort(sorted.begin(), sorted.end());
        auto q = [&sorted](double p) {
            const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
            const auto lo = static_cast<size_t>(pos);
            const size_t hi = std::min(lo + 1, sorted.size() - 1);
            return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
        };
        const double lo = q(p_low), hi = q(p_high);
        GrayImage out = img;
        if (!(hi > lo)) {
            std::fill(out.data.begin(), out.data.end(), 0.0);
            return out;
        }
        for (double& v : out.data) v = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
        return out;
    };

    int64_t checked = 0;
    for (const auto& scene : generate_scene(spec)) {
        auto r = extract_patches(scene.image, scene.mask, params, 80, scene.patient_id,
                                 scene.image_id);
        for (const auto& p : r.patches) {
            const auto enhanced = enhance_patch(p);
            c.require(enhanced.channels[0] == p.image, "channel 0 not bit-identical");
            const auto h = oracle_hist(p.image);
            const auto s = oracle_stretch(p.image, 2.0, 98.0);
            for (size_t i = 0; i < h.data.size(); ++i) {
                c.require(std::abs(enhanced.channels[1].data[i] - h.data[i]) < 1e-12,
                          "histogram channel deviates from the oracle");
                c.require(std::abs(enhanced.channels[2].data[i] - s.data[i]) < 1e-12,
                          "contrast channel deviates from the oracle");
            }
            ++checked;
        }
    }
    c.require(checked >= 40, "expected at least 40 checked patches");

    // Privileged information is train-time only: 1-channel inference rejects
    // the 3-channel enhanced input.
    auto student = UNetModel<float>::init({.in_channels = 1, .base_width = 4}, 81);
    auto x3 = make_node<float>({1, 3, 32, 32});
    bool rejected = false;
    try {
        student.forward(nullptr, x3, BnMode::eval);
    } catch (const ArgumentError&) {
        rejected = true;
    }
    c.require(rejected, "student inference accepted 3-channel input");
    c.note(std::to_string(checked) + " enhanced patches verified; 3-channel input rejected");
    return c;
}

using CriterionFn = Check (*)();
struct Criterion {
    int id;
    const char* title;
    CriterionFn fn;
    double budget_seconds;
};

const Criterion kCriteria[] = {
    {1, "gradient correctness (ops < 1e-4, full model < 1e-3, 25 trials)", criterion_1, 120},
    {2, "blended-loss identities and alpha=1 bit-equality", criterion_2, 120},
    {3, "extraction pipeline invariants on 1000+ patches", criterion_3, 120},
    {4, "metric oracles (exact f1, closed-form t CIs)", criterion_4, 120},
    {5, "desk-scale learning smoke (held-out F1 >= 0.85, <= 200 steps)", criterion_5, 600},
    {6, "miniature experimentation map end-to-end", criterion_6, 3600},
    {7, "full 16-cell map on a user-supplied stub archive", criterion_7, 3600},
    {8, "teacher-channel integrity and 1-channel inference", criterion_8, 120},
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1 && std::strcmp(argv[1], "all") != 0) only = std::atoi(argv[1]);

    bool all_ok = true;
    for (const auto& criterion : kCriteria) {
        if (only != 0 && criterion.id != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Check result;
        try {
            result = criterion.fn();
        } catch (const std::exception& e) {
            result.ok = false;
            result.detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed > criterion.budget_seconds) {
            result.ok = false;
            result.detail += " (exceeded time budget)";
        }
        std::printf("[%s] criterion %d: %s — %s (%.1fs)\n", result.ok ? "PASS" : "FAIL",
                    criterion.id, criterion.title, result.detail.c_str(), elapsed);
        std::fflush(stdout);
        all_ok &= result.ok;
    }
    return all_ok ? 0 : 1;
}
