#include "lupi/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace lupi {
namespace {

using nlohmann::json;

std::string format_value(double mean, double half) {
    char buf[64];
    if (std::isnan(half))
        std::snprintf(buf, sizeof(buf), "%.3f", mean);
    else
        std::snprintf(buf, sizeof(buf), "%.3f +/- %.3f", mean, half);
    return buf;
}

std::string range_label(const ExperimentSpec& spec) {
    return std::to_string(spec.sample_range.first) + "-" + std::to_string(spec.sample_range.second);
}

std::string header_comment(const ReportMeta& meta) {
    std::ostringstream out;
    out << "# config_hash=" << hex64(meta.config_hash) << "\n# seeds=";
    for (size_t i = 0; i < meta.seeds.size(); ++i) out << (i ? "," : "") << meta.seeds[i];
    out << "\n";
    return out.str();
}

// Best among student and PI variants only (the teacher is excluded); ties at
// 3 decimals mark every tied variant.
std::vector<bool> best_markers(const ExperimentResult& row, bool& tie) {
    std::vector<bool> marked(row.variants.size(), false);
    int64_t best_milli = -1;
    for (size_t i = 0; i < row.variants.size(); ++i) {
        if (row.variants[i].variant == "teacher" || row.variants[i].rep_f1.empty()) continue;
        best_milli = std::max(best_milli,
                              static_cast<int64_t>(std::llround(row.variants[i].mean_f1 * 1000)));
    }
    int hits = 0;
    for (size_t i = 0; i < row.variants.size(); ++i) {
        if (row.variants[i].variant == "teacher" || row.variants[i].rep_f1.empty()) continue;
        if (static_cast<int64_t>(std::llround(row.variants[i].mean_f1 * 1000)) == best_milli) {
            marked[i] = true;
            ++hits;
        }
    }
    tie = hits > 1;
    return marked;
}

std::string render_table(std::span<const ExperimentResult> rows, const ReportMeta& meta) {
    std::vector<std::string> variant_names;
    for (const auto& v : rows.front().variants) variant_names.push_back(v.variant);

    std::vector<std::vector<std::string>> cells;
    cells.push_back({"Exp", "Fold", "Range", "Reps"});
    for (const auto& name : variant_names) cells.back().push_back(name);
    cells.back().push_back("Notes");

    for (const auto& row : rows) {
        bool tie = false;
        const auto marked = best_markers(row, tie);
        std::vector<std::string> line{row.spec.experiment_id,
                                      std::to_string(row.spec.training_fold), range_label(row.spec),
                                      std::to_string(row.spec.repetitions)};
        for (size_t i = 0; i < row.variants.size(); ++i) {
            const auto& v = row.variants[i];
            std::string cell = v.rep_f1.empty()
                                   ? "n/a"
                                   : format_value(v.mean_f1, v.ci_half_width);
            if (marked[i]) cell = "*" + cell + "*";
            line.push_back(cell);
        }
        std::string note;
        if (row.failed) note = "FAILED: " + row.error;
        else if (tie) note = "tie";
        line.push_back(note);
        cells.push_back(std::move(line));
    }

    std::vector<size_t> widths(cells[0].size(), 0);
    for (const auto& line : cells)
        for (size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], line[i].size());

    std::ostringstream out;
    out << header_comment(meta);
    out << "# Experimentation map (mean F1 +/- 95% CI; *best of student/PI variants*)\n";
    for (size_t r = 0; r < cells.size(); ++r) {
        for (size_t i = 0; i < cells[r].size(); ++i) {
            out << (i ? "  " : "") << cells[r][i]
                << std::string(widths[i] - cells[r][i].size(), ' ');
        }
        out << "\n";
        if (r == 0) {
            size_t total = 0;
            for (size_t wd : widths) total += wd + 2;
            out << std::string(total - 2, '-') << "\n";
        }
    }
    return out.str();
}

std::string render_csv(std::span<const ExperimentResult> rows, const ReportMeta& meta) {
    std::ostringstream out;
    out << header_comment(meta);
    out << "experiment_id,training_fold,sample_range,variant,repetition,f1\n";
    for (const auto& row : rows)
        for (const auto& v : row.variants)
            for (size_t r = 0; r < v.rep_f1.size(); ++r) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.6f", v.rep_f1[r]);
                out << row.spec.experiment_id << "," << row.spec.training_fold << ","
                    << range_label(row.spec) << "," << v.variant << "," << (r + 1) << ","
                    << buf << "\n";
            }
    return out.str();
}

std::string render_plot_data(std::span<const ExperimentResult> rows, const ReportMeta& meta) {
    // Group experiments by sample range, mirroring the by-sample-count plots.
    std::map<std::pair<int64_t, int64_t>, std::vector<const ExperimentResult*>> groups;
    for (const auto& row : rows) groups[row.spec.sample_range].push_back(&row);

    std::ostringstream out;
    out << header_comment(meta);
    out << "group,sample_range,experiment_id,variant,mean_f1,ci_half_width\n";
    int64_t group_index = 0;
    for (const auto& [range, members] : groups) {
        ++group_index;
        for (const auto* row : members)
            for (const auto& v : row->variants) {
                char mean_buf[32], ci_buf[32];
                std::snprintf(mean_buf, sizeof(mean_buf), "%.6f", v.mean_f1);
                if (std::isnan(v.ci_half_width))
                    std::snprintf(ci_buf, sizeof(ci_buf), "n/a");
                else
                    std::snprintf(ci_buf, sizeof(ci_buf), "%.6f", v.ci_half_width);
                out << group_index << "," << range.first << "-" << range.second << ","
                    << row->spec.experiment_id << "," << v.variant << "," << mean_buf << ","
                    << ci_buf << "\n";
            }
    }
    return out.str();
}

json spec_to_json(const ExperimentSpec& s) {
    return json{{"experiment_id", s.experiment_id},
                {"training_fold", s.training_fold},
                {"sample_range", json::array({s.sample_range.first, s.sample_range.second})},
                {"repetitions", s.repetitions},
                {"alphas", s.alphas},
                {"cv_folds", s.cv_folds},
                {"seeds", s.seeds}};
}

ExperimentSpec spec_from_json(const json& j) {
    ExperimentSpec s;
    s.experiment_id = j.at("experiment_id").get<std::string>();
    s.training_fold = j.at("training_fold").get<int64_t>();
    s.sample_range = {j.at("sample_range").at(0).get<int64_t>(),
                      j.at("sample_range").at(1).get<int64_t>()};
    s.repetitions = j.at("repetitions").get<int64_t>();
    s.alphas = j.at("alphas").get<std::vector<double>>();
    s.cv_folds = j.at("cv_folds").get<int64_t>();
    s.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    return s;
}

}  // namespace

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "table-text") return ReportFormat::table_text;
    if (s == "csv") return ReportFormat::csv;
    if (s == "plot-data") return ReportFormat::plot_data;
    throw ArgumentError("unknown report format '" + s + "'");
}

std::string to_string(ReportFormat f) {
    switch (f) {
        case ReportFormat::table_text: return "table-text";
        case ReportFormat::csv: return "csv";
        default: return "plot-data";
    }
}

std::string render_report(std::span<const ExperimentResult> rows, ReportFormat format,
                          const ReportMeta& meta) {
    if (rows.empty()) throw ArgumentError("render_report: no rows");
    switch (format) {
        case ReportFormat::table_text: return render_table(rows, meta);
        case ReportFormat::csv: return render_csv(rows, meta);
        default: return render_plot_data(rows, meta);
    }
}

void write_results_json(const std::filesystem::path& path,
                        std::span<const ExperimentResult> rows, const ReportMeta& meta) {
    json results = json::array();
    for (const auto& row : rows) {
        json variants = json::array();
        for (const auto& v : row.variants) {
            json jv{{"variant", v.variant}, {"rep_f1", v.rep_f1}, {"mean_f1", v.mean_f1}};
            if (!std::isnan(v.ci_half_width)) jv["ci_half_width"] = v.ci_half_width;
            variants.push_back(std::move(jv));
        }
        results.push_back(json{{"spec", spec_to_json(row.spec)},
                               {"variants", variants},
                               {"failed", row.failed},
                               {"error", row.error}});
    }
    json doc{{"format", "lupiseg-results-v1"},
             {"config_hash", hex64(meta.config_hash)},
             {"seeds", meta.seeds},
             {"results", results}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

std::pair<std::vector<ExperimentResult>, ReportMeta> read_results_json(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "lupiseg-results-v1")
        throw FormatError(path.string() + ": not a results file");

    ReportMeta meta;
    meta.config_hash = std::stoull(doc.at("config_hash").get<std::string>(), nullptr, 16);
    meta.seeds = doc.at("seeds").get<std::vector<uint64_t>>();

    std::vector<ExperimentResult> rows;
    for (const auto& jr : doc.at("results")) {
        ExperimentResult row;
        row.spec = spec_from_json(jr.at("spec"));
        row.failed = jr.at("failed").get<bool>();
        row.error = jr.at("error").get<std::string>();
        for (const auto& jv : jr.at("variants")) {
            VariantResult v;
            v.variant = jv.at("variant").get<std::string>();
            v.rep_f1 = jv.at("rep_f1").get<std::vector<double>>();
            v.mean_f1 = jv.at("mean_f1").get<double>();
            if (jv.contains("ci_half_width")) v.ci_half_width = jv.at("ci_half_width").get<double>();
            row.variants.push_back(std::move(v));
        }
        rows.push_back(std::move(row));
    }
    return {std::move(rows), std::move(meta)};
}

}  // namespace lupi
