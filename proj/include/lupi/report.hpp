#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "lupi/experiment.hpp"

namespace lupi {

enum class ReportFormat { table_text, csv, plot_data };

ReportFormat report_format_from_string(const std::string& s);
std::string to_string(ReportFormat f);

struct ReportMeta {
    uint64_t config_hash = 0;
    std::vector<uint64_t> seeds;  // all repetition seeds, in experiment order
};

// table-text mirrors the experimentation-map layout: one row per experiment
// with mean +/- 95% CI per variant; the best of {student, PI variants} is
// marked per row (ties to 3 decimals are all marked and noted). csv emits one
// row per (experiment, variant, repetition). plot-data groups experiments by
// sample range. Every format carries a header with the config hash and seeds.
std::string render_report(std::span<const ExperimentResult> rows, ReportFormat format,
                          const ReportMeta& meta);

// Raw result round-trip for the `report` subcommand.
void write_results_json(const std::filesystem::path& path,
                        std::span<const ExperimentResult> rows, const ReportMeta& meta);
std::pair<std::vector<ExperimentResult>, ReportMeta> read_results_json(
    const std::filesystem::path& path);

}  // namespace lupi
