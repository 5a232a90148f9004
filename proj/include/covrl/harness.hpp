#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "covrl/orchestrator.hpp"
#include "covrl/stats.hpp"

namespace covrl {

enum class Variant : uint8_t { Single, Multi };

std::string to_string(Variant v);

// Flat key=value overrides loaded from --config files; CLI flags win over
// file values, file values win over size-class defaults.
struct ParamOverrides {
    std::map<std::string, std::string> values;

    static ParamOverrides from_file(const std::filesystem::path& path);
    static ParamOverrides from_text(const std::string& text);
    void apply(RunConfig& config) const;  // throws on unknown keys or bad values
};

struct ExperimentConfig {
    std::vector<std::filesystem::path> level_paths;
    std::vector<Variant> variants{Variant::Multi, Variant::Single};
    int repetitions = 10;
    uint64_t base_seed = 1;  // repetition r runs with base_seed + r
    int jobs = 1;
    std::filesystem::path out_dir = "out";
    ParamOverrides overrides;
};

struct RunRow {
    std::string level;
    Variant variant = Variant::Multi;
    int rep = 0;
    uint64_t seed = 0;
    double entity_pct = 0.0;
    double connection_pct = 0.0;
    double spatial_pct = 0.0;
    int episodes_used = 0;
    uint64_t ticks_total = 0;
    uint64_t wall_ms = 0;
    double mean_ticks_per_action = 0.0;
};

inline constexpr const char* kRunsCsvHeader =
    "level,variant,rep,seed,entity_pct,connection_pct,spatial_pct,episodes_used,"
    "ticks_total,wall_ms,mean_ticks_per_action";

std::string format_run_row(const RunRow& row);
RunRow parse_run_row(const std::string& line, int line_number);

struct GenerateOptions {
    SizeClass size_class = SizeClass::Small;
    int count = 5;
    uint64_t seed = 1;
    std::filesystem::path out_dir = ".";
};

// Writes <class>_<i>.level files and returns their paths.
std::vector<std::filesystem::path> cmd_generate(const GenerateOptions& options);

// Runs every level x variant x repetition session, lays results out under
// out/<level>/<variant>/<rep>/, and writes out/runs.csv.
std::filesystem::path cmd_run(const ExperimentConfig& config);

struct ReportCell {
    std::string level;
    std::string metric;  // entity_pct | connection_pct | ticks_total
    std::optional<double> mean_multi;
    std::optional<double> mean_single;
    std::optional<double> p_value;
    std::optional<double> a_hat;  // A(multi, single)
    std::string magnitude;        // "NA" when either variant is missing
};

struct Report {
    std::vector<ReportCell> cells;
    std::string text_table;
    std::string csv;
};

Report cmd_report(const std::filesystem::path& results_dir);

}  // namespace covrl
