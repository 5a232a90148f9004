#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covrl/coverage.hpp"
#include "covrl/harness.hpp"

namespace {

int run_generate(const covrl::GenerateOptions& options) {
    auto paths = covrl::cmd_generate(options);
    for (const auto& path : paths) {
        std::ifstream in(path);
        std::ostringstream buf;
        buf << in.rdbuf();
        covrl::LevelSpec spec = covrl::parse_level(buf.str());
        covrl::CoverageLedgers goals = covrl::coverable_goals(spec);
        std::printf("%s: %zu entity goals, %zu connection goals\n", path.string().c_str(),
                    goals.entity.goals.size(), goals.connection.goals.size());
    }
    return 0;
}

int run_run(const covrl::ExperimentConfig& config) {
    auto csv = covrl::cmd_run(config);
    std::printf("wrote %s\n", csv.string().c_str());
    return 0;
}

int run_report(const std::filesystem::path& results_dir) {
    covrl::Report report = covrl::cmd_report(results_dir);
    std::fputs(report.text_table.c_str(), stdout);
    std::filesystem::path csv_path =
        (std::filesystem::is_directory(results_dir) ? results_dir
                                                    : results_dir.parent_path()) /
        "report.csv";
    std::ofstream out(csv_path, std::ios::binary);
    out << report.csv;
    std::printf("wrote %s\n", csv_path.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coverage-driven RL tester for button/door grid levels"};
    app.require_subcommand(1);

    covrl::GenerateOptions gen;
    std::string gen_class = "small";
    CLI::App* generate = app.add_subcommand("generate", "Generate level files");
    generate->add_option("--class", gen_class, "small|medium|large")
        ->check(CLI::IsMember({"small", "medium", "large"}));
    generate->add_option("--count", gen.count, "number of levels");
    generate->add_option("--seed", gen.seed, "base seed");
    generate->add_option("--out", gen.out_dir, "output directory");

    covrl::ExperimentConfig exp;
    std::vector<std::string> level_paths;
    std::string variant = "both";
    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "Run the experiment matrix");
    run->add_option("--level", level_paths, "level file(s)")->required()->expected(-1);
    run->add_option("--variant", variant, "single|multi|both")
        ->check(CLI::IsMember({"single", "multi", "both"}));
    run->add_option("--reps", exp.repetitions, "repetitions per level/variant");
    run->add_option("--seed", exp.base_seed, "base seed (rep r uses seed+r)");
    run->add_option("--jobs", exp.jobs, "parallel sessions");
    run->add_option("--out", exp.out_dir, "results directory");
    run->add_option("--config", config_path, "flat key=value parameter file");

    std::string report_dir = "out";
    CLI::App* report = app.add_subcommand("report", "Summarize runs.csv into comparison tables");
    report->add_option("dir", report_dir, "results directory (or runs.csv path)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            gen.size_class = *covrl::size_class_from_string(gen_class);
            return run_generate(gen);
        }
        if (run->parsed()) {
            for (const auto& p : level_paths) exp.level_paths.emplace_back(p);
            if (variant == "single")
                exp.variants = {covrl::Variant::Single};
            else if (variant == "multi")
                exp.variants = {covrl::Variant::Multi};
            else
                exp.variants = {covrl::Variant::Multi, covrl::Variant::Single};
            if (!config_path.empty())
                exp.overrides = covrl::ParamOverrides::from_file(config_path);
            return run_run(exp);
        }
        return run_report(report_dir);
    } catch (const covrl::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 2;
    }
}
