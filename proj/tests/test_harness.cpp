#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "covrl/harness.hpp"

using namespace covrl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("covrl_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fixture(const std::string& name) {
    return fs::path(COVRL_LEVELS_DIR) / name;
}

// runs.csv with the wall_ms column blanked, for determinism comparisons.
std::string strip_wall_ms(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cols;
        std::istringstream cols_in(line);
        std::string col;
        while (std::getline(cols_in, col, ',')) cols.push_back(col);
        if (cols.size() == 11) cols[9] = "-";
        for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
        out << "\n";
    }
    return out.str();
}

ParamOverrides tiny_budget() {
    return ParamOverrides::from_text(
        "episodes = 3\n"
        "actions_per_episode = 12\n"
        "cycles_per_action = 40\n");
}

}  // namespace

TEST_CASE("param overrides parse, apply, and reject unknown keys") {
    ParamOverrides o = ParamOverrides::from_text(
        "# comment\n"
        "episodes = 7\n"
        "alpha=0.5\n"
        "death_ends_session = true\n");
    RunConfig config;
    o.apply(config);
    CHECK(config.episodes == 7);
    CHECK(config.policy.alpha == 0.5);
    CHECK(config.death_ends_session);

    CHECK_THROWS_AS(ParamOverrides::from_text("nope = 1\n").apply(config),
                    std::invalid_argument);
    CHECK_THROWS_AS(ParamOverrides::from_text("alpha = banana\n").apply(config),
                    std::invalid_argument);
    CHECK_THROWS_AS(ParamOverrides::from_text("broken line\n"), std::invalid_argument);
}

TEST_CASE("cmd_generate writes parse-valid levels deterministically") {
    TempDir dir("gen");
    GenerateOptions options;
    options.size_class = SizeClass::Small;
    options.count = 3;
    options.seed = 7;
    options.out_dir = dir.path / "a";
    auto paths = cmd_generate(options);
    REQUIRE(paths.size() == 3);
    for (const auto& p : paths) {
        LevelSpec spec = parse_level(slurp(p));
        CHECK(is_valid(validate_level(spec)));
    }

    options.out_dir = dir.path / "b";
    auto again = cmd_generate(options);
    for (size_t i = 0; i < paths.size(); ++i) CHECK(slurp(paths[i]) == slurp(again[i]));

    SUBCASE("count 0 writes nothing and succeeds") {
        options.out_dir = dir.path / "zero";
        options.count = 0;
        CHECK(cmd_generate(options).empty());
    }
}

TEST_CASE("cmd_run lays out sessions and writes runs.csv in fixed column order") {
    TempDir dir("run");
    ExperimentConfig config;
    config.level_paths = {fixture("trivial.level")};
    config.repetitions = 2;
    config.base_seed = 5;
    config.out_dir = dir.path / "out";
    config.overrides = tiny_budget();

    fs::path csv_path = cmd_run(config);
    std::string csv = slurp(csv_path);
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == kRunsCsvHeader);
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) {
            parse_run_row(line, rows + 2);  // throws on malformed rows
            ++rows;
        }
    CHECK(rows == 4);  // 1 level x 2 variants x 2 reps

    for (const char* variant : {"multi", "single"})
        for (const char* rep : {"0", "1"}) {
            fs::path base = dir.path / "out" / "trivial" / variant / rep;
            CHECK(fs::exists(base / "summary.txt"));
            CHECK(fs::exists(base / "trace.txt"));
            CHECK(fs::exists(base / "heatmap.pgm"));
            CHECK(fs::exists(base / "heatmap.csv"));
            CHECK(fs::exists(base / "qtable.txt"));
        }

    std::string summary = slurp(dir.path / "out" / "trivial" / "multi" / "0" / "summary.txt");
    CHECK(summary.find("entity_pct=") != std::string::npos);
    CHECK(summary.find("mean_ticks_per_action=") != std::string::npos);
}

TEST_CASE("the standard protocol on L1 produces twenty runs.csv rows") {
    TempDir dir("l1matrix");
    ExperimentConfig config;
    config.level_paths = {fixture("L1.level")};
    config.repetitions = 10;
    config.base_seed = 1;
    config.jobs = 2;
    config.out_dir = dir.path / "out";

    std::string csv = slurp(cmd_run(config));
    int rows = -1;  // don't count the header
    for (char ch : csv)
        if (ch == '\n') ++rows;
    CHECK(rows == 20);  // 2 variants x 10 repetitions
}

TEST_CASE("cmd_run is byte-deterministic apart from wall clock") {
    TempDir dir("det");
    ExperimentConfig config;
    config.level_paths = {fixture("trivial.level")};
    config.repetitions = 2;
    config.base_seed = 9;
    config.overrides = tiny_budget();

    config.out_dir = dir.path / "one";
    fs::path first = cmd_run(config);
    config.out_dir = dir.path / "two";
    fs::path second = cmd_run(config);

    CHECK(strip_wall_ms(slurp(first)) == strip_wall_ms(slurp(second)));
    CHECK(slurp(dir.path / "one" / "trivial" / "multi" / "1" / "heatmap.pgm") ==
          slurp(dir.path / "two" / "trivial" / "multi" / "1" / "heatmap.pgm"));
    CHECK(slurp(dir.path / "one" / "trivial" / "single" / "0" / "trace.txt") ==
          slurp(dir.path / "two" / "trivial" / "single" / "0" / "trace.txt"));
}

TEST_CASE("cmd_run with parallel jobs produces the same rows") {
    TempDir dir("jobs");
    ExperimentConfig config;
    config.level_paths = {fixture("trivial.level")};
    config.repetitions = 3;
    config.base_seed = 2;
    config.overrides = tiny_budget();

    config.out_dir = dir.path / "serial";
    config.jobs = 1;
    fs::path serial = cmd_run(config);
    config.out_dir = dir.path / "parallel";
    config.jobs = 4;
    fs::path parallel = cmd_run(config);
    CHECK(strip_wall_ms(slurp(serial)) == strip_wall_ms(slurp(parallel)));
}

TEST_CASE("cmd_run reports a missing level file by path") {
    ExperimentConfig config;
    config.level_paths = {"no/such/file.level"};
    try {
        cmd_run(config);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("no/such/file.level") != std::string::npos);
    }
}

TEST_CASE("cmd_report computes the comparison table from runs.csv") {
    TempDir dir("rep");

    SUBCASE("complete separation: tiny p, A = 1, large") {
        std::ostringstream csv;
        csv << kRunsCsvHeader << "\n";
        for (int rep = 0; rep < 10; ++rep) {
            RunRow multi{"L1", Variant::Multi, rep, static_cast<uint64_t>(rep),
                         90.0 + rep * 0.1, 80.0, 50.0, 10,
                         static_cast<uint64_t>(1000 + rep), 5, 12.0};
            RunRow single{"L1", Variant::Single, rep, static_cast<uint64_t>(rep),
                          40.0 + rep * 0.1, 30.0, 20.0, 50,
                          static_cast<uint64_t>(9000 + rep), 5, 14.0};
            csv << format_run_row(multi) << "\n" << format_run_row(single) << "\n";
        }
        std::ofstream(dir.path / "runs.csv", std::ios::binary) << csv.str();

        Report report = cmd_report(dir.path);
        REQUIRE(report.cells.size() == 3);
        const ReportCell& entity = report.cells[0];
        CHECK(entity.metric == "entity_pct");
        REQUIRE(entity.p_value.has_value());
        CHECK(*entity.p_value < 0.001);
        CHECK(*entity.a_hat == 1.0);
        CHECK(entity.magnitude == "large");
        // time: multi strictly lower, so A(multi, single) = 0, still large
        const ReportCell& time = report.cells[2];
        CHECK(time.metric == "ticks_total");
        CHECK(*time.a_hat == 0.0);
        CHECK(time.magnitude == "large");
    }
    SUBCASE("identical samples: p = 1, A = 0.5, negligible") {
        std::ostringstream csv;
        csv << kRunsCsvHeader << "\n";
        for (int rep = 0; rep < 10; ++rep) {
            RunRow multi{"L1", Variant::Multi, rep, 1, 75.0, 60.0, 50.0, 10, 500, 5, 12.0};
            RunRow single{"L1", Variant::Single, rep, 1, 75.0, 60.0, 50.0, 10, 500, 5, 12.0};
            csv << format_run_row(multi) << "\n" << format_run_row(single) << "\n";
        }
        std::ofstream(dir.path / "runs.csv", std::ios::binary) << csv.str();
        Report report = cmd_report(dir.path);
        for (const auto& cell : report.cells) {
            CHECK(*cell.p_value == 1.0);
            CHECK(*cell.a_hat == 0.5);
            CHECK(cell.magnitude == "negligible");
        }
    }
    SUBCASE("a variant with no completed runs renders NA") {
        std::ostringstream csv;
        csv << kRunsCsvHeader << "\n";
        for (int rep = 0; rep < 3; ++rep) {
            RunRow multi{"L9", Variant::Multi, rep, 1, 75.0, 60.0, 50.0, 10, 500, 5, 12.0};
            csv << format_run_row(multi) << "\n";
        }
        std::ofstream(dir.path / "runs.csv", std::ios::binary) << csv.str();
        Report report = cmd_report(dir.path);
        for (const auto& cell : report.cells) {
            CHECK(cell.mean_multi.has_value());
            CHECK_FALSE(cell.mean_single.has_value());
            CHECK_FALSE(cell.p_value.has_value());
            CHECK(cell.magnitude == "NA");
            CHECK(report.csv.find("NA") != std::string::npos);
        }
    }
    SUBCASE("malformed rows are reported with their row number") {
        std::ofstream(dir.path / "runs.csv", std::ios::binary)
            << kRunsCsvHeader << "\nL1,multi,0,1,banana,1,1,1,1,1,1\n";
        try {
            cmd_report(dir.path);
            FAIL("expected invalid_argument");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("row 2") != std::string::npos);
        }
    }
}

TEST_CASE("the covrl binary wires the subcommands end to end") {
    TempDir dir("cli");
    std::string bin = COVRL_BIN;

    std::string gen_cmd = bin + " generate --class small --count 1 --seed 3 --out " +
                          (dir.path / "levels").string() + " > /dev/null";
    REQUIRE(std::system(gen_cmd.c_str()) == 0);
    CHECK(fs::exists(dir.path / "levels" / "small-s3.level"));

    std::ofstream(dir.path / "tiny.cfg") << "episodes = 2\nactions_per_episode = 10\n";
    std::string run_cmd = bin + " run --level " + fixture("trivial.level").string() +
                          " --variant multi --reps 1 --seed 4 --config " +
                          (dir.path / "tiny.cfg").string() + " --out " +
                          (dir.path / "out").string() + " > /dev/null";
    REQUIRE(std::system(run_cmd.c_str()) == 0);
    CHECK(fs::exists(dir.path / "out" / "runs.csv"));

    std::string report_cmd = bin + " report " + (dir.path / "out").string() + " > /dev/null";
    CHECK(std::system(report_cmd.c_str()) == 0);
    CHECK(fs::exists(dir.path / "out" / "report.csv"));

    SUBCASE("missing level files exit with the usage/config code") {
        std::string bad = bin + " run --level /nope.level --out " +
                          (dir.path / "x").string() + " 2> /dev/null";
        int rc = std::system(bad.c_str());
        CHECK(WEXITSTATUS(rc) == 1);
    }
}
