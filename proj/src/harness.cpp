#include "covrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace covrl {

namespace fs = std::filesystem;

std::string to_string(Variant v) { return v == Variant::Single ? "single" : "multi"; }

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << content;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& key) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw std::invalid_argument("bad numeric value '" + s + "' for " + key);
    }
}

int to_int(const std::string& s, const std::string& key) {
    try {
        size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw std::invalid_argument("bad integer value '" + s + "' for " + key);
    }
}

bool to_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::invalid_argument("bad boolean value '" + s + "' for " + key);
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

ParamOverrides ParamOverrides::from_text(const std::string& text) {
    ParamOverrides out;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        size_t hash = raw.find('#');
        std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line) +
                                        ": expected key = value");
        out.values[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
    }
    return out;
}

ParamOverrides ParamOverrides::from_file(const fs::path& path) {
    return from_text(read_file(path));
}

void ParamOverrides::apply(RunConfig& config) const {
    for (const auto& [key, value] : values) {
        if (key == "episodes")
            config.episodes = to_int(value, key);
        else if (key == "actions_per_episode")
            config.actions_per_episode = to_int(value, key);
        else if (key == "cycles_per_action")
            config.cycles_per_action = to_int(value, key);
        else if (key == "num_passive")
            config.num_passive = to_int(value, key);
        else if (key == "observation_radius")
            config.observation_radius = to_int(value, key);
        else if (key == "epsilon0")
            config.policy.epsilon0 = to_double(value, key);
        else if (key == "epsilon_min")
            config.policy.epsilon_min = to_double(value, key);
        else if (key == "alpha")
            config.policy.alpha = to_double(value, key);
        else if (key == "gamma")
            config.policy.gamma = to_double(value, key);
        else if (key == "q_similarity")
            config.q_similarity = to_double(value, key);
        else if (key == "novelty_threshold")
            config.novelty.new_state_threshold = to_double(value, key);
        else if (key == "revisit_penalty")
            config.novelty.revisit_penalty = to_double(value, key);
        else if (key == "death_ends_session")
            config.death_ends_session = to_bool(value, key);
        else
            throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

std::vector<fs::path> cmd_generate(const GenerateOptions& options) {
    std::vector<fs::path> out;
    fs::create_directories(options.out_dir);
    for (int i = 0; i < options.count; ++i) {
        LevelSpec spec = generate_level(options.size_class, options.seed + static_cast<uint64_t>(i));
        fs::path path = options.out_dir / (spec.name + ".level");
        write_file(path, serialize_level(spec));
        out.push_back(path);
    }
    return out;
}

std::string format_run_row(const RunRow& row) {
    std::ostringstream out;
    out << row.level << "," << to_string(row.variant) << "," << row.rep << "," << row.seed << ","
        << fmt(row.entity_pct) << "," << fmt(row.connection_pct) << "," << fmt(row.spatial_pct)
        << "," << row.episodes_used << "," << row.ticks_total << "," << row.wall_ms << ","
        << fmt(row.mean_ticks_per_action);
    return out.str();
}

RunRow parse_run_row(const std::string& line, int line_number) {
    std::vector<std::string> cols;
    std::istringstream in(line);
    std::string col;
    while (std::getline(in, col, ',')) cols.push_back(col);
    if (cols.size() != 11)
        throw std::invalid_argument("runs.csv row " + std::to_string(line_number) +
                                    ": expected 11 columns, got " + std::to_string(cols.size()));
    auto ctx = [&](const char* what) {
        return std::string("runs.csv row ") + std::to_string(line_number) + ": " + what;
    };
    RunRow row;
    row.level = cols[0];
    if (cols[1] == "single")
        row.variant = Variant::Single;
    else if (cols[1] == "multi")
        row.variant = Variant::Multi;
    else
        throw std::invalid_argument(ctx("unknown variant"));
    try {
        row.rep = std::stoi(cols[2]);
        row.seed = std::stoull(cols[3]);
        row.entity_pct = std::stod(cols[4]);
        row.connection_pct = std::stod(cols[5]);
        row.spatial_pct = std::stod(cols[6]);
        row.episodes_used = std::stoi(cols[7]);
        row.ticks_total = std::stoull(cols[8]);
        row.wall_ms = std::stoull(cols[9]);
        row.mean_ticks_per_action = std::stod(cols[10]);
    } catch (...) {
        throw std::invalid_argument(ctx("malformed numeric column"));
    }
    return row;
}

namespace {

struct Task {
    size_t level_index;
    Variant variant;
    int rep;
    uint64_t seed;
};

}  // namespace

fs::path cmd_run(const ExperimentConfig& config) {
    if (config.repetitions < 1) throw std::invalid_argument("repetitions must be positive");
    if (config.jobs < 1) throw std::invalid_argument("jobs must be positive");
    if (config.level_paths.empty()) throw std::invalid_argument("no levels given");

    std::vector<LevelSpec> levels;
    for (const auto& path : config.level_paths) {
        if (!fs::exists(path))
            throw std::invalid_argument("level file not found: " + path.string());
        LevelSpec spec = parse_level(read_file(path));
        auto violations = validate_level(spec);
        if (!is_valid(violations)) {
            std::string msg = "level " + path.string() + " failed validation:";
            for (const auto& v : violations)
                if (!v.warning) msg += "\n  " + v.message;
            throw std::invalid_argument(msg);
        }
        levels.push_back(std::move(spec));
    }

    std::vector<Task> tasks;
    for (size_t li = 0; li < levels.size(); ++li)
        for (Variant v : config.variants)
            for (int rep = 0; rep < config.repetitions; ++rep)
                tasks.push_back({li, v, rep, config.base_seed + static_cast<uint64_t>(rep)});

    std::vector<RunRow> rows(tasks.size());
    std::vector<uint8_t> done(tasks.size(), 0);
    std::atomic<size_t> next{0};
    std::mutex io_mutex;
    std::vector<std::string> failures;

    auto worker = [&]() {
        while (true) {
            size_t ti = next.fetch_add(1);
            if (ti >= tasks.size()) return;
            const Task& task = tasks[ti];
            const LevelSpec& level = levels[task.level_index];
            try {
                RunConfig rc;
                rc.level = level;
                rc.mode = task.variant == Variant::Single ? Mode::SingleAgent : Mode::MultiAgent;
                rc.num_passive = task.variant == Variant::Single ? 0 : 1;
                rc.seed = task.seed;
                apply_size_class_budgets(rc);
                config.overrides.apply(rc);

                SessionResult session = run_session(rc);

                fs::path dir = config.out_dir / level.name / to_string(task.variant) /
                               std::to_string(task.rep);
                write_file(dir / "summary.txt", session.report.to_flat_text());
                write_file(dir / "trace.txt", serialize_trace(session.trace));
                SpatialReport spatial = spatial_report(session.ledgers.spatial);
                write_file(dir / "heatmap.csv", spatial.csv);
                write_file(dir / "heatmap.pgm", spatial.pgm);
                write_file(dir / "qtable.txt", session.qtable.dump());

                RunRow row;
                row.level = level.name;
                row.variant = task.variant;
                row.rep = task.rep;
                row.seed = task.seed;
                row.entity_pct = session.report.entity_pct;
                row.connection_pct = session.report.connection_pct;
                row.spatial_pct = session.report.spatial_pct;
                row.episodes_used = session.report.episodes_used;
                row.ticks_total = session.report.ticks_total;
                row.wall_ms = session.report.wall_ms;
                row.mean_ticks_per_action = session.report.mean_ticks_per_action;
                rows[ti] = row;
                done[ti] = 1;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(io_mutex);
                failures.push_back(level.name + "/" + to_string(task.variant) + "/" +
                                   std::to_string(task.rep) + ": " + e.what());
                return;
            }
        }
    };

    const int jobs = std::min<int>(config.jobs, static_cast<int>(tasks.size()));
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::ostringstream csv;
    csv << kRunsCsvHeader << "\n";
    for (size_t i = 0; i < tasks.size(); ++i)
        if (done[i]) csv << format_run_row(rows[i]) << "\n";
    fs::path csv_path = config.out_dir / "runs.csv";
    write_file(csv_path, csv.str());

    if (!failures.empty()) {
        std::string msg = "session failures:";
        for (const auto& f : failures) msg += "\n  " + f;
        throw std::runtime_error(msg);
    }
    return csv_path;
}

namespace {

std::string opt_fmt(const std::optional<double>& v, const char* pattern = "%.4f") {
    if (!v) return "NA";
    char buf[48];
    std::snprintf(buf, sizeof(buf), pattern, *v);
    return buf;
}

}  // namespace

Report cmd_report(const fs::path& results_dir) {
    fs::path csv_path = fs::is_directory(results_dir) ? results_dir / "runs.csv" : results_dir;
    if (!fs::exists(csv_path))
        throw std::invalid_argument("runs.csv not found at " + csv_path.string());

    std::vector<RunRow> rows;
    {
        std::istringstream in(read_file(csv_path));
        std::string line;
        int ln = 0;
        while (std::getline(in, line)) {
            ++ln;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (ln == 1) {
                if (line != kRunsCsvHeader)
                    throw std::invalid_argument("runs.csv row 1: unexpected header");
                continue;
            }
            if (line.empty()) continue;
            rows.push_back(parse_run_row(line, ln));
        }
    }

    std::vector<std::string> level_order;
    for (const auto& r : rows)
        if (std::find(level_order.begin(), level_order.end(), r.level) == level_order.end())
            level_order.push_back(r.level);

    struct Metric {
        const char* name;
        double (*get)(const RunRow&);
    };
    static const Metric metrics[3] = {
        {"entity_pct", [](const RunRow& r) { return r.entity_pct; }},
        {"connection_pct", [](const RunRow& r) { return r.connection_pct; }},
        {"ticks_total", [](const RunRow& r) { return static_cast<double>(r.ticks_total); }},
    };

    Report report;
    for (const auto& level : level_order) {
        for (const auto& metric : metrics) {
            std::vector<double> multi, single;
            for (const auto& r : rows) {
                if (r.level != level) continue;
                (r.variant == Variant::Multi ? multi : single).push_back(metric.get(r));
            }
            ReportCell cell;
            cell.level = level;
            cell.metric = metric.name;
            auto mean = [](const std::vector<double>& v) -> std::optional<double> {
                if (v.empty()) return std::nullopt;
                double s = 0;
                for (double d : v) s += d;
                return s / static_cast<double>(v.size());
            };
            cell.mean_multi = mean(multi);
            cell.mean_single = mean(single);
            if (!multi.empty() && !single.empty()) {
                cell.p_value = wilcoxon_rank_sum(multi, single);
                EffectSize es = vargha_delaney(multi, single);
                cell.a_hat = es.a_hat;
                cell.magnitude = to_string(es.magnitude);
            } else {
                cell.magnitude = "NA";
            }
            report.cells.push_back(std::move(cell));
        }
    }

    std::ostringstream text, csv;
    char line[256];
    std::snprintf(line, sizeof(line), "%-24s %-16s %12s %12s %10s %8s %-10s\n", "level", "metric",
                  "mean_multi", "mean_single", "p_value", "a_hat", "magnitude");
    text << line;
    csv << "level,metric,mean_multi,mean_single,p_value,a_hat,magnitude\n";
    for (const auto& c : report.cells) {
        std::snprintf(line, sizeof(line), "%-24s %-16s %12s %12s %10s %8s %-10s\n",
                      c.level.c_str(), c.metric.c_str(), opt_fmt(c.mean_multi).c_str(),
                      opt_fmt(c.mean_single).c_str(), opt_fmt(c.p_value, "%.6g").c_str(),
                      opt_fmt(c.a_hat, "%.3f").c_str(), c.magnitude.c_str());
        text << line;
        csv << c.level << "," << c.metric << "," << opt_fmt(c.mean_multi) << ","
            << opt_fmt(c.mean_single) << "," << opt_fmt(c.p_value, "%.6g") << ","
            << opt_fmt(c.a_hat, "%.3f") << "," << c.magnitude << "\n";
    }
    report.text_table = text.str();
    report.csv = csv.str();
    return report;
}

}  // namespace covrl
