#include "izsfd/report.hpp"

#include "izsfd/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace izsfd {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
    return buf;
}

json plan_to_json(const StagePlan& plan) {
    json j;
    j["protocol"] = to_string(plan.protocol);
    j["stages"] = plan.stages();
    j["seen"] = plan.seen;
    j["unseen"] = plan.unseen;
    j["groups"] = plan.groups;
    return j;
}

RunLog make_runlog(const RunResult& run, const StagePlan& plan, std::uint64_t plan_seed, const json& config,
                   std::vector<std::string> checkpoints) {
    RunLog log;
    log.method = to_string(run.method);
    log.protocol = to_string(run.protocol);
    log.seed = run.seed;
    log.plan_seed = plan_seed;
    log.config = config;
    log.plan = plan_to_json(plan);
    log.checkpoints = std::move(checkpoints);
    for (const auto& r : run.stages) {
        StageLog s;
        s.stage = r.stage;
        s.tzsfd = r.tzsfd;
        s.gzsfd = r.gzsfd;
        s.stage1_seen_accuracy = r.stage1_seen_accuracy;
        s.prototype_distance = r.prototype_distance;
        std::set<CategoryId> cats;
        for (const auto& read : run.reads)
            if (read.stage == r.stage) {
                s.train_rows_read += read.rows;
                if (read.rows > 0) cats.insert(read.category);
            }
        s.categories_read.assign(cats.begin(), cats.end());
        log.stages.push_back(std::move(s));
    }
    return log;
}

namespace {

json metrics_to_json(const StageMetrics& m) {
    json j;
    j["stage"] = m.stage;
    j["paradigm"] = to_string(m.paradigm);
    j["acc_u"] = m.acc_u;
    j["acc_s"] = m.acc_s ? json(*m.acc_s) : json(nullptr);
    j["har"] = m.har ? json(*m.har) : json(nullptr);
    json per = json::array();
    for (const auto& [id, a] : m.per_category) per.push_back({id, a.correct, a.total});
    j["per_category"] = per;
    return j;
}

StageMetrics metrics_from_json(const json& j) {
    StageMetrics m;
    m.stage = j.at("stage").get<std::size_t>();
    m.paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
    m.acc_u = j.at("acc_u").get<double>();
    if (!j.at("acc_s").is_null()) m.acc_s = j.at("acc_s").get<double>();
    if (!j.at("har").is_null()) m.har = j.at("har").get<double>();
    for (const auto& e : j.at("per_category"))
        m.per_category[e.at(0).get<CategoryId>()] = {e.at(1).get<std::size_t>(), e.at(2).get<std::size_t>()};
    return m;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string opt_percent(const std::optional<double>& v) { return v ? format_percent(*v) : std::string(); }

}  // namespace

json to_json(const RunLog& log) {
    json j;
    j["format"] = "izsfd-runlog";
    j["version"] = 1;
    j["method"] = log.method;
    j["protocol"] = log.protocol;
    j["seed"] = log.seed;
    j["plan_seed"] = log.plan_seed;
    j["config"] = log.config;
    j["plan"] = log.plan;
    j["checkpoints"] = log.checkpoints;
    j["stages"] = json::array();
    for (const auto& s : log.stages) {
        json e;
        e["stage"] = s.stage;
        e["tzsfd"] = s.tzsfd ? metrics_to_json(*s.tzsfd) : json(nullptr);
        e["gzsfd"] = s.gzsfd ? metrics_to_json(*s.gzsfd) : json(nullptr);
        e["stage1_seen_accuracy"] = s.stage1_seen_accuracy;
        json d = json::array();
        for (const auto& [id, v] : s.prototype_distance) d.push_back({id, v});
        e["prototype_distance"] = d;
        e["train_rows_read"] = s.train_rows_read;
        e["categories_read"] = s.categories_read;
        j["stages"].push_back(std::move(e));
    }
    return j;
}

RunLog runlog_from_json(const json& j) {
    try {
        if (j.at("format") != "izsfd-runlog") throw IoError("not a run log");
        RunLog log;
        log.method = j.at("method").get<std::string>();
        log.protocol = j.at("protocol").get<std::string>();
        log.seed = j.at("seed").get<std::uint64_t>();
        log.plan_seed = j.at("plan_seed").get<std::uint64_t>();
        log.config = j.at("config");
        log.plan = j.at("plan");
        log.checkpoints = j.at("checkpoints").get<std::vector<std::string>>();
        for (const auto& e : j.at("stages")) {
            StageLog s;
            s.stage = e.at("stage").get<std::size_t>();
            if (!e.at("tzsfd").is_null()) s.tzsfd = metrics_from_json(e.at("tzsfd"));
            if (!e.at("gzsfd").is_null()) s.gzsfd = metrics_from_json(e.at("gzsfd"));
            s.stage1_seen_accuracy = e.at("stage1_seen_accuracy").get<double>();
            for (const auto& d : e.at("prototype_distance"))
                s.prototype_distance[d.at(0).get<CategoryId>()] = d.at(1).get<double>();
            s.train_rows_read = e.at("train_rows_read").get<std::size_t>();
            s.categories_read = e.at("categories_read").get<std::vector<CategoryId>>();
            log.stages.push_back(std::move(s));
        }
        return log;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed run log: ") + e.what());
    }
}

void write_runlog(const RunLog& log, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_text(dir / "runlog.json", to_json(log).dump(2) + "\n");
}

RunLog read_runlog(const fs::path& path) {
    const fs::path file = fs::is_directory(path) ? path / "runlog.json" : path;
    std::ifstream in(file);
    if (!in) throw IoError("cannot read " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed run log " + file.string() + ": " + e.what());
    }
    return runlog_from_json(j);
}

void emit_results(const RunLog& log, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());

    std::ostringstream metrics;
    metrics << "stage,paradigm,acc_s,acc_u,har\n";
    for (const Paradigm p : {Paradigm::tzsfd, Paradigm::gzsfd})
        for (const auto& s : log.stages) {
            const auto& m = p == Paradigm::tzsfd ? s.tzsfd : s.gzsfd;
            metrics << s.stage << ',' << to_string(p) << ',';
            if (m)
                metrics << opt_percent(m->acc_s) << ',' << format_percent(m->acc_u) << ',' << opt_percent(m->har);
            else
                metrics << ",,";
            metrics << '\n';
        }
    write_text(dir / "metrics.csv", metrics.str());

    std::ostringstream stage1;
    stage1 << "stage,acc_stage1_seen\n";
    for (const auto& s : log.stages) stage1 << s.stage << ',' << format_percent(s.stage1_seen_accuracy) << '\n';
    write_text(dir / "stage1_accuracy.csv", stage1.str());

    std::ostringstream fidelity;
    fidelity << "stage,category,distance\n";
    for (const auto& s : log.stages)
        for (const auto& [id, d] : s.prototype_distance) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f", d);
            fidelity << s.stage << ',' << id << ',' << buf << '\n';
        }
    write_text(dir / "prototype_fidelity.csv", fidelity.str());

    json manifest;
    manifest["format"] = "izsfd-run";
    manifest["version"] = 1;
    manifest["method"] = log.method;
    manifest["protocol"] = log.protocol;
    manifest["seed"] = log.seed;
    manifest["plan_seed"] = log.plan_seed;
    manifest["stages"] = log.stages.size();
    manifest["plan"] = log.plan;
    manifest["config"] = log.config;
    manifest["checkpoints"] = log.checkpoints;
    manifest["files"] = {"metrics.csv", "stage1_accuracy.csv", "prototype_fidelity.csv", "runlog.json"};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---- reading -------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::optional<double> parse_field(const std::string& s, const fs::path& path) {
    if (s.empty()) return std::nullopt;
    double v;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw IoError("bad number '" + s + "' in " + path.string());
    return v;
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
    t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split_csv_line(line);
        if (row.size() != t.header.size()) throw IoError("ragged row in " + path.string());
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::vector<MetricRow> read_metrics_csv(const fs::path& path) {
    const CsvTable t = read_csv(path);
    if (t.header != std::vector<std::string>{"stage", "paradigm", "acc_s", "acc_u", "har"})
        throw IoError(path.string() + " is not a metrics file");
    std::vector<MetricRow> out;
    for (const auto& r : t.rows) {
        MetricRow m;
        const auto stage = parse_field(r[0], path);
        if (!stage) throw IoError("missing stage in " + path.string());
        m.stage = static_cast<std::size_t>(*stage);
        try {
            m.paradigm = parse_paradigm(r[1]);
        } catch (const InvalidInput& e) {
            throw IoError(e.what());
        }
        m.acc_s = parse_field(r[2], path);
        m.acc_u = parse_field(r[3], path);
        m.har = parse_field(r[4], path);
        out.push_back(m);
    }
    return out;
}

}  // namespace izsfd
