#pragma once

// Run logs and the files derived from them.
//
// runlog.json keeps every number at full precision. The other outputs are
// pure functions of it, so `report` can regenerate them byte for byte:
//   metrics.csv           stage,paradigm,acc_s,acc_u,har   (percent, 2 dp;
//                         empty field when not reported)
//   stage1_accuracy.csv   stage,acc_stage1_seen            (one row per stage)
//   prototype_fidelity.csv stage,category,distance
//   manifest.json         config, seeds, plan, checkpoints, file list

#include "izsfd/metrics.hpp"
#include "izsfd/plan.hpp"
#include "izsfd/protocol.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace izsfd {

struct StageLog {
    std::size_t stage = 0;
    std::optional<StageMetrics> tzsfd;
    std::optional<StageMetrics> gzsfd;
    double stage1_seen_accuracy = 0.0;
    std::map<CategoryId, double> prototype_distance;
    std::size_t train_rows_read = 0;
    std::vector<CategoryId> categories_read;
};

struct RunLog {
    std::string method;
    std::string protocol;
    std::uint64_t seed = 0;
    std::uint64_t plan_seed = 0;
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json plan = nlohmann::json::object();
    std::vector<std::string> checkpoints;
    std::vector<StageLog> stages;
};

nlohmann::json plan_to_json(const StagePlan& plan);

RunLog make_runlog(const RunResult& run, const StagePlan& plan, std::uint64_t plan_seed,
                   const nlohmann::json& config, std::vector<std::string> checkpoints);

nlohmann::json to_json(const RunLog& log);
RunLog runlog_from_json(const nlohmann::json& j);

void write_runlog(const RunLog& log, const std::filesystem::path& dir);
// Accepts the runlog.json file or the directory holding it.
RunLog read_runlog(const std::filesystem::path& path);

// Writes metrics.csv, stage1_accuracy.csv, prototype_fidelity.csv and
// manifest.json into `dir`. Throws IoError when `dir` is not writable.
void emit_results(const RunLog& log, const std::filesystem::path& dir);

// Percent with two decimals, e.g. 0.68123 -> "68.12".
std::string format_percent(double fraction);

// Minimal CSV reading for the files above (no quoting is ever emitted).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

struct MetricRow {
    std::size_t stage = 0;
    Paradigm paradigm = Paradigm::gzsfd;
    std::optional<double> acc_s;  // percent
    std::optional<double> acc_u;
    std::optional<double> har;
};
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

}  // namespace izsfd
