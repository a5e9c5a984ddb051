#pragma once

// Config-driven experiment drivers behind the command line.

#include "izsfd/config.hpp"
#include "izsfd/report.hpp"

#include <filesystem>
#include <ostream>

namespace izsfd {

Dataset load_experiment_data(const ExperimentConfig& config);

// Seen/unseen split and stage partition, both from the plan seed.
StagePlan plan_for(const ExperimentConfig& config, const Dataset& data);

struct ExperimentRun {
    StagePlan plan;
    RunResult result;
    RunLog log;
};

// Runs `method` under the configured protocol and writes every output file
// into config.output_dir. Progress lines go to `progress`.
ExperimentRun run_experiment(const ExperimentConfig& config, Method method, std::ostream& progress);

// Stage-1 pretraining only; writes pretrain.izsfd and pretrain_loss.csv.
void run_pretrain(const ExperimentConfig& config, std::ostream& progress);

// Evaluates a checkpoint on the test split of a canonical dataset; prints
// the metrics CSV to `out`.
void evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset,
                         std::ostream& out);

// Regenerates the derived files next to a run log.
void report_run(const std::filesystem::path& runlog, std::ostream& out);

// Two-dimensional principal-component coordinates of the rows of `x`. Axis
// signs are fixed so that the largest-magnitude loading is positive.
Matrix project_2d(const Matrix& x);

}  // namespace izsfd
