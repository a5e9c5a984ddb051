#include "izsfd/cli.hpp"

#include "izsfd/error.hpp"
#include "izsfd/experiment.hpp"

#include <CLI11.hpp>

#include <optional>

namespace izsfd {

namespace fs = std::filesystem;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Incremental zero-shot fault diagnosis experiments", "izsfd"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "Override every seed in the config");

    std::string spec_path, out_path, dir_path, csv_path, attr_path, config_path, checkpoint_path, dataset_path,
        runlog_path, mode;
    double test_fraction = 0.3;

    auto* gen = app.add_subcommand("gen-synthetic", "Generate a synthetic benchmark dataset");
    gen->add_option("spec", spec_path, "Synthetic spec (TOML-style)")->required();
    gen->add_option("out", out_path, "Output dataset directory")->required();

    auto* hyd = app.add_subcommand("ingest-hydraulic", "Convert a hydraulic test-rig directory");
    hyd->add_option("dir", dir_path, "Directory with sensor files and profile.txt")->required();
    hyd->add_option("out", out_path, "Output dataset directory")->required();
    hyd->add_option("--test-fraction", test_fraction, "Per-category share of test rows")->capture_default_str();

    auto* tep = app.add_subcommand("ingest-tep", "Convert Tennessee Eastman CSV files");
    tep->add_option("csv", csv_path, "Data CSV")->required();
    tep->add_option("attrs", attr_path, "Binary attribute matrix CSV")->required();
    tep->add_option("out", out_path, "Output dataset directory")->required();

    auto* pre = app.add_subcommand("pretrain", "Stage-1 pretraining only");
    pre->add_option("config", config_path, "Experiment config")->required();

    auto* run = app.add_subcommand("run", "Run an incremental protocol");
    run->require_subcommand(1);
    auto* run_cat = run->add_subcommand("category-increment", "Anti-forgetting run, categories grow");
    run_cat->add_option("config", config_path, "Experiment config")->required();
    auto* run_att = run->add_subcommand("attribute-increment", "Anti-forgetting run, attributes grow");
    run_att->add_option("config", config_path, "Experiment config")->required();
    auto* run_base = run->add_subcommand("baseline", "Joint-learning or fine-tuning control run");
    run_base->add_option("--mode", mode, "jl or sft")->required()->check(CLI::IsMember({"jl", "sft"}));
    run_base->add_option("config", config_path, "Experiment config")->required();

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    ev->add_option("checkpoint", checkpoint_path, "Checkpoint archive")->required();
    ev->add_option("dataset", dataset_path, "Canonical dataset directory")->required();

    auto* rep = app.add_subcommand("report", "Regenerate result files from a run log");
    rep->add_option("runlog", runlog_path, "runlog.json or its directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        auto load_config = [&] {
            ExperimentConfig c = load_experiment_config(config_path);
            if (seed) c.override_seed(*seed);
            return c;
        };

        if (*gen) {
            SyntheticSpec spec = load_synthetic_spec(spec_path);
            if (seed) spec.seed = *seed;
            const Dataset data = gen_synthetic(spec);
            save_dataset(data, out_path);
            out << "wrote " << data.size() << " rows (" << data.attributes.size() << " categories, d = " << data.dim()
                << ") to " << out_path << '\n';
        } else if (*hyd) {
            Dataset data = load_hydraulic(dir_path);
            assign_split(data, test_fraction, seed.value_or(0));
            save_dataset(data, out_path);
            out << "wrote " << data.size() << " rows (" << data.attributes.size() << " categories, d = " << data.dim()
                << ") to " << out_path << '\n';
        } else if (*tep) {
            const Dataset data = load_tep(csv_path, attr_path);
            save_dataset(data, out_path);
            out << "wrote " << data.size() << " rows (" << data.attributes.size() << " categories, d = " << data.dim()
                << ") to " << out_path << '\n';
        } else if (*pre) {
            run_pretrain(load_config(), out);
        } else if (*run) {
            ExperimentConfig c = load_config();
            Method method = Method::bdmaff;
            if (*run_cat) {
                c.protocol = Protocol::category_increment;
            } else if (*run_att) {
                c.protocol = Protocol::attribute_increment;
            } else {
                method = parse_method(mode);
            }
            run_experiment(c, method, out);
            out << "results in " << c.output_dir.string() << '\n';
        } else if (*ev) {
            evaluate_checkpoint(checkpoint_path, dataset_path, out);
        } else if (*rep) {
            report_run(runlog_path, out);
        }
    } catch (const std::exception& e) {
        err << "izsfd: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace izsfd
