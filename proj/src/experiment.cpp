#include "izsfd/experiment.hpp"

#include "izsfd/archive.hpp"
#include "izsfd/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace izsfd {

namespace fs = std::filesystem;
using json = nlohmann::json;

Dataset load_experiment_data(const ExperimentConfig& config) {
    if (config.data.source == "dataset") return load_dataset(config.data.path);
    return gen_synthetic(config.data.synthetic);
}

StagePlan plan_for(const ExperimentConfig& config, const Dataset& data) {
    const auto& ids = data.attributes.ids();
    const std::size_t unseen_count =
        config.unseen_count ? *config.unseen_count
                            : static_cast<std::size_t>(std::llround(config.unseen_fraction * static_cast<double>(ids.size())));
    std::vector<CategoryId> seen, unseen;
    const auto seed = config.effective_plan_seed();
    split_seen_unseen(ids, unseen_count, seed, seen, unseen);
    if (config.protocol == Protocol::category_increment) return make_category_plan(seen, unseen, config.stages, seed);
    return make_attribute_plan(seen, unseen, data.attributes.schema().group_count(), config.stages, seed);
}

Matrix project_2d(const Matrix& x) {
    if (x.rows() == 0) return Matrix(0, 2);
    const Matrix centered = x.rowwise() - x.colwise().mean();
    Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
    Matrix axes = Matrix::Zero(x.cols(), 2);
    const auto k = std::min<Eigen::Index>(2, svd.matrixV().cols());
    axes.leftCols(k) = svd.matrixV().leftCols(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::Index arg;
        axes.col(c).cwiseAbs().maxCoeff(&arg);
        if (axes(arg, c) < 0) axes.col(c) *= -1.0;
    }
    return centered * axes;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
}

void append_projection(std::ostringstream& out, const StageState& state, std::uint64_t seed) {
    const auto ids = state.store.ids();
    if (ids.empty() || state.generator.generator().widths().empty()) return;
    constexpr std::size_t per = 20;
    const LabeledFeatureBatch gen =
        generate(state.generator, ids, state.attributes, per, stage_seed(seed, state.stage, "projection"));
    Matrix protos(static_cast<Eigen::Index>(ids.size()), gen.features.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) protos.row(static_cast<Eigen::Index>(i)) = state.store.at(ids[i]).prototype;
    const Matrix xy = project_2d(vstack({protos, gen.features}));
    for (Eigen::Index r = 0; r < xy.rows(); ++r) {
        const bool is_proto = r < protos.rows();
        const CategoryId id = is_proto ? ids[static_cast<std::size_t>(r)]
                                       : gen.labels[static_cast<std::size_t>(r - protos.rows())];
        out << state.stage << ',' << id << ',' << (is_proto ? "prototype" : "generated") << ',' << fmt(xy(r, 0)) << ','
            << fmt(xy(r, 1)) << '\n';
    }
}

}  // namespace

ExperimentRun run_experiment(const ExperimentConfig& config, Method method, std::ostream& progress) {
    const Dataset data = load_experiment_data(config);
    ExperimentRun out;
    out.plan = plan_for(config, data);

    const fs::path dir = config.output_dir;
    std::error_code ec;
    fs::create_directories(dir / "checkpoints", ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    std::vector<std::string> checkpoints;
    std::ostringstream gan_csv, projection_csv;
    gan_csv << "stage,step,wasserstein,penalty,anti_att,anti_fe\n";
    projection_csv << "stage,category,kind,pc1,pc2\n";
    const json run_meta = {{"method", to_string(method)}, {"seed", config.seed}};

    auto on_stage = [&](const StageState& state, const StageResult& result) {
        progress << to_string(method) << " stage " << state.stage << "/" << out.plan.stages();
        if (result.gzsfd)
            progress << "  acc_s " << format_percent(*result.gzsfd->acc_s) << "  acc_u "
                     << format_percent(result.gzsfd->acc_u) << "  har " << format_percent(*result.gzsfd->har);
        progress << "  stage-1 seen " << format_percent(result.stage1_seen_accuracy) << '\n';
        for (const auto& s : result.gan_log.steps)
            gan_csv << state.stage << ',' << s.step << ',' << fmt(s.wasserstein) << ',' << fmt(s.penalty) << ','
                    << fmt(s.anti_att) << ',' << fmt(s.anti_fe) << '\n';
        if (config.projection) append_projection(projection_csv, state, config.seed);
        if (config.checkpoints) {
            const std::string name = "checkpoints/stage_" + std::to_string(state.stage) + ".izsfd";
            save_checkpoint(dir / name, state, run_meta);
            checkpoints.push_back(name);
        }
    };

    out.result = run_protocol(method, out.plan, data, config.training, config.seed, on_stage);
    out.log = make_runlog(out.result, out.plan, config.effective_plan_seed(), config.raw, checkpoints);
    write_file(dir / "gan_losses.csv", gan_csv.str());
    if (config.projection) write_file(dir / "projection.csv", projection_csv.str());
    write_runlog(out.log, dir);
    emit_results(out.log, dir);
    return out;
}

void run_pretrain(const ExperimentConfig& config, std::ostream& progress) {
    const Dataset data = load_experiment_data(config);
    const StagePlan plan = plan_for(config, data);
    RealDataSource source(data);
    source.begin_stage(1);
    StageState s;
    s.stage = 1;
    s.seen = plan.seen[0];
    s.unseen = plan.unseen[0];
    s.stage1_seen = s.seen;
    s.stage1_unseen = s.unseen;
    if (plan.protocol == Protocol::attribute_increment) s.groups = plan.groups[0];
    std::vector<CategoryId> all = s.seen;
    all.insert(all.end(), s.unseen.begin(), s.unseen.end());
    std::sort(all.begin(), all.end());
    s.attributes = stage_attributes(data.attributes, all, s.groups);

    std::vector<CategoryId> labels;
    const Matrix x = source.train_rows(s.seen, labels);
    s.model = DiagnosisModel(x.cols(), s.attributes.schema(), s.seen, config.training.shape,
                             stage_seed(config.seed, 1, "model-init"));
    const PretrainReport report =
        pretrain(s.model, x, labels, s.attributes, config.training.pretrain, stage_seed(config.seed, 1, "pretrain"));
    const Matrix fe = s.model.features(x);
    s.memory = init_memory(fe);
    s.store = update_prototypes({}, fe, labels);
    s.w_tmp = s.model.prototypes();

    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    std::ostringstream loss;
    loss << "epoch,loss\n";
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) loss << e + 1 << ',' << fmt(report.epoch_loss[e]) << '\n';
    write_file(config.output_dir / "pretrain_loss.csv", loss.str());
    save_checkpoint(config.output_dir / "pretrain.izsfd", s, {{"method", "pretrain"}, {"seed", config.seed}});
    progress << "pretrained on " << labels.size() << " rows of " << s.seen.size() << " categories: loss "
             << fmt(report.initial_loss) << " -> " << fmt(report.final_loss) << '\n';
}

void evaluate_checkpoint(const fs::path& checkpoint, const fs::path& dataset, std::ostream& out) {
    const StageState state = load_checkpoint(checkpoint);
    const Dataset data = load_dataset(dataset);
    if (data.dim() != state.model.input_dim())
        throw InvalidInput("dataset has " + std::to_string(data.dim()) + " features, checkpoint expects " +
                           std::to_string(state.model.input_dim()));
    RealDataSource source(data);
    StageResult r;
    r.stage = state.stage;
    evaluate_state(state, source, r);
    out << "stage,paradigm,acc_s,acc_u,har\n";
    for (const auto* m : {&r.tzsfd, &r.gzsfd}) {
        if (!*m) continue;
        const StageMetrics& s = **m;
        out << state.stage << ',' << to_string(s.paradigm) << ',' << (s.acc_s ? format_percent(*s.acc_s) : "") << ','
            << format_percent(s.acc_u) << ',' << (s.har ? format_percent(*s.har) : "") << '\n';
    }
    out << "# stage-1 seen accuracy " << format_percent(r.stage1_seen_accuracy) << '\n';
}

void report_run(const fs::path& runlog, std::ostream& out) {
    const RunLog log = read_runlog(runlog);
    const fs::path dir = fs::is_directory(runlog) ? runlog : runlog.parent_path();
    emit_results(log, dir.empty() ? fs::path(".") : dir);
    out << "wrote metrics.csv, stage1_accuracy.csv, prototype_fidelity.csv, manifest.json to "
        << (dir.empty() ? fs::path(".") : dir).string() << '\n';
}

}  // namespace izsfd
