#include "izsfd/protocol.hpp"

#include "izsfd/error.hpp"
#include "izsfd/random.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace izsfd {

std::string to_string(Method m) {
    switch (m) {
        case Method::bdmaff: return "bdmaff";
        case Method::jl: return "jl";
        case Method::sft: return "sft";
    }
    return "unknown";
}

std::string to_string(Protocol p) {
    return p == Protocol::category_increment ? "category-increment" : "attribute-increment";
}

void ProtocolConfig::validate() const {
    gan.validate();
    for (const TrainConfig* t : {&pretrain, &head}) {
        if (t->epochs < 0) throw ConfigError("epochs must be non-negative");
        if (t->batch_size < 1) throw ConfigError("batch_size must be at least 1");
        if (!(t->learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    }
    if (shape.feature_dim < 1 || shape.fe_hidden < 1 || shape.noise_dim < 1)
        throw ConfigError("model widths must be positive");
    for (auto w : shape.generator_hidden)
        if (w < 1) throw ConfigError("generator widths must be positive");
    for (auto w : shape.critic_hidden)
        if (w < 1) throw ConfigError("critic widths must be positive");
    if (fidelity_samples < 1) throw ConfigError("fidelity_samples must be at least 1");
    if (!(target_scale >= 0.0) || !std::isfinite(target_scale)) throw ConfigError("target_scale must be non-negative");
}

// ---- data source -------------------------------------------------------------

namespace {

Matrix collect(const Dataset& data, Split split, const std::vector<CategoryId>& categories,
               std::vector<CategoryId>& labels) {
    const std::set<CategoryId> cats(categories.begin(), categories.end());
    const auto idx = data.rows(split, cats);
    labels.clear();
    for (auto i : idx) labels.push_back(data.labels[i]);
    return gather_rows(data.x, idx);
}

}  // namespace

Matrix RealDataSource::train_rows(const std::vector<CategoryId>& categories, std::vector<CategoryId>& labels) {
    Matrix x = collect(*data_, Split::train, categories, labels);
    for (auto c : categories)
        reads_.push_back(Read{stage_, c, static_cast<std::size_t>(std::count(labels.begin(), labels.end(), c))});
    return x;
}

Matrix RealDataSource::test_rows(const std::vector<CategoryId>& categories, std::vector<CategoryId>& labels) const {
    return collect(*data_, Split::test, categories, labels);
}

std::size_t RealDataSource::rows_read(std::size_t stage) const {
    std::size_t n = 0;
    for (const auto& r : reads_)
        if (r.stage == stage) n += r.rows;
    return n;
}

std::set<CategoryId> RealDataSource::categories_read(std::size_t stage) const {
    std::set<CategoryId> out;
    for (const auto& r : reads_)
        if (r.stage == stage && r.rows > 0) out.insert(r.category);
    return out;
}

// ---- helpers -----------------------------------------------------------------

double matched_target_scale(const Matrix& logits, const Matrix& targets, const AttributeSchema& schema) {
    if (logits.rows() != targets.rows() || logits.cols() != schema.coded_width() ||
        targets.cols() != schema.coded_width())
        throw InvalidInput("logits, targets and schema disagree in shape");
    double num = 0.0, den = 0.0;
    for (std::size_t g = 0; g < schema.group_count(); ++g) {
        const auto off = schema.offset(g);
        const auto n = schema.cardinality(g);
        const Matrix l = logits.middleCols(off, n).colwise() - logits.middleCols(off, n).rowwise().mean();
        const Matrix t = targets.middleCols(off, n).colwise() - targets.middleCols(off, n).rowwise().mean();
        num += (l.array() * t.array()).sum();
        den += t.squaredNorm();
    }
    const double c = den > 0.0 ? num / den : 0.0;
    return std::isfinite(c) && c > 0.0 ? c : 1.0;
}

std::uint64_t stage_seed(std::uint64_t seed, std::size_t stage, const char* label) {
    return Rng::stream(seed, label, {stage}).next_u64();
}

FaultAttributeMatrix stage_attributes(const FaultAttributeMatrix& full, const std::vector<CategoryId>& categories,
                                      const std::vector<std::size_t>& groups) {
    const FaultAttributeMatrix rows = full.rows_for(categories);
    return groups.empty() ? rows : rows.select_groups(groups);
}

namespace {

std::vector<CategoryId> merged(const std::vector<CategoryId>& a, const std::vector<CategoryId>& b) {
    std::vector<CategoryId> out = a;
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t mean_count(const std::vector<CategoryId>& labels) {
    const std::set<CategoryId> cats(labels.begin(), labels.end());
    if (cats.empty()) return 0;
    return static_cast<std::size_t>(
        std::llround(static_cast<double>(labels.size()) / static_cast<double>(cats.size())));
}

// W^tmp: W plus an RLS pass over generated batches, on a scratch copy of P.
Matrix absorb_generated(const MemoryMatrix& memory, const Matrix& w, const std::vector<LabeledFeatureBatch>& batches,
                        double scale) {
    const LabeledFeatureBatch all = concat_batches(batches);
    if (all.size() == 0) return w;
    return rls_update(memory, w, all.features, scale * all.attributes).prototypes;
}

void finish_stage(StageState& state, const RealDataSource& source, const ProtocolConfig& config, std::uint64_t seed,
                  StageResult& result) {
    result.stage = state.stage;
    evaluate_state(state, source, result);
    const auto ids = state.store.ids();
    if (!ids.empty())
        result.prototype_distance = prototype_distances(state.generator, ids, state.attributes, state.store,
                                                        config.fidelity_samples,
                                                        stage_seed(seed, state.stage, "fidelity"));
}

// Stage pipeline from nothing: pretraining, memory initialisation, generator
// training on real features, W^tmp from generated unseen features.
StageState fit_from_scratch(std::size_t stage, const std::vector<CategoryId>& seen,
                            const std::vector<CategoryId>& unseen, const std::vector<std::size_t>& groups,
                            RealDataSource& source, const ProtocolConfig& config, std::uint64_t seed,
                            StageResult& result) {
    StageState s;
    s.stage = stage;
    s.seen = seen;
    s.unseen = unseen;
    s.groups = groups;
    s.attributes = stage_attributes(source.data().attributes, merged(seen, unseen), groups);

    std::vector<CategoryId> labels;
    const Matrix x = source.train_rows(seen, labels);
    if (labels.empty()) throw ProtocolError("no training rows for the seen categories of stage " + std::to_string(stage));

    s.model = DiagnosisModel(x.cols(), s.attributes.schema(), seen, config.shape, stage_seed(seed, stage, "model-init"));
    result.pretrain = pretrain(s.model, x, labels, s.attributes, config.pretrain, stage_seed(seed, stage, "pretrain"));

    const Matrix fe = s.model.features(x);
    s.store = update_prototypes({}, fe, labels);
    s.memory = init_memory(fe);
    const Matrix z = s.attributes.labels_for(labels);
    s.target_scale = config.target_scale > 0.0
                         ? config.target_scale
                         : matched_target_scale(fe * s.model.prototypes(), z, s.attributes.schema());
    s.model.set_prototypes(align_prototypes(s.memory, s.model.prototypes(), fe, s.target_scale * z),
                           s.attributes.schema());
    s.replay_volume = config.replay_volume > 0 ? config.replay_volume : mean_count(labels);

    s.generator = GenerativeModel(fe.cols(), s.attributes.matrix().cols(), config.shape,
                                  stage_seed(seed, stage, "gan-init"));
    const LabeledFeatureBatch real = make_batch(fe, labels, s.attributes, Provenance::real);
    result.gan_log = train_generative(s.generator, real, s.model.prototypes(), s.attributes.schema(), s.store,
                                      config.gan, stage_seed(seed, stage, "gan-train"));

    const LabeledFeatureBatch gen_unseen =
        generate(s.generator, unseen, s.attributes, s.replay_volume, stage_seed(seed, stage, "generate-unseen"));
    s.w_tmp = absorb_generated(s.memory, s.model.prototypes(), {gen_unseen}, s.target_scale);
    return s;
}

void check_plan(const StagePlan& plan, const Dataset& data, Protocol expected) {
    plan.validate();
    if (plan.protocol != expected) throw ProtocolError("plan protocol does not match the requested run");
    for (std::size_t k = 1; k <= plan.stages(); ++k)
        for (const auto* part : {&plan.seen[k - 1], &plan.unseen[k - 1]})
            for (auto c : *part)
                if (!data.attributes.contains(c))
                    throw ProtocolError("category " + std::to_string(c) + " has no attribute row");
    if (expected == Protocol::attribute_increment)
        for (const auto& part : plan.groups)
            for (auto g : part)
                if (g >= data.attributes.schema().group_count())
                    throw ProtocolError("attribute group " + std::to_string(g) + " is not in the schema");
}

RunResult start_run(Method method, const StagePlan& plan, std::uint64_t seed) {
    RunResult run;
    run.method = method;
    run.protocol = plan.protocol;
    run.seed = seed;
    return run;
}

void record(RunResult& run, StageState& state, StageResult result, const StageCallback& on_stage) {
    if (on_stage) on_stage(state, result);
    run.stages.push_back(std::move(result));
}

// ---- category increment ----------------------------------------------------------

enum class Increment { anti_forgetting, fine_tune };

RunResult category_run(Method method, const StagePlan& plan, const Dataset& data, const ProtocolConfig& config,
                       std::uint64_t seed, const StageCallback& on_stage) {
    config.validate();
    check_plan(plan, data, Protocol::category_increment);
    RealDataSource source(data);
    RunResult run = start_run(method, plan, seed);

    StageState state;
    for (std::size_t k = 1; k <= plan.stages(); ++k) {
        source.begin_stage(k);
        StageResult result;
        if (k == 1 || method == Method::jl) {
            state = fit_from_scratch(k, plan.seen_through(k), plan.unseen_through(k), {}, source, config, seed, result);
            state.stage1_seen = plan.seen[0];
            state.stage1_unseen = plan.unseen[0];
        } else {
            const std::vector<CategoryId> previous_seen = state.seen;
            const std::vector<CategoryId>& new_seen = plan.seen[k - 1];
            state.stage = k;
            state.seen = plan.seen_through(k);
            state.unseen = plan.unseen_through(k);
            state.attributes = stage_attributes(data.attributes, merged(state.seen, state.unseen), {});
            const AttributeSchema& schema = state.attributes.schema();

            std::vector<CategoryId> labels;
            const Matrix x = source.train_rows(new_seen, labels);
            const Matrix fe = labels.empty() ? Matrix(0, state.model.feature_dim()) : state.model.features(x);
            const Matrix z = state.attributes.labels_for(labels);
            if (config.replay_volume == 0 && !labels.empty()) state.replay_volume = mean_count(labels);
            const std::size_t volume = state.replay_volume;
            const LabeledFeatureBatch real = make_batch(fe, labels, state.attributes, Provenance::real);

            if (method == Method::bdmaff) {
                if (!labels.empty()) {
                    RlsStep upd = rls_update(state.memory, state.model.prototypes(), fe, state.target_scale * z);
                    state.memory = std::move(upd.memory);
                    state.model.set_prototypes(std::move(upd.prototypes), schema);
                }
                const LabeledFeatureBatch replay = generate(state.generator, previous_seen, state.attributes, volume,
                                                            stage_seed(seed, k, "generate-replay"));
                state.store = update_prototypes(state.store, fe, labels);
                result.gan_log = train_generative(state.generator, concat_batches({real, replay}),
                                                  state.model.prototypes(), schema, state.store, config.gan,
                                                  stage_seed(seed, k, "gan-train"));
                const LabeledFeatureBatch gen_unseen = generate(state.generator, state.unseen, state.attributes,
                                                                volume, stage_seed(seed, k, "generate-unseen"));
                state.w_tmp = absorb_generated(state.memory, state.model.prototypes(), {replay, gen_unseen},
                                                 state.target_scale);
            } else {
                if (labels.empty()) throw ProtocolError("fine-tuning needs new seen rows at every stage");
                state.model.set_prototypes(train_prototype_block(state.model.prototypes(), fe, z, schema, config.head,
                                                                 stage_seed(seed, k, "sft-head")),
                                           schema);
                state.store = update_prototypes(state.store, fe, labels);
                GanConfig plain = config.gan;
                plain.lambda_att = 0.0;
                plain.lambda_fe = 0.0;
                result.gan_log = train_generative(state.generator, real, state.model.prototypes(), schema, state.store,
                                                  plain, stage_seed(seed, k, "gan-train"));
                const LabeledFeatureBatch gen_unseen = generate(state.generator, state.unseen, state.attributes,
                                                                volume, stage_seed(seed, k, "generate-unseen"));
                const LabeledFeatureBatch mix = concat_batches({real, gen_unseen});
                state.w_tmp = train_prototype_block(state.model.prototypes(), mix.features, mix.attributes, schema,
                                                    config.head, stage_seed(seed, k, "sft-tmp"));
            }
        }
        finish_stage(state, source, config, seed, result);
        run.final_state = state;
        record(run, state, std::move(result), on_stage);
    }
    run.final_state = std::move(state);
    run.reads = source.reads();
    return run;
}

// ---- attribute increment ---------------------------------------------------------

RunResult attribute_run(Method method, const StagePlan& plan, const Dataset& data, const ProtocolConfig& config,
                        std::uint64_t seed, const StageCallback& on_stage) {
    config.validate();
    check_plan(plan, data, Protocol::attribute_increment);
    if (method == Method::sft) throw ConfigError("sequential fine-tuning is defined for category increment only");
    if (method == Method::jl && !config.retain_data)
        throw ConfigError("joint learning under attribute increment needs retained stage-1 data (retain_data)");
    RealDataSource source(data);
    RunResult run = start_run(method, plan, seed);
    const std::vector<CategoryId>& seen = plan.seen[0];
    const std::vector<CategoryId>& unseen = plan.unseen[0];

    StageState state;
    for (std::size_t k = 1; k <= plan.stages(); ++k) {
        source.begin_stage(k);
        StageResult result;
        const std::vector<std::size_t> groups = plan.groups_through(k);
        if (k == 1 || method == Method::jl) {
            state = fit_from_scratch(k, seen, unseen, groups, source, config, seed, result);
            state.stage1_seen = seen;
            state.stage1_unseen = unseen;
        } else {
            const FaultAttributeMatrix previous = state.attributes;
            const Matrix w_prev = state.model.prototypes();
            state.stage = k;
            state.groups = groups;
            state.attributes = stage_attributes(data.attributes, merged(seen, unseen), groups);
            require_column_extension(previous, state.attributes);
            const std::size_t volume = state.replay_volume;
            const std::vector<std::size_t>& new_groups = plan.groups[k - 1];

            if (!new_groups.empty()) {
                const LabeledFeatureBatch old = generate(state.generator, seen, previous, volume,
                                                         stage_seed(seed, k, "generate-relabel"));
                const LabeledFeatureBatch mix = make_batch(old.features, old.labels, state.attributes,
                                                           Provenance::generated);
                state.generator.widen_attributes(state.attributes.matrix().cols() - previous.matrix().cols());
                result.gan_log = train_generative(state.generator, mix, w_prev, previous.schema(), state.store,
                                                  config.gan, stage_seed(seed, k, "gan-train"));
                const LabeledFeatureBatch gen_seen = generate(state.generator, seen, state.attributes, volume,
                                                              stage_seed(seed, k, "generate-seen"));
                const AttributeSchema block_schema = data.attributes.schema().select(new_groups);
                const Eigen::Index m_new = block_schema.coded_width();
                const Matrix w_new = train_prototype_block(
                    Matrix::Zero(w_prev.rows(), m_new), gen_seen.features, gen_seen.attributes.rightCols(m_new),
                    block_schema, config.head, stage_seed(seed, k, "attribute-head"));
                state.model.set_prototypes(hstack(w_prev, w_new), state.attributes.schema());
            } else {
                state.model.set_prototypes(w_prev, state.attributes.schema());
            }
            const LabeledFeatureBatch gen_unseen = generate(state.generator, unseen, state.attributes, volume,
                                                            stage_seed(seed, k, "generate-unseen"));
            state.w_tmp = absorb_generated(state.memory, state.model.prototypes(), {gen_unseen}, state.target_scale);
        }
        finish_stage(state, source, config, seed, result);
        run.final_state = state;
        record(run, state, std::move(result), on_stage);
    }
    run.final_state = std::move(state);
    run.reads = source.reads();
    return run;
}

}  // namespace

// ---- evaluation ------------------------------------------------------------------

void evaluate_state(const StageState& state, const RealDataSource& source, StageResult& result) {
    const std::vector<CategoryId> all = merged(state.seen, state.unseen);
    std::vector<CategoryId> labels;
    const Matrix x = source.test_rows(all, labels);
    const Matrix fe = labels.empty() ? Matrix(0, state.model.feature_dim()) : state.model.features(x);
    const std::set<CategoryId> seen(state.seen.begin(), state.seen.end());

    result.tzsfd.reset();
    result.gzsfd.reset();
    if (!state.unseen.empty() && !labels.empty()) {
        std::vector<std::size_t> idx;
        std::vector<CategoryId> unseen_labels;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (!seen.count(labels[i])) {
                idx.push_back(i);
                unseen_labels.push_back(labels[i]);
            }
        if (!idx.empty()) {
            const auto preds = predict_from_features(gather_rows(fe, idx), state.w_tmp,
                                                     state.attributes.rows_for(state.unseen));
            result.tzsfd = compute_metrics(preds, unseen_labels, seen, Paradigm::tzsfd, state.stage);
            const auto all_preds = predict_from_features(fe, state.w_tmp, state.attributes);
            try {
                result.gzsfd = compute_metrics(all_preds, labels, seen, Paradigm::gzsfd, state.stage);
            } catch (const UndefinedMetric&) {
            }
        }
    }

    const std::vector<CategoryId> stage1 = merged(state.stage1_seen, state.stage1_unseen);
    const std::set<CategoryId> stage1_seen(state.stage1_seen.begin(), state.stage1_seen.end());
    std::vector<std::size_t> idx;
    std::vector<CategoryId> s1_labels;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (stage1_seen.count(labels[i])) {
            idx.push_back(i);
            s1_labels.push_back(labels[i]);
        }
    result.stage1_seen_accuracy = 0.0;
    if (!idx.empty()) {
        const auto preds =
            predict_from_features(gather_rows(fe, idx), state.w_tmp, state.attributes.rows_for(stage1));
        result.stage1_seen_accuracy = accuracy(preds, s1_labels);
    }
}

// ---- entry points --------------------------------------------------------------------

RunResult run_category_increment(const StagePlan& plan, const Dataset& data, const ProtocolConfig& config,
                                 std::uint64_t seed, const StageCallback& on_stage) {
    return category_run(Method::bdmaff, plan, data, config, seed, on_stage);
}

RunResult run_attribute_increment(const StagePlan& plan, const Dataset& data, const ProtocolConfig& config,
                                  std::uint64_t seed, const StageCallback& on_stage) {
    return attribute_run(Method::bdmaff, plan, data, config, seed, on_stage);
}

RunResult run_baseline(Method method, const StagePlan& plan, const Dataset& data, const ProtocolConfig& config,
                       std::uint64_t seed, const StageCallback& on_stage) {
    if (method == Method::bdmaff) throw ConfigError("baseline mode must be jl or sft");
    if (method == Method::jl && !config.retain_data)
        throw ConfigError("joint learning needs retained training data (retain_data)");
    return plan.protocol == Protocol::category_increment ? category_run(method, plan, data, config, seed, on_stage)
                                                         : attribute_run(method, plan, data, config, seed, on_stage);
}

RunResult run_protocol(Method method, const StagePlan& plan, const Dataset& data, const ProtocolConfig& config,
                       std::uint64_t seed, const StageCallback& on_stage) {
    if (method == Method::bdmaff)
        return plan.protocol == Protocol::category_increment
                   ? run_category_increment(plan, data, config, seed, on_stage)
                   : run_attribute_increment(plan, data, config, seed, on_stage);
    return run_baseline(method, plan, data, config, seed, on_stage);
}

}  // namespace izsfd
