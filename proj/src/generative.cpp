#include "izsfd/generative.hpp"

#include "izsfd/error.hpp"
#include "izsfd/losses.hpp"
#include "izsfd/optim.hpp"
#include "izsfd/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace izsfd {

void GanConfig::validate() const {
    if (!(lambda_gp >= 0.0) || !(lambda_att >= 0.0) || !(lambda_fe >= 0.0))
        throw ConfigError("gan loss weights must be non-negative");
    if (!(alpha_limit >= 0.0)) throw ConfigError("alpha_limit must be non-negative");
    if (critic_steps < 1) throw ConfigError("critic_steps must be at least 1");
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

LabeledFeatureBatch make_batch(Matrix features, std::vector<CategoryId> labels, const FaultAttributeMatrix& attributes,
                               Provenance provenance) {
    if (features.rows() != static_cast<Eigen::Index>(labels.size()))
        throw InvalidInput("feature and label counts differ");
    LabeledFeatureBatch b;
    b.attributes = attributes.labels_for(labels);
    b.features = std::move(features);
    b.labels = std::move(labels);
    b.provenance = provenance;
    return b;
}

LabeledFeatureBatch concat_batches(const std::vector<LabeledFeatureBatch>& parts) {
    LabeledFeatureBatch out;
    std::vector<Matrix> f, z;
    for (const auto& p : parts) {
        if (p.size() == 0) continue;
        f.push_back(p.features);
        z.push_back(p.attributes);
        out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
        if (p.provenance == Provenance::generated) out.provenance = Provenance::generated;
    }
    out.features = vstack(f);
    out.attributes = vstack(z);
    return out;
}

// ---- model -------------------------------------------------------------------

GenerativeModel::GenerativeModel(Eigen::Index feature_dim, Eigen::Index attribute_dim, const ModelShape& shape,
                                 std::uint64_t seed)
    : noise_dim_(shape.noise_dim) {
    Rng rng = Rng::stream(seed, "generative-init");
    std::vector<Eigen::Index> g{shape.noise_dim + attribute_dim};
    g.insert(g.end(), shape.generator_hidden.begin(), shape.generator_hidden.end());
    g.push_back(feature_dim);
    std::vector<Eigen::Index> d{feature_dim + attribute_dim};
    d.insert(d.end(), shape.critic_hidden.begin(), shape.critic_hidden.end());
    d.push_back(1);
    generator_ = Mlp(g, rng);
    critic_ = Mlp(d, rng);
    check();
}

GenerativeModel::GenerativeModel(Mlp generator, Mlp critic, Eigen::Index noise_dim)
    : generator_(std::move(generator)), critic_(std::move(critic)), noise_dim_(noise_dim) {
    check();
}

void GenerativeModel::check() const {
    if (noise_dim_ < 1 || generator_.input_width() <= noise_dim_)
        throw InvalidInput("generator input must hold noise and attributes");
    if (critic_.output_width() != 1) throw InvalidInput("critic must have a scalar output");
    if (critic_.input_width() != feature_dim() + attribute_dim())
        throw InvalidInput("critic input must hold a feature row and attributes");
}

void GenerativeModel::widen_attributes(Eigen::Index extra) {
    generator_ = widen_input(generator_, extra);
    critic_ = widen_input(critic_, extra);
    check();
}

// ---- prototypes -------------------------------------------------------------

const FeaturePrototypeStore::Entry& FeaturePrototypeStore::at(CategoryId id) const {
    const auto it = entries_.find(id);
    if (it == entries_.end()) throw MissingPrototype("no feature prototype for category " + std::to_string(id));
    return it->second;
}

std::vector<CategoryId> FeaturePrototypeStore::ids() const {
    std::vector<CategoryId> out;
    for (const auto& [id, _] : entries_) out.push_back(id);
    return out;
}

void FeaturePrototypeStore::insert(CategoryId id, Entry entry) {
    if (contains(id)) throw FrozenPrototype("prototype for category " + std::to_string(id) + " already written");
    require_finite(entry.prototype, "prototype");
    entries_.emplace(id, std::move(entry));
}

bool FeaturePrototypeStore::operator==(const FeaturePrototypeStore& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (const auto& [id, e] : entries_) {
        const auto it = other.entries_.find(id);
        if (it == other.entries_.end() || it->second.count != e.count || it->second.prototype != e.prototype)
            return false;
    }
    return true;
}

FeaturePrototypeStore update_prototypes(const FeaturePrototypeStore& store, const Matrix& features,
                                        std::span<const CategoryId> labels) {
    if (features.rows() != static_cast<Eigen::Index>(labels.size()))
        throw InvalidInput("feature and label counts differ");
    std::map<CategoryId, std::pair<RowVector, std::size_t>> sums;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& [sum, n] = sums[labels[i]];
        if (n == 0) sum = RowVector::Zero(features.cols());
        sum += features.row(static_cast<Eigen::Index>(i));
        ++n;
    }
    FeaturePrototypeStore next = store;
    for (auto& [id, sn] : sums)
        next.insert(id, {sn.first / static_cast<double>(sn.second), sn.second});
    return next;
}

// ---- generation --------------------------------------------------------------

LabeledFeatureBatch generate(const GenerativeModel& model, std::span<const CategoryId> ids,
                             const FaultAttributeMatrix& attributes, std::size_t count, std::uint64_t seed) {
    if (attributes.matrix().cols() != model.attribute_dim())
        throw SchemaMismatch("attribute matrix width does not match the generator");
    std::vector<CategoryId> labels;
    labels.reserve(ids.size() * count);
    for (auto id : ids) {
        if (!attributes.contains(id))
            throw InvalidInput("cannot generate for category " + std::to_string(id) + ": no attribute row");
        labels.insert(labels.end(), count, id);
    }
    const auto n = static_cast<Eigen::Index>(labels.size());
    Rng rng = Rng::stream(seed, "generate-noise");
    Matrix noise(n, model.noise_dim());
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < noise.cols(); ++j) noise(i, j) = rng.normal();

    LabeledFeatureBatch batch;
    batch.attributes = attributes.labels_for(labels);
    batch.features = n == 0 ? Matrix(0, model.feature_dim())
                            : mlp_forward(model.generator(), hstack(noise, batch.attributes));
    batch.labels = std::move(labels);
    batch.provenance = Provenance::generated;
    return batch;
}

// ---- losses --------------------------------------------------------------------

CriticTerms critic_terms(ad::Tape& tape, std::span<const ad::Var> critic_params, const Matrix& real,
                         const Matrix& fake, const Matrix& z, const Vector& gamma, double lambda) {
    if (real.rows() != fake.rows() || real.cols() != fake.cols())
        throw InvalidInput("real and generated batches differ in shape");
    if (z.rows() != real.rows()) throw InvalidInput("attribute rows not aligned with the batch");
    if (gamma.size() != real.rows()) throw InvalidInput("one interpolation weight per row is required");
    if (real.rows() == 0) throw InvalidInput("empty batch");

    const ad::Var zc = tape.constant(z);
    const ad::Var d_real = mlp_forward(critic_params, ad::concat_cols(tape.constant(real), zc));
    const ad::Var d_fake = mlp_forward(critic_params, ad::concat_cols(tape.constant(fake), zc));
    const ad::Var wasserstein = ad::sub(ad::mean(d_real), ad::mean(d_fake));

    const Matrix mixed = (real.array().colwise() * gamma.array() +
                          fake.array().colwise() * (1.0 - gamma.array())).matrix();
    const ad::Var x_hat = tape.parameter(mixed);
    const ad::Var d_hat = ad::sum(mlp_forward(critic_params, ad::concat_cols(x_hat, zc)));
    const std::vector<ad::Var> wrt{x_hat};
    const ad::Var grad_x = tape.grad(d_hat, wrt).front();
    const ad::Var gap = ad::add_scalar(ad::row_norm(grad_x), -1.0);
    const ad::Var penalty = ad::scale(ad::mean(ad::square(gap)), lambda);

    return CriticTerms{ad::sub(penalty, wasserstein), wasserstein, penalty};
}

WganTerms wgan_gp_loss(const Mlp& critic, const Matrix& real, const Matrix& fake, const Matrix& z, double lambda,
                       const Vector& gamma) {
    ad::Tape tape;
    const auto params = bind_parameters(tape, critic, false);
    const CriticTerms t = critic_terms(tape, params, real, fake, z, gamma, lambda);
    return WganTerms{t.loss.scalar(), t.wasserstein.scalar(), t.penalty.scalar()};
}

WganTerms wgan_gp_loss(const Mlp& critic, const Matrix& real, const Matrix& fake, const Matrix& z, double lambda,
                       std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "gp-interpolation");
    Vector gamma(real.rows());
    for (Eigen::Index i = 0; i < gamma.size(); ++i) gamma(i) = rng.uniform();
    return wgan_gp_loss(critic, real, fake, z, lambda, gamma);
}

namespace {

Matrix leading_targets(const Matrix& z, const Matrix& w) {
    if (w.cols() > z.cols()) throw SchemaMismatch("prototype matrix is wider than the attribute labels");
    return z.leftCols(w.cols());
}

}  // namespace

ad::Var anti_attribute_loss(const ad::Var& fake, const Matrix& z, const Matrix& w, const AttributeSchema& schema) {
    if (w.cols() != schema.coded_width()) throw SchemaMismatch("prototype matrix does not match its schema");
    ad::Tape& tape = *fake.tape();
    const ad::Var logits = ad::matmul(fake, tape.constant(w));
    return grouped_softmax_nll(logits, leading_targets(z, w), schema);
}

double anti_attribute_loss(const Matrix& fake, const Matrix& z, const Matrix& w, const AttributeSchema& schema) {
    if (w.cols() != schema.coded_width()) throw SchemaMismatch("prototype matrix does not match its schema");
    if (fake.cols() != w.rows()) throw InvalidInput("feature width does not match prototype rows");
    return grouped_softmax_nll(fake * w, leading_targets(z, w), schema);
}

namespace {

Matrix prototype_rows(std::span<const CategoryId> labels, const FeaturePrototypeStore& store, Eigen::Index width) {
    Matrix p(static_cast<Eigen::Index>(labels.size()), width);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& proto = store.at(labels[i]).prototype;
        if (proto.size() != width) throw InvalidInput("prototype width does not match the feature width");
        p.row(static_cast<Eigen::Index>(i)) = proto;
    }
    return p;
}

}  // namespace

ad::Var anti_feature_prototype_loss(const ad::Var& fake, std::span<const CategoryId> labels,
                                    const FeaturePrototypeStore& store, double alpha_limit) {
    if (fake.rows() != static_cast<Eigen::Index>(labels.size())) throw InvalidInput("label count mismatch");
    if (fake.rows() == 0) throw InvalidInput("empty batch");
    ad::Tape& tape = *fake.tape();
    const Matrix protos = prototype_rows(labels, store, fake.cols());
    if (std::isinf(alpha_limit)) return tape.constant(Matrix::Zero(1, 1));
    const ad::Var dist = ad::row_norm(ad::sub(fake, tape.constant(protos)));
    return ad::mean(ad::relu(ad::add_scalar(dist, -alpha_limit)));
}

double anti_feature_prototype_loss(const Matrix& fake, std::span<const CategoryId> labels,
                                   const FeaturePrototypeStore& store, double alpha_limit) {
    if (fake.rows() != static_cast<Eigen::Index>(labels.size())) throw InvalidInput("label count mismatch");
    if (fake.rows() == 0) throw InvalidInput("empty batch");
    const Matrix protos = prototype_rows(labels, store, fake.cols());
    if (std::isinf(alpha_limit)) return 0.0;
    const Vector dist = (fake - protos).rowwise().norm();
    return (dist.array() - alpha_limit).max(0.0).mean();
}

// ---- training ----------------------------------------------------------------

GanTrainingLog train_generative(GenerativeModel& model, const LabeledFeatureBatch& mix, const Matrix& w,
                                const AttributeSchema& w_schema, const FeaturePrototypeStore& store,
                                const GanConfig& config, std::uint64_t seed) {
    config.validate();
    if (mix.size() == 0) throw InvalidInput("empty generative training mix");
    if (mix.features.cols() != model.feature_dim()) throw InvalidInput("training features do not match generator");
    if (mix.attributes.cols() != model.attribute_dim())
        throw SchemaMismatch("training attributes do not match generator");
    if (config.lambda_att > 0.0) {
        if (w.rows() != model.feature_dim()) throw InvalidInput("prototype matrix rows must equal feature width");
        (void)leading_targets(mix.attributes, w);
    }
    if (config.lambda_fe > 0.0)
        for (auto id : mix.labels) (void)store.at(id);

    OptimState opt_g(AdamConfig::adversarial(config.learning_rate));
    OptimState opt_d(AdamConfig::adversarial(config.learning_rate));
    Rng rng = Rng::stream(seed, "gan-train");

    const auto noise_dim = model.noise_dim();
    auto noise = [&](Eigen::Index rows) {
        Matrix m(rows, noise_dim);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < noise_dim; ++j) m(i, j) = rng.normal();
        return m;
    };

    std::vector<std::size_t> order(mix.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);

    GanTrainingLog log;
    double last_wasserstein = 0.0;
    double last_penalty = 0.0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const auto rows = static_cast<Eigen::Index>(idx.size());
            const Matrix real = gather_rows(mix.features, idx);
            const Matrix z = gather_rows(mix.attributes, idx);
            std::vector<CategoryId> labels;
            labels.reserve(idx.size());
            for (auto i : idx) labels.push_back(mix.labels[i]);

            // Critic update.
            {
                const Matrix fake = mlp_forward(model.generator(), hstack(noise(rows), z));
                Vector gamma(rows);
                for (Eigen::Index i = 0; i < rows; ++i) gamma(i) = rng.uniform();
                ad::Tape tape;
                const auto params = bind_parameters(tape, model.critic(), true);
                const CriticTerms t = critic_terms(tape, params, real, fake, z, gamma, config.lambda_gp);
                opt_d.step(model.critic().parameters(), tape.backward(t.loss, params));
                last_wasserstein = t.wasserstein.scalar();
                last_penalty = t.penalty.scalar();
                ++log.critic_updates;
            }
            if (log.critic_updates % static_cast<std::size_t>(config.critic_steps) != 0) continue;

            // Generator update on the same conditioning rows.
            ad::Tape tape;
            const auto g_params = bind_parameters(tape, model.generator(), true);
            const auto d_params = bind_parameters(tape, model.critic(), false);
            const ad::Var zc = tape.constant(z);
            const ad::Var fake = mlp_forward(g_params, ad::concat_cols(tape.constant(noise(rows)), zc));
            const ad::Var adversarial = ad::neg(ad::mean(mlp_forward(d_params, ad::concat_cols(fake, zc))));
            ad::Var total = adversarial;
            GanStepRecord rec;
            if (config.lambda_att > 0.0) {
                const ad::Var att = anti_attribute_loss(fake, z, w, w_schema);
                total = ad::add(total, ad::scale(att, config.lambda_att));
                rec.anti_att = att.scalar();
            }
            if (config.lambda_fe > 0.0) {
                const ad::Var fe = anti_feature_prototype_loss(fake, labels, store, config.alpha_limit);
                total = ad::add(total, ad::scale(fe, config.lambda_fe));
                rec.anti_fe = fe.scalar();
            }
            opt_g.step(model.generator().parameters(), tape.backward(total, g_params));

            rec.step = log.steps.size();
            rec.wasserstein = last_wasserstein;
            rec.penalty = last_penalty;
            rec.adversarial = adversarial.scalar();
            rec.generator_loss = total.scalar();
            log.steps.push_back(rec);
        }
    }
    return log;
}

std::map<CategoryId, double> prototype_distances(const GenerativeModel& model, std::span<const CategoryId> ids,
                                                 const FaultAttributeMatrix& attributes,
                                                 const FeaturePrototypeStore& store, std::size_t count,
                                                 std::uint64_t seed) {
    std::map<CategoryId, double> out;
    if (count == 0) throw InvalidInput("prototype distance needs at least one generated row");
    const LabeledFeatureBatch batch = generate(model, ids, attributes, count, seed);
    for (std::size_t c = 0; c < ids.size(); ++c) {
        const RowVector mean =
            batch.features.middleRows(static_cast<Eigen::Index>(c * count), static_cast<Eigen::Index>(count))
                .colwise()
                .mean();
        out[ids[c]] = (mean - store.at(ids[c]).prototype).norm();
    }
    return out;
}

}  // namespace izsfd
