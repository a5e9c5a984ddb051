#include "izsfd/diagnosis.hpp"

#include "izsfd/error.hpp"
#include "izsfd/losses.hpp"
#include "izsfd/optim.hpp"
#include "izsfd/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace izsfd {

Standardizer Standardizer::fit(const Matrix& x) {
    if (x.rows() == 0) throw InvalidInput("cannot fit a standardizer on zero rows");
    Standardizer s;
    s.mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - s.mean;
    s.scale = (centered.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt().matrix();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
        if (!(s.scale(j) > 1e-12)) s.scale(j) = 1.0;
    return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
    if (x.cols() != mean.size()) throw InvalidInput("standardizer width mismatch");
    return ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

DiagnosisModel::DiagnosisModel(Eigen::Index input_dim, AttributeSchema schema, std::vector<CategoryId> class_ids,
                               const ModelShape& shape, std::uint64_t seed)
    : schema_(std::move(schema)), class_ids_(std::move(class_ids)) {
    if (class_ids_.empty()) throw InvalidInput("diagnosis model needs at least one category");
    Rng rng = Rng::stream(seed, "diagnosis-init");
    extractor_ = Mlp({input_dim, shape.fe_hidden, shape.feature_dim}, rng);
    classifier_ = Mlp({shape.feature_dim, static_cast<Eigen::Index>(class_ids_.size())}, rng);
    const double bound = 1.0 / std::sqrt(static_cast<double>(shape.feature_dim));
    prototypes_ = Matrix(shape.feature_dim, schema_.coded_width());
    for (Eigen::Index i = 0; i < prototypes_.rows(); ++i)
        for (Eigen::Index j = 0; j < prototypes_.cols(); ++j) prototypes_(i, j) = rng.uniform(-bound, bound);
    standardizer_.mean = RowVector::Zero(input_dim);
    standardizer_.scale = RowVector::Ones(input_dim);
}

void DiagnosisModel::set_prototypes(Matrix w, AttributeSchema schema) {
    if (w.rows() != feature_dim()) throw InvalidInput("prototype matrix rows must equal the feature width");
    if (w.cols() != schema.coded_width()) throw SchemaMismatch("prototype matrix columns must equal the coded width");
    require_finite(w, "prototype matrix");
    prototypes_ = std::move(w);
    schema_ = std::move(schema);
}

Matrix DiagnosisModel::features(const Matrix& x) const {
    if (x.cols() != input_dim())
        throw InvalidInput("input has " + std::to_string(x.cols()) + " columns, model expects " +
                           std::to_string(input_dim()));
    return mlp_forward(extractor_, standardizer_.apply(x));
}

DiagnosisModel DiagnosisModel::restore(AttributeSchema schema, std::vector<CategoryId> class_ids, Mlp extractor,
                                       Mlp classifier, Matrix prototypes, Standardizer standardizer, bool frozen) {
    DiagnosisModel m;
    m.schema_ = std::move(schema);
    m.class_ids_ = std::move(class_ids);
    m.extractor_ = std::move(extractor);
    m.classifier_ = std::move(classifier);
    m.standardizer_ = std::move(standardizer);
    m.frozen_ = frozen;
    m.set_prototypes(std::move(prototypes), m.schema_);
    if (m.classifier_.input_width() != m.feature_dim() ||
        m.classifier_.output_width() != static_cast<Eigen::Index>(m.class_ids_.size()))
        throw InvalidInput("classifier shape inconsistent with the extractor");
    return m;
}

struct PretrainAccess {
    static PretrainReport run(DiagnosisModel& model, const Matrix& x, std::span<const CategoryId> labels,
                              const FaultAttributeMatrix& attributes, const TrainConfig& config, std::uint64_t seed) {
        if (model.frozen_) throw ContractViolation("feature extractor is frozen; pretraining runs once");
        if (x.rows() == 0) throw InvalidInput("pretraining data is empty");
        if (static_cast<std::size_t>(x.rows()) != labels.size()) throw InvalidInput("label count mismatch");
        if (attributes.schema() != model.schema_) throw SchemaMismatch("attribute matrix schema differs from model");
        require_finite(x, "pretraining input");

        std::vector<Eigen::Index> classes(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const auto it = std::find(model.class_ids_.begin(), model.class_ids_.end(), labels[i]);
            if (it == model.class_ids_.end())
                throw InvalidInput("label " + std::to_string(labels[i]) + " is not a pretraining category");
            classes[i] = it - model.class_ids_.begin();
        }

        model.standardizer_ = Standardizer::fit(x);
        const Matrix xs = model.standardizer_.apply(x);
        const Matrix z = attributes.labels_for(labels);

        std::vector<Matrix> params = model.extractor_.parameters();
        const std::size_t n_fe = params.size();
        for (const auto& p : model.classifier_.parameters()) params.push_back(p);
        params.push_back(model.prototypes_);

        const auto fe_widths = model.extractor_.widths();
        const auto cls_widths = model.classifier_.widths();
        const AttributeSchema& schema = model.schema_;

        auto loss_on = [&](ad::Tape& tape, const std::vector<ad::Var>& vars, const Matrix& xb,
                           std::span<const Eigen::Index> cb, const Matrix& zb) {
            const std::span<const ad::Var> all(vars);
            const ad::Var fe = mlp_forward(all.subspan(0, n_fe), tape.constant(xb));
            const ad::Var logits = mlp_forward(all.subspan(n_fe, 2), fe);
            const ad::Var att = ad::matmul(fe, vars.back());
            return ad::add(cross_entropy(logits, cb), grouped_softmax_nll(att, zb, schema));
        };
        auto full_loss = [&] {
            ad::Tape tape;
            std::vector<ad::Var> vars;
            for (const auto& p : params) vars.push_back(tape.constant(p));
            return loss_on(tape, vars, xs, classes, z).scalar();
        };

        PretrainReport report;
        report.initial_loss = full_loss();

        OptimState opt(AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
        Rng rng = Rng::stream(seed, "pretrain-shuffle");
        std::vector<std::size_t> order(static_cast<std::size_t>(x.rows()));
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t batch = static_cast<std::size_t>(std::max(1, config.batch_size));

        for (int epoch = 0; epoch < config.epochs; ++epoch) {
            rng.shuffle(order);
            double epoch_sum = 0.0;
            std::size_t batches = 0;
            for (std::size_t start = 0; start < order.size(); start += batch) {
                const std::size_t end = std::min(order.size(), start + batch);
                const std::span<const std::size_t> idx(order.data() + start, end - start);
                std::vector<Eigen::Index> cb;
                for (auto i : idx) cb.push_back(classes[i]);

                ad::Tape tape;
                std::vector<ad::Var> vars;
                for (const auto& p : params) vars.push_back(tape.parameter(p));
                const ad::Var loss = loss_on(tape, vars, gather_rows(xs, idx), cb, gather_rows(z, idx));
                opt.step(params, tape.backward(loss, vars));
                epoch_sum += loss.scalar();
                ++batches;
            }
            report.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
        }

        model.extractor_ = Mlp::from_parameters(fe_widths, {params.begin(), params.begin() + n_fe});
        model.classifier_ = Mlp::from_parameters(cls_widths, {params.begin() + n_fe, params.begin() + n_fe + 2});
        model.prototypes_ = params.back();
        model.frozen_ = true;
        report.final_loss = full_loss();
        return report;
    }
};

PretrainReport pretrain(DiagnosisModel& model, const Matrix& x, std::span<const CategoryId> labels,
                        const FaultAttributeMatrix& attributes, const TrainConfig& config, std::uint64_t seed) {
    return PretrainAccess::run(model, x, labels, attributes, config, seed);
}

Matrix attribute_logits(const DiagnosisModel& model, const Matrix& x) {
    return model.features(x) * model.prototypes();
}

std::vector<CategoryId> predict_from_features(const Matrix& features, const Matrix& w,
                                              const FaultAttributeMatrix& attributes) {
    if (features.cols() != w.rows()) throw InvalidInput("feature width does not match prototype rows");
    if (attributes.matrix().cols() != w.cols())
        throw InvalidInput("attribute matrix has " + std::to_string(attributes.matrix().cols()) +
                           " columns, prototype matrix has " + std::to_string(w.cols()));
    if (attributes.size() == 0) throw InvalidInput("no candidate categories");
    const Matrix scores = features * w * attributes.matrix().transpose();
    const auto& ids = attributes.ids();
    std::vector<CategoryId> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < ids.size(); ++c) {
            const double s = scores(r, static_cast<Eigen::Index>(c));
            const double b = scores(r, static_cast<Eigen::Index>(best));
            if (s > b || (s == b && ids[c] < ids[best])) best = c;
        }
        out[static_cast<std::size_t>(r)] = ids[best];
    }
    return out;
}

std::vector<CategoryId> predict(const DiagnosisModel& model, const Matrix& x, const FaultAttributeMatrix& attributes) {
    return predict_from_features(model.features(x), model.prototypes(), attributes);
}

Matrix train_prototype_block(Matrix init, const Matrix& features, const Matrix& targets, const AttributeSchema& schema,
                             const TrainConfig& config, std::uint64_t seed) {
    if (features.rows() == 0) throw InvalidInput("no features to train on");
    if (init.rows() != features.cols() || init.cols() != schema.coded_width())
        throw SchemaMismatch("initial prototype block has the wrong shape");
    std::vector<Matrix> params{std::move(init)};
    OptimState opt(AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
    Rng rng = Rng::stream(seed, "prototype-block-shuffle");
    std::vector<std::size_t> order(static_cast<std::size_t>(features.rows()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = static_cast<std::size_t>(std::max(1, config.batch_size));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            ad::Tape tape;
            const ad::Var w = tape.parameter(params[0]);
            const ad::Var logits = ad::matmul(tape.constant(gather_rows(features, idx)), w);
            const ad::Var loss = grouped_softmax_nll(logits, gather_rows(targets, idx), schema);
            const std::vector<ad::Var> wrt{w};
            opt.step(params, tape.backward(loss, wrt));
        }
    }
    return params[0];
}

}  // namespace izsfd
