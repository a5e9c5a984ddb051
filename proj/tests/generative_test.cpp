#include "oracles.hpp"

#include "izsfd/error.hpp"
#include "izsfd/generative.hpp"
#include "izsfd/losses.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace izsfd {
namespace {

FaultAttributeMatrix two_categories() {
    const AttributeSchema schema({2});
    Matrix rows(2, 2);
    rows << 1, 0, 0, 1;
    return FaultAttributeMatrix(schema, {0, 1}, rows);
}

ModelShape tiny_shape() {
    ModelShape s;
    s.noise_dim = 4;
    s.generator_hidden = {16, 16};
    s.critic_hidden = {16, 8};
    return s;
}

Mlp constant_critic(Eigen::Index in, double value) {
    Mlp net = Mlp::zeros({in, 3, 1});
    net.bias(1)(0, 0) = value;
    return net;
}

// D(x, z) = x_0: a single linear layer reading the first feature only.
Mlp first_feature_critic(Eigen::Index features, Eigen::Index attrs) {
    Mlp net = Mlp::zeros({features + attrs, 1});
    net.weight(0)(0, 0) = 1.0;
    return net;
}

// ---- generation ----------------------------------------------------------------

TEST(Generate, CountZeroIsEmpty) {
    const auto a = two_categories();
    const GenerativeModel g(3, 2, tiny_shape(), 1);
    const std::vector<CategoryId> ids{0, 1};
    const auto batch = generate(g, ids, a, 0, 5);
    EXPECT_EQ(batch.size(), 0u);
    EXPECT_EQ(batch.provenance, Provenance::generated);
}

TEST(Generate, SeededAndOrdered) {
    const auto a = two_categories();
    const GenerativeModel g(3, 2, tiny_shape(), 1);
    const std::vector<CategoryId> ids{1, 0};
    const auto b1 = generate(g, ids, a, 4, 5);
    const auto b2 = generate(g, ids, a, 4, 5);
    EXPECT_EQ(b1.features, b2.features);
    EXPECT_EQ(b1.labels, (std::vector<CategoryId>{1, 1, 1, 1, 0, 0, 0, 0}));
    EXPECT_EQ(b1.attributes.row(0), a.row(1));
    EXPECT_NE(generate(g, ids, a, 4, 6).features, b1.features);
}

TEST(Generate, ZeroWeightsGiveOutputBias) {
    const auto a = two_categories();
    Mlp gen = Mlp::zeros({4 + 2, 5, 3});
    gen.bias(1) << 0.5, -1.0, 2.0;
    const GenerativeModel g(gen, Mlp::zeros({3 + 2, 4, 1}), 4);
    const std::vector<CategoryId> ids{0, 1};
    const auto batch = generate(g, ids, a, 3, 2);
    for (Eigen::Index r = 0; r < batch.features.rows(); ++r) EXPECT_EQ(batch.features.row(r), gen.bias(1));
}

TEST(Generate, UnknownCategoryRejected) {
    const auto a = two_categories();
    const GenerativeModel g(3, 2, tiny_shape(), 1);
    const std::vector<CategoryId> ids{7};
    EXPECT_THROW(generate(g, ids, a, 1, 1), InvalidInput);
}

TEST(Generate, WideningKeepsGeneratedFeatures) {
    const auto a = two_categories();
    GenerativeModel g(3, 2, tiny_shape(), 1);
    const std::vector<CategoryId> ids{0, 1};
    const auto before = generate(g, ids, a, 3, 2);

    GenerativeModel wide = g;
    wide.widen_attributes(3);
    EXPECT_EQ(wide.attribute_dim(), 5);
    const AttributeSchema schema({2, 3});
    Matrix rows(2, 5);
    rows << 1, 0, 1, 0, 0,
            0, 1, 0, 1, 0;
    const FaultAttributeMatrix a2(schema, {0, 1}, rows);
    // New columns enter with zero weight, so they change nothing until trained.
    EXPECT_LE(max_abs_diff(generate(wide, ids, a2, 3, 2).features, before.features), 1e-12);
}

// ---- adversarial loss -----------------------------------------------------------

TEST(WganGp, ConstantCritic) {
    Rng rng(1);
    const Matrix real = oracle::random_matrix(rng, 5, 3), fake = oracle::random_matrix(rng, 5, 3);
    const Matrix z = oracle::random_matrix(rng, 5, 2);
    const WganTerms t = wgan_gp_loss(constant_critic(5, 0.7), real, fake, z, 10.0, std::uint64_t{3});
    EXPECT_NEAR(t.wasserstein, 0.0, 1e-15);
    EXPECT_NEAR(t.penalty, 10.0, 1e-12);
    EXPECT_NEAR(t.critic_loss, 10.0, 1e-12);
}

TEST(WganGp, LinearCritic) {
    Rng rng(2);
    const Matrix real = oracle::random_matrix(rng, 6, 1), fake = oracle::random_matrix(rng, 6, 1);
    const Matrix z = oracle::random_matrix(rng, 6, 2);
    const WganTerms t = wgan_gp_loss(first_feature_critic(1, 2), real, fake, z, 10.0, std::uint64_t{4});
    EXPECT_NEAR(t.wasserstein, real.mean() - fake.mean(), 1e-12);
    EXPECT_NEAR(t.penalty, 0.0, 1e-12);
}

TEST(WganGp, GammaOneInterpolatesAtRealRows) {
    Rng rng(3);
    const Mlp critic({3 + 2, 4, 1}, rng);
    const Matrix real = oracle::random_matrix(rng, 4, 3), fake = oracle::random_matrix(rng, 4, 3);
    const Matrix z = oracle::random_matrix(rng, 4, 2);
    const WganTerms t = wgan_gp_loss(critic, real, fake, z, 10.0, Vector::Ones(4));
    double expect = 0.0;
    for (Eigen::Index r = 0; r < 4; ++r) {
        Vector in(5);
        in << real.row(r).transpose(), z.row(r).transpose();
        const double norm = input_gradient(critic, in).head(3).norm();
        expect += (norm - 1.0) * (norm - 1.0);
    }
    EXPECT_NEAR(t.penalty, 10.0 * expect / 4.0, 1e-12);
}

TEST(WganGp, BatchMismatchRejected) {
    const Mlp critic = constant_critic(5, 0.0);
    EXPECT_THROW(wgan_gp_loss(critic, Matrix::Zero(3, 3), Matrix::Zero(2, 3), Matrix::Zero(3, 2), 10.0, std::uint64_t{1}),
                 InvalidInput);
    EXPECT_THROW(wgan_gp_loss(critic, Matrix::Zero(3, 3), Matrix::Zero(3, 3), Matrix::Zero(2, 2), 10.0, std::uint64_t{1}),
                 InvalidInput);
}

TEST(WganGp, SeededInterpolation) {
    Rng rng(4);
    const Mlp critic({5, 4, 1}, rng);
    const Matrix real = oracle::random_matrix(rng, 4, 3), fake = oracle::random_matrix(rng, 4, 3);
    const Matrix z = oracle::random_matrix(rng, 4, 2);
    EXPECT_EQ(wgan_gp_loss(critic, real, fake, z, 10.0, std::uint64_t{8}).penalty,
              wgan_gp_loss(critic, real, fake, z, 10.0, std::uint64_t{8}).penalty);
}

TEST(WganGp, ParameterGradientsMatchFiniteDifferences) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) EXPECT_LE(oracle::gradient_penalty_error(seed), 1e-3) << seed;
}

// ---- anti-forgetting terms ------------------------------------------------------

TEST(AntiAttribute, SaturatedIsNearZero) {
    const AttributeSchema schema({2});
    Matrix fake(1, 2), z(1, 2);
    fake << 1.0, 0.0;
    z << 1.0, 0.0;
    const Matrix w = 100.0 * (Matrix(2, 2) << 1, -1, -1, 1).finished();
    EXPECT_LT(anti_attribute_loss(fake, z, w, schema), 1e-9);
}

TEST(AntiAttribute, ZeroPrototypesGiveSumOfLogCardinalities) {
    const AttributeSchema schema({2, 3, 4});
    Rng rng(5);
    const Matrix fake = oracle::random_matrix(rng, 3, 4);
    Matrix z = Matrix::Zero(3, 9);
    for (int r = 0; r < 3; ++r) {
        z(r, 0) = 1;
        z(r, 2 + r) = 1;
        z(r, 5 + r) = 1;
    }
    EXPECT_NEAR(anti_attribute_loss(fake, z, Matrix::Zero(4, 9), schema),
                std::log(2.0) + std::log(3.0) + std::log(4.0), 1e-12);
}

TEST(AntiAttribute, EqualsGroupedNllOfProduct) {
    const AttributeSchema schema({2, 3});
    Rng rng(6);
    const Matrix fake = oracle::random_matrix(rng, 4, 3), w = oracle::random_matrix(rng, 3, 5);
    Matrix z = Matrix::Zero(4, 5);
    for (int r = 0; r < 4; ++r) {
        z(r, r % 2) = 1;
        z(r, 2 + r % 3) = 1;
    }
    EXPECT_NEAR(anti_attribute_loss(fake, z, w, schema), grouped_softmax_nll(fake * w, z, schema), 1e-14);
    ad::Tape tape;
    EXPECT_NEAR(anti_attribute_loss(tape.parameter(fake), z, w, schema).scalar(),
                grouped_softmax_nll(fake * w, z, schema), 1e-14);
}

TEST(AntiAttribute, SchemaMismatchRejected) {
    const AttributeSchema schema({2, 3});
    EXPECT_THROW(anti_attribute_loss(Matrix::Zero(1, 3), Matrix::Zero(1, 5), Matrix::Zero(3, 4), schema),
                 SchemaMismatch);
}

FeaturePrototypeStore origin_store() {
    const std::vector<CategoryId> labels{0};
    return update_prototypes({}, Matrix::Zero(1, 2), labels);
}

TEST(AntiFeature, Examples) {
    const auto store = origin_store();
    const std::vector<CategoryId> one{0}, two{0, 0};
    EXPECT_EQ(anti_feature_prototype_loss(Matrix::Zero(1, 2), one, store, 1.0), 0.0);
    EXPECT_NEAR(anti_feature_prototype_loss((Matrix(1, 2) << 1.5, 0).finished(), one, store, 1.0), 0.5, 1e-15);
    EXPECT_NEAR(anti_feature_prototype_loss((Matrix(2, 2) << 0.5, 0, 0, 2.0).finished(), two, store, 1.0), 0.5,
                1e-15);
}

TEST(AntiFeature, InfiniteLimitIsZero) {
    const auto store = origin_store();
    const std::vector<CategoryId> one{0};
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_EQ(anti_feature_prototype_loss((Matrix(1, 2) << 50, 50).finished(), one, store, inf), 0.0);
    ad::Tape tape;
    EXPECT_EQ(anti_feature_prototype_loss(tape.parameter((Matrix(1, 2) << 50, 50).finished()), one, store, inf)
                  .scalar(),
              0.0);
}

TEST(AntiFeature, MissingPrototypeRejected) {
    const auto store = origin_store();
    const std::vector<CategoryId> other{3};
    EXPECT_THROW(anti_feature_prototype_loss(Matrix::Zero(1, 2), other, store, 1.0), MissingPrototype);
}

TEST(AntiFeature, TapeMatchesPlain) {
    Rng rng(7);
    const Matrix feats = oracle::random_matrix(rng, 6, 2, 2.0);
    const std::vector<CategoryId> labels{0, 0, 0, 0, 0, 0};
    const auto store = origin_store();
    ad::Tape tape;
    EXPECT_NEAR(anti_feature_prototype_loss(tape.parameter(feats), labels, store, 1.0).scalar(),
                anti_feature_prototype_loss(feats, labels, store, 1.0), 1e-14);
}

// ---- prototype store ------------------------------------------------------------

TEST(Prototypes, MeansAndCounts) {
    const std::vector<CategoryId> one{4};
    const Matrix x = (Matrix(1, 2) << 3, -1).finished();
    EXPECT_EQ(update_prototypes({}, x, one).at(4).prototype, x.row(0));

    const std::vector<CategoryId> labels{1, 1};
    const auto s = update_prototypes({}, (Matrix(2, 2) << 0, 0, 2, 2).finished(), labels);
    EXPECT_EQ(s.at(1).prototype, (RowVector(2) << 1, 1).finished());
    EXPECT_EQ(s.at(1).count, 2u);
}

TEST(Prototypes, MatchNaiveSummation) {
    Rng rng(8);
    const Matrix x = oracle::random_matrix(rng, 50, 4, 10.0);
    std::vector<CategoryId> labels(50);
    for (int i = 0; i < 50; ++i) labels[static_cast<std::size_t>(i)] = i % 3;
    const auto s = update_prototypes({}, x, labels);
    for (CategoryId c = 0; c < 3; ++c) {
        RowVector sum = RowVector::Zero(4);
        int n = 0;
        for (int i = 0; i < 50; ++i)
            if (labels[static_cast<std::size_t>(i)] == c) {
                sum += x.row(i);
                ++n;
            }
        EXPECT_LE(max_abs_diff(s.at(c).prototype, sum / n), 1e-12);
    }
}

TEST(Prototypes, FrozenOnceWritten) {
    const auto s = origin_store();
    const std::vector<CategoryId> again{0};
    EXPECT_THROW(update_prototypes(s, Matrix::Ones(1, 2), again), FrozenPrototype);
    EXPECT_THROW(s.at(9), MissingPrototype);
}

// ---- training -------------------------------------------------------------------------

struct TwoClusters {
    LabeledFeatureBatch mix;
    FeaturePrototypeStore store;
    Matrix w;
};

TwoClusters two_clusters(int per_category = 40) {
    const auto a = two_categories();
    Rng rng(21);
    Matrix x(2 * per_category, 2);
    std::vector<CategoryId> labels;
    for (int i = 0; i < 2 * per_category; ++i) {
        const CategoryId c = i < per_category ? 0 : 1;
        x(i, 0) = (c == 0 ? 3.0 : 0.0) + 0.3 * rng.normal();
        x(i, 1) = (c == 1 ? 3.0 : 0.0) + 0.3 * rng.normal();
        labels.push_back(c);
    }
    TwoClusters t;
    t.store = update_prototypes({}, x, labels);
    t.mix = make_batch(x, labels, a, Provenance::real);
    t.w = (Matrix(2, 2) << 2, -2, -2, 2).finished();
    return t;
}

TEST(TrainGenerative, MeansWithinLimitOfPrototypes) {
    const auto t = two_clusters(400);
    const auto a = two_categories();
    GenerativeModel g(2, 2, tiny_shape(), 3);
    GanConfig cfg;
    train_generative(g, t.mix, t.w, a.schema(), t.store, cfg, 4);
    const std::vector<CategoryId> ids{0, 1};
    for (const auto& [id, d] : prototype_distances(g, ids, a, t.store, 200, 5)) EXPECT_LE(d, cfg.alpha_limit) << id;
}

TEST(TrainGenerative, LossBookkeepingAndConstantW) {
    const auto t = two_clusters();
    const auto a = two_categories();
    GenerativeModel g(2, 2, tiny_shape(), 3);
    GanConfig cfg;
    cfg.epochs = 10;
    const Matrix w_before = t.w;
    const auto log = train_generative(g, t.mix, t.w, a.schema(), t.store, cfg, 4);
    ASSERT_FALSE(log.steps.empty());
    EXPECT_EQ(log.critic_updates, log.steps.size() * static_cast<std::size_t>(cfg.critic_steps));
    for (const auto& s : log.steps) {
        EXPECT_NEAR(s.generator_loss, s.adversarial + cfg.lambda_att * s.anti_att + cfg.lambda_fe * s.anti_fe, 1e-9);
        EXPECT_TRUE(std::isfinite(s.wasserstein) && std::isfinite(s.penalty));
    }
    EXPECT_EQ(t.w, w_before);
}

TEST(TrainGenerative, SwitchedOffTermsAreZero) {
    const auto t = two_clusters();
    const auto a = two_categories();
    GenerativeModel g(2, 2, tiny_shape(), 3);
    GanConfig cfg;
    cfg.epochs = 5;
    cfg.lambda_att = 0.0;
    cfg.lambda_fe = 0.0;
    const auto log = train_generative(g, t.mix, t.w, a.schema(), t.store, cfg, 4);
    for (const auto& s : log.steps) {
        EXPECT_EQ(s.anti_att, 0.0);
        EXPECT_EQ(s.anti_fe, 0.0);
        EXPECT_NEAR(s.generator_loss, s.adversarial, 1e-12);
    }
}

TEST(TrainGenerative, Deterministic) {
    const auto t = two_clusters();
    const auto a = two_categories();
    GanConfig cfg;
    cfg.epochs = 5;
    GenerativeModel g1(2, 2, tiny_shape(), 3), g2(2, 2, tiny_shape(), 3);
    train_generative(g1, t.mix, t.w, a.schema(), t.store, cfg, 4);
    train_generative(g2, t.mix, t.w, a.schema(), t.store, cfg, 4);
    EXPECT_EQ(g1, g2);
}

TEST(TrainGenerative, Preconditions) {
    const auto t = two_clusters();
    const auto a = two_categories();
    GenerativeModel g(2, 2, tiny_shape(), 3);
    GanConfig cfg;
    LabeledFeatureBatch empty = t.mix;
    empty.features = Matrix(0, 2);
    empty.labels.clear();
    empty.attributes = Matrix(0, 2);
    EXPECT_THROW(train_generative(g, empty, t.w, a.schema(), t.store, cfg, 1), InvalidInput);
    EXPECT_THROW(train_generative(g, t.mix, t.w, a.schema(), {}, cfg, 1), MissingPrototype);
    GanConfig bad = cfg;
    bad.lambda_fe = -1.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.alpha_limit = -0.5;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Batches, ConcatenationTagsGenerated) {
    const auto t = two_clusters();
    LabeledFeatureBatch gen = t.mix;
    gen.provenance = Provenance::generated;
    const auto both = concat_batches({t.mix, gen});
    EXPECT_EQ(both.size(), 2 * t.mix.size());
    EXPECT_EQ(both.provenance, Provenance::generated);
    EXPECT_EQ(concat_batches({t.mix, t.mix}).provenance, Provenance::real);
}

}  // namespace
}  // namespace izsfd
