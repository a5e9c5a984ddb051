#include "oracles.hpp"

#include "izsfd/dataset.hpp"
#include "izsfd/diagnosis.hpp"
#include "izsfd/error.hpp"
#include "izsfd/memory.hpp"
#include "izsfd/metrics.hpp"
#include "izsfd/protocol.hpp"
#include "izsfd/schema.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace izsfd {
namespace {

FaultAttributeMatrix small_attributes() {
    const AttributeSchema schema({2, 3});
    Matrix rows(3, 5);
    rows << 1, 0, 1, 0, 0,
            0, 1, 0, 1, 0,
            1, 0, 0, 0, 1;
    return FaultAttributeMatrix(schema, {10, 20, 30}, rows);
}

// ---- schema ----------------------------------------------------------------------

TEST(Schema, OffsetsAndWidth) {
    const AttributeSchema s({3, 4, 3, 4});
    EXPECT_EQ(s.coded_width(), 14);
    EXPECT_EQ(s.offsets(), (std::vector<Eigen::Index>{0, 3, 7, 10}));
}

TEST(Schema, EncodeDecodeRoundTrip) {
    const AttributeSchema s({3, 4, 2});
    const std::vector<int> raw{2, 0, 1};
    const RowVector coded = encode_attributes(raw, s);
    RowVector expect(9);
    expect << 0, 0, 1, 1, 0, 0, 0, 0, 1;
    EXPECT_EQ(coded, expect);
    EXPECT_EQ(decode_attributes(coded, s), raw);
    EXPECT_TRUE(is_valid_coding(coded, s));
}

TEST(Schema, OutOfRangeValueRejected) {
    const AttributeSchema s({3, 2});
    const std::vector<int> raw{3, 0};
    EXPECT_THROW(encode_attributes(raw, s), InvalidAttribute);
    const std::vector<int> short_raw{1};
    EXPECT_THROW(encode_attributes(short_raw, s), InvalidAttribute);
}

TEST(Schema, CardinalityBelowTwoRejected) {
    EXPECT_THROW(AttributeSchema({3, 1}), SchemaMismatch);
    EXPECT_THROW(AttributeSchema(std::vector<Eigen::Index>{}), SchemaMismatch);
}

TEST(Schema, InvalidCodingDetected) {
    const AttributeSchema s({2, 2});
    RowVector two_hot(4);
    two_hot << 1, 1, 0, 1;
    EXPECT_FALSE(is_valid_coding(two_hot, s));
    EXPECT_THROW(decode_attributes(two_hot, s), InvalidAttribute);
}

TEST(AttributeMatrix, DuplicateRowsRejectedUnlessAllowed) {
    const AttributeSchema s({2});
    Matrix rows(2, 2);
    rows << 1, 0, 1, 0;
    EXPECT_THROW(FaultAttributeMatrix(s, {0, 1}, rows), InvalidAttribute);
    EXPECT_NO_THROW(FaultAttributeMatrix(s, {0, 1}, rows, false));
}

TEST(AttributeMatrix, DuplicateIdsRejected) {
    const AttributeSchema s({2});
    Matrix rows(2, 2);
    rows << 1, 0, 0, 1;
    EXPECT_THROW(FaultAttributeMatrix(s, {4, 4}, rows), InvalidInput);
}

TEST(AttributeMatrix, RowsForAndLabels) {
    const auto a = small_attributes();
    const std::vector<CategoryId> ids{30, 10};
    const auto sub = a.rows_for(ids);
    EXPECT_EQ(sub.ids(), ids);
    EXPECT_EQ(sub.row(30), a.row(30));
    const std::vector<CategoryId> labels{20, 20, 10};
    const Matrix z = a.labels_for(labels);
    EXPECT_EQ(z.row(0), a.row(20));
    EXPECT_EQ(z.row(2), a.row(10));
    const std::vector<CategoryId> unknown{99};
    EXPECT_THROW(a.rows_for(unknown), ProtocolError);
}

TEST(AttributeMatrix, SelectGroupsAndColumnExtension) {
    const auto a = small_attributes();
    const std::vector<std::size_t> first{0};
    const auto left = a.select_groups(first);
    EXPECT_EQ(left.matrix().cols(), 2);
    EXPECT_NO_THROW(require_column_extension(left, a));
    const std::vector<std::size_t> second{1};
    EXPECT_THROW(require_column_extension(a.select_groups(second), a), ProtocolError);
    EXPECT_THROW(require_column_extension(a, left), ProtocolError);
}

// ---- diagnosis model ------------------------------------------------------------

TEST(Diagnosis, PredictHandCase) {
    const auto a = small_attributes();
    Matrix w = Matrix::Identity(5, 5);
    Matrix fe(2, 5);
    fe << 0.1, 0.9, 0.2, 0.8, 0.1,   // scores 0.3, 1.7, 0.2
          0.8, 0.2, 0.1, 0.0, 0.9;   // scores 0.9, 0.2, 1.7
    const auto p = predict_from_features(fe, w, a);
    EXPECT_EQ(p, (std::vector<CategoryId>{20, 30}));
}

TEST(Diagnosis, TiesGoToLowestId) {
    const auto a = small_attributes();
    const auto p = predict_from_features(Matrix::Zero(1, 5), Matrix::Identity(5, 5), a);
    EXPECT_EQ(p.front(), 10);
}

TEST(Diagnosis, PredictShapeErrors) {
    const auto a = small_attributes();
    EXPECT_THROW(predict_from_features(Matrix::Zero(1, 4), Matrix::Identity(5, 5), a), InvalidInput);
    EXPECT_THROW(predict_from_features(Matrix::Zero(1, 5), Matrix::Identity(5, 4), a), InvalidInput);
}

struct Separable {
    Matrix x;
    std::vector<CategoryId> labels;
    FaultAttributeMatrix attributes;
};

Separable four_class_data() {
    SyntheticSpec spec;
    spec.cardinalities = {2, 2};
    spec.categories = 4;
    spec.dim = 6;
    spec.sigma = 0.3;
    spec.direction_scale = 3.0;
    spec.train_per_category = 10;
    spec.test_per_category = 0;
    spec.seed = 2;
    const Dataset d = gen_synthetic(spec);
    return Separable{d.x, d.labels, d.attributes};
}

ModelShape small_shape() {
    ModelShape s;
    s.fe_hidden = 16;
    s.feature_dim = 8;
    s.noise_dim = 4;
    s.generator_hidden = {8};
    s.critic_hidden = {8};
    return s;
}

TEST(Diagnosis, PretrainSeparatesFourClasses) {
    const auto data = four_class_data();
    DiagnosisModel model(data.x.cols(), data.attributes.schema(), data.attributes.ids(), small_shape(), 1);
    TrainConfig cfg;
    const auto report = pretrain(model, data.x, data.labels, data.attributes, cfg, 3);
    EXPECT_GE(accuracy(predict(model, data.x, data.attributes), data.labels), 0.95);
    ASSERT_EQ(report.epoch_loss.size(), 300u);
    for (double l : report.epoch_loss) EXPECT_TRUE(std::isfinite(l));
    EXPECT_LT(report.final_loss, report.initial_loss);
    EXPECT_TRUE(model.frozen());
    EXPECT_THROW(pretrain(model, data.x, data.labels, data.attributes, cfg, 3), ContractViolation);
}

TEST(Diagnosis, LogitRowsFollowInputRows) {
    const auto data = four_class_data();
    DiagnosisModel model(data.x.cols(), data.attributes.schema(), data.attributes.ids(), small_shape(), 1);
    const Matrix logits = attribute_logits(model, data.x);
    EXPECT_EQ(logits.rows(), data.x.rows());
    EXPECT_LE(max_abs_diff(logits.row(5), attribute_logits(model, data.x.row(5))), 1e-12);
}

TEST(Diagnosis, PretrainIsDeterministic) {
    const auto data = four_class_data();
    TrainConfig cfg;
    cfg.epochs = 5;
    DiagnosisModel a(data.x.cols(), data.attributes.schema(), data.attributes.ids(), small_shape(), 1);
    DiagnosisModel b(data.x.cols(), data.attributes.schema(), data.attributes.ids(), small_shape(), 1);
    pretrain(a, data.x, data.labels, data.attributes, cfg, 9);
    pretrain(b, data.x, data.labels, data.attributes, cfg, 9);
    EXPECT_EQ(a.prototypes(), b.prototypes());
    EXPECT_EQ(a.extractor(), b.extractor());
}

TEST(Diagnosis, UnknownInputWidthRejected) {
    const auto data = four_class_data();
    DiagnosisModel model(data.x.cols(), data.attributes.schema(), data.attributes.ids(), small_shape(), 1);
    EXPECT_THROW(model.features(Matrix::Zero(1, data.x.cols() + 1)), InvalidInput);
}

// ---- memory ---------------------------------------------------------------------------

TEST(Memory, ScalarCase) {
    const MemoryMatrix p = init_memory(Matrix::Ones(1, 1));
    EXPECT_DOUBLE_EQ(p.p(0, 0), 1.0);
    const RlsStep s = rls_step(p, Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Constant(1, 1, 3.0));
    EXPECT_NEAR(s.gain(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(s.memory.p(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(s.prototypes(0, 0), 2.0, 1e-15);
}

TEST(Memory, ChunkedUpdateMatchesBatchLeastSquares) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto r = oracle::rls_equivalence(seed);
        EXPECT_LE(r.feature_dim, 16);
        EXPECT_LE(r.w_error, 1e-8) << "seed " << seed;
        EXPECT_LE(r.gain_error, 1e-8) << "seed " << seed;
    }
}

TEST(Memory, StaysSymmetricAndOrderInsensitive) {
    Rng rng(12);
    const Matrix x0 = oracle::random_matrix(rng, 20, 6), a = oracle::random_matrix(rng, 7, 6),
                 b = oracle::random_matrix(rng, 9, 6);
    const Matrix z0 = oracle::random_matrix(rng, 20, 3), za = oracle::random_matrix(rng, 7, 3),
                 zb = oracle::random_matrix(rng, 9, 3);
    const MemoryMatrix p0 = init_memory(x0);
    const Matrix w0 = pinv(x0) * z0;
    const RlsStep ab1 = rls_update(p0, w0, a, za);
    const RlsStep ab = rls_update(ab1.memory, ab1.prototypes, b, zb);
    const RlsStep ba1 = rls_update(p0, w0, b, zb);
    const RlsStep ba = rls_update(ba1.memory, ba1.prototypes, a, za);
    EXPECT_LE(max_abs_diff(ab.prototypes, ba.prototypes), 1e-8);
    EXPECT_LE(max_abs_diff(ab.memory.p, ba.memory.p), 1e-8);
    EXPECT_LE(max_abs_diff(ab.memory.p, ab.memory.p.transpose()), 1e-10);
}

TEST(Memory, ChunkSizeDoesNotMatter) {
    Rng rng(13);
    const Matrix x0 = oracle::random_matrix(rng, 12, 5), x = oracle::random_matrix(rng, 30, 5);
    const Matrix z0 = oracle::random_matrix(rng, 12, 2), z = oracle::random_matrix(rng, 30, 2);
    const MemoryMatrix p0 = init_memory(x0);
    const Matrix w0 = pinv(x0) * z0;
    const RlsStep whole = rls_update(p0, w0, x, z, 256);
    const RlsStep pieces = rls_update(p0, w0, x, z, 4);
    EXPECT_LE(max_abs_diff(whole.prototypes, pieces.prototypes), 1e-8);
    EXPECT_LE(max_abs_diff(whole.memory.p, pieces.memory.p), 1e-8);
}

TEST(Memory, AlignmentGivesLeastSquaresSolution) {
    Rng rng(14);
    const Matrix x = oracle::random_matrix(rng, 25, 6), z = oracle::random_matrix(rng, 25, 4);
    const Matrix w_any = oracle::random_matrix(rng, 6, 4, 5.0);
    const Matrix aligned = align_prototypes(init_memory(x), w_any, x, z);
    EXPECT_LE(max_abs_diff(aligned, pinv(x) * z), 1e-8);
}

TEST(Memory, ShapeErrors) {
    const MemoryMatrix p = init_memory(Matrix::Identity(3, 3));
    EXPECT_THROW(rls_step(p, Matrix::Zero(3, 2), Matrix::Zero(1, 4), Matrix::Zero(1, 2)), InvalidInput);
    EXPECT_THROW(rls_step(p, Matrix::Zero(3, 2), Matrix::Zero(1, 3), Matrix::Zero(2, 2)), InvalidInput);
    EXPECT_THROW(init_memory(Matrix::Zero(0, 3)), InvalidInput);
}

TEST(Memory, EmptyUpdateRejected) {
    const MemoryMatrix p = init_memory(Matrix::Identity(3, 3));
    EXPECT_THROW(rls_update(p, Matrix::Ones(3, 2), Matrix::Zero(0, 3), Matrix::Zero(0, 2)), InvalidInput);
}

TEST(Memory, ZeroResidualKeepsPrototypes) {
    Rng rng(15);
    const Matrix x0 = oracle::random_matrix(rng, 10, 4), x = oracle::random_matrix(rng, 5, 4);
    const Matrix w = oracle::random_matrix(rng, 4, 3);
    const RlsStep s = rls_update(init_memory(x0), w, x, x * w);
    EXPECT_LE(max_abs_diff(s.prototypes, w), 1e-12);
}

TEST(Memory, InitialisationExamples) {
    Matrix row(1, 2);
    row << 2, 0;
    Matrix expect = Matrix::Zero(2, 2);
    expect(0, 0) = 0.25;
    EXPECT_LE(max_abs_diff(init_memory(row).p, expect), 1e-15);

    Rng rng(16);
    const Matrix x = oracle::random_matrix(rng, 12, 5);
    EXPECT_LE(max_abs_diff(init_memory(x).p * (x.transpose() * x), Matrix::Identity(5, 5)), 1e-8);
}

TEST(Memory, MatchedTargetScaleRecoversScale) {
    const AttributeSchema s({2, 3});
    Matrix z(3, 5);
    z << 1, 0, 1, 0, 0,
         0, 1, 0, 1, 0,
         1, 0, 0, 0, 1;
    Matrix logits = 4.0 * z;
    logits.col(0).array() += 7.0;  // a per-group shift is ignored by the softmax
    logits.col(1).array() += 7.0;
    EXPECT_NEAR(matched_target_scale(logits, z, s), 4.0, 1e-12);
    EXPECT_DOUBLE_EQ(matched_target_scale(-logits, z, s), 1.0);
}

}  // namespace
}  // namespace izsfd
