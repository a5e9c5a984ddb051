#pragma once

// Attribute-predicting fault classifier.
//
//   x --standardize--> FE (d -> hidden -> feature_dim) --> x_fe
//   x_fe * W                 attribute logits, one softmax group per attribute
//   x_fe * W * A^T           category scores; prediction is the argmax
//
// A category head (CLS) is trained jointly during pretraining only.

#include "izsfd/linalg.hpp"
#include "izsfd/mlp.hpp"
#include "izsfd/schema.hpp"

#include <cstdint>
#include <vector>

namespace izsfd {

struct ModelShape {
    Eigen::Index fe_hidden = 256;
    Eigen::Index feature_dim = 64;
    Eigen::Index noise_dim = 64;
    std::vector<Eigen::Index> generator_hidden{128, 512};
    std::vector<Eigen::Index> critic_hidden{512, 32};
};

struct TrainConfig {
    int epochs = 300;
    int batch_size = 16;
    double learning_rate = 2e-4;
};

// Per-dimension z-score, frozen once fitted.
struct Standardizer {
    RowVector mean;
    RowVector scale;

    static Standardizer fit(const Matrix& x);
    Matrix apply(const Matrix& x) const;
};

class DiagnosisModel {
public:
    DiagnosisModel() = default;
    DiagnosisModel(Eigen::Index input_dim, AttributeSchema schema, std::vector<CategoryId> class_ids,
                   const ModelShape& shape, std::uint64_t seed);

    Eigen::Index input_dim() const { return extractor_.input_width(); }
    Eigen::Index feature_dim() const { return extractor_.output_width(); }
    const AttributeSchema& schema() const { return schema_; }
    const std::vector<CategoryId>& class_ids() const { return class_ids_; }
    const Mlp& extractor() const { return extractor_; }
    const Mlp& classifier() const { return classifier_; }
    const Matrix& prototypes() const { return prototypes_; }
    const Standardizer& standardizer() const { return standardizer_; }
    bool frozen() const { return frozen_; }

    // Replace W (and its schema, which may have grown by attribute groups).
    void set_prototypes(Matrix w, AttributeSchema schema);

    Matrix features(const Matrix& x) const;

    // Restore every piece of state from a checkpoint.
    static DiagnosisModel restore(AttributeSchema schema, std::vector<CategoryId> class_ids, Mlp extractor,
                                  Mlp classifier, Matrix prototypes, Standardizer standardizer, bool frozen);

private:
    friend struct PretrainAccess;

    AttributeSchema schema_;
    std::vector<CategoryId> class_ids_;
    Mlp extractor_;
    Mlp classifier_;
    Matrix prototypes_;
    Standardizer standardizer_;
    bool frozen_ = false;
};

struct PretrainReport {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> epoch_loss;  // mean mini-batch loss per epoch
};

// Joint training of FE, CLS and W on stage-1 data by minimising
// cross-entropy(CLS) + grouped attribute NLL(W). Fits the standardizer
// first and freezes the extractor afterwards.
PretrainReport pretrain(DiagnosisModel& model, const Matrix& x, std::span<const CategoryId> labels,
                        const FaultAttributeMatrix& attributes, const TrainConfig& config, std::uint64_t seed);

Matrix attribute_logits(const DiagnosisModel& model, const Matrix& x);

// argmax over categories of x_fe * W * A^T; ties go to the lowest id.
std::vector<CategoryId> predict_from_features(const Matrix& features, const Matrix& w,
                                              const FaultAttributeMatrix& attributes);

std::vector<CategoryId> predict(const DiagnosisModel& model, const Matrix& x, const FaultAttributeMatrix& attributes);

// Gradient training of a standalone prototype block on fixed features,
// starting from `init`. Used for newly added attribute columns and for the
// fine-tuning control.
Matrix train_prototype_block(Matrix init, const Matrix& features, const Matrix& targets, const AttributeSchema& schema,
                             const TrainConfig& config, std::uint64_t seed);

}  // namespace izsfd
