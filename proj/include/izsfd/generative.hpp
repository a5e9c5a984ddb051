#pragma once

// Conditional feature generator with a gradient-penalty critic, plus the two
// anti-forgetting terms that tie generated features to what the diagnosis
// model already knows:
//
//   attribute term   grouped NLL of (generated * W) against the attribute
//                    labels; W is held constant.
//   prototype term   per generated row, [ |x - prototype(label)| - alpha ]_+,
//                    averaged over the batch.
//
// G maps (noise ++ attributes) to a feature row; D maps (feature ++
// attributes) to a scalar.

#include "izsfd/autodiff.hpp"
#include "izsfd/diagnosis.hpp"
#include "izsfd/linalg.hpp"
#include "izsfd/mlp.hpp"
#include "izsfd/schema.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <vector>

namespace izsfd {

struct GanConfig {
    double lambda_gp = 10.0;
    double lambda_att = 10.0;
    double lambda_fe = 10.0;
    double alpha_limit = 1.0;
    int critic_steps = 5;
    int epochs = 300;
    int batch_size = 16;
    double learning_rate = 2e-4;

    void validate() const;
};

enum class Provenance { real, generated };

struct LabeledFeatureBatch {
    Matrix features;                  // n x feature_dim
    std::vector<CategoryId> labels;   // n
    Matrix attributes;                // n x m, rows copied from A
    Provenance provenance = Provenance::real;

    std::size_t size() const { return labels.size(); }
};

// Real batch: attribute rows are looked up in `attributes`.
LabeledFeatureBatch make_batch(Matrix features, std::vector<CategoryId> labels,
                               const FaultAttributeMatrix& attributes, Provenance provenance);

// Row-wise concatenation; the result is tagged generated if any part is.
LabeledFeatureBatch concat_batches(const std::vector<LabeledFeatureBatch>& parts);

class GenerativeModel {
public:
    GenerativeModel() = default;
    GenerativeModel(Eigen::Index feature_dim, Eigen::Index attribute_dim, const ModelShape& shape,
                    std::uint64_t seed);
    GenerativeModel(Mlp generator, Mlp critic, Eigen::Index noise_dim);

    Eigen::Index noise_dim() const { return noise_dim_; }
    Eigen::Index feature_dim() const { return generator_.output_width(); }
    Eigen::Index attribute_dim() const { return generator_.input_width() - noise_dim_; }

    const Mlp& generator() const { return generator_; }
    const Mlp& critic() const { return critic_; }
    Mlp& generator() { return generator_; }
    Mlp& critic() { return critic_; }

    // Accept `extra` more attribute columns; new inputs start with zero weight.
    void widen_attributes(Eigen::Index extra);

    bool operator==(const GenerativeModel&) const = default;

private:
    void check() const;

    Mlp generator_;
    Mlp critic_;
    Eigen::Index noise_dim_ = 0;
};

class FeaturePrototypeStore {
public:
    struct Entry {
        RowVector prototype;
        std::size_t count = 0;
    };

    bool contains(CategoryId id) const { return entries_.count(id) != 0; }
    const Entry& at(CategoryId id) const;
    std::vector<CategoryId> ids() const;
    std::size_t size() const { return entries_.size(); }
    const std::map<CategoryId, Entry>& entries() const { return entries_; }

    // Used when restoring from a checkpoint.
    void insert(CategoryId id, Entry entry);

    bool operator==(const FeaturePrototypeStore& other) const;

private:
    std::map<CategoryId, Entry> entries_;
};

// Adds the mean feature of each category in `labels`. Categories already in
// the store are rejected with FrozenPrototype.
FeaturePrototypeStore update_prototypes(const FeaturePrototypeStore& store, const Matrix& features,
                                        std::span<const CategoryId> labels);

// `count` rows per category, in the order of `ids`; noise is standard normal
// drawn from `seed`.
LabeledFeatureBatch generate(const GenerativeModel& model, std::span<const CategoryId> ids,
                             const FaultAttributeMatrix& attributes, std::size_t count, std::uint64_t seed);

struct WganTerms {
    double critic_loss = 0.0;   // quantity the critic minimises: -wasserstein + penalty
    double wasserstein = 0.0;   // E[D(real, z)] - E[D(fake, z)]
    double penalty = 0.0;       // lambda * E[(|grad_x D(x_hat, z)| - 1)^2]
};

// Interpolation weights drawn U(0,1) per row from `seed`.
WganTerms wgan_gp_loss(const Mlp& critic, const Matrix& real, const Matrix& fake, const Matrix& z, double lambda,
                       std::uint64_t seed);
// Same with explicit per-row interpolation weights (x_hat = g*real + (1-g)*fake).
WganTerms wgan_gp_loss(const Mlp& critic, const Matrix& real, const Matrix& fake, const Matrix& z, double lambda,
                       const Vector& gamma);

double anti_attribute_loss(const Matrix& fake, const Matrix& z, const Matrix& w, const AttributeSchema& schema);
double anti_feature_prototype_loss(const Matrix& fake, std::span<const CategoryId> labels,
                                   const FeaturePrototypeStore& store, double alpha_limit);

// Taped versions used during training.
struct CriticTerms {
    ad::Var loss;
    ad::Var wasserstein;
    ad::Var penalty;
};
CriticTerms critic_terms(ad::Tape& tape, std::span<const ad::Var> critic_params, const Matrix& real,
                         const Matrix& fake, const Matrix& z, const Vector& gamma, double lambda);
ad::Var anti_attribute_loss(const ad::Var& fake, const Matrix& z, const Matrix& w, const AttributeSchema& schema);
ad::Var anti_feature_prototype_loss(const ad::Var& fake, std::span<const CategoryId> labels,
                                    const FeaturePrototypeStore& store, double alpha_limit);

struct GanStepRecord {
    std::size_t step = 0;          // generator step index
    double wasserstein = 0.0;      // from the latest critic step
    double penalty = 0.0;
    double adversarial = 0.0;      // -E[D(fake, z)]
    double anti_att = 0.0;         // unweighted
    double anti_fe = 0.0;          // unweighted
    double generator_loss = 0.0;   // adversarial + lambda_att*anti_att + lambda_fe*anti_fe
};

struct GanTrainingLog {
    std::vector<GanStepRecord> steps;
    std::size_t critic_updates = 0;
};

// Alternating critic/generator training on `mix` (real and replayed rows
// together). `w` and `w_schema` drive the attribute term and cover the
// leading w.cols() attribute columns of the mix. `w` is never modified.
GanTrainingLog train_generative(GenerativeModel& model, const LabeledFeatureBatch& mix, const Matrix& w,
                                const AttributeSchema& w_schema, const FeaturePrototypeStore& store,
                                const GanConfig& config, std::uint64_t seed);

// Distance between the mean of `count` generated rows and the stored
// prototype, per category.
std::map<CategoryId, double> prototype_distances(const GenerativeModel& model, std::span<const CategoryId> ids,
                                                 const FaultAttributeMatrix& attributes,
                                                 const FeaturePrototypeStore& store, std::size_t count,
                                                 std::uint64_t seed);

}  // namespace izsfd
