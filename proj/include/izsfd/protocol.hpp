#pragma once

// Incremental training protocols.
//
// Category increment, stage k:
//   k = 1   pretrain FE/CLS/W on real seen data, freeze FE, P = (X^T X)^+,
//           correct W against P on the same rows, store prototypes, train
//           G/D, generate unseen, W^tmp by RLS.
//
// RLS targets are c * Z with c matched to the pretrained logits, so W keeps
// its softmax-trained scale. Predictions are invariant to c.
//   k > 1   RLS update of (P, W) on the new seen rows only, replay the
//           historical seen categories with the previous G, train G/D on
//           real + replay, generate unseen, W^tmp = W then RLS on replay and
//           unseen using a scratch copy of P.
//
// Attribute increment, stage k > 1 (no real data after stage 1):
//   generate seen features with the old attribute labels, relabel with A_k,
//   widen and retrain G/D, fit the new W columns on generated seen features,
//   W_k = [W_{k-1} | W_new], W^tmp = W_k then RLS on generated unseen.
//
// Control runs: joint learning (JL) refits everything from scratch on all
// data so far; sequential fine-tuning (SFT) takes gradient steps on the
// current stage only, with no memory matrix and no anti-forgetting terms.

#include "izsfd/dataset.hpp"
#include "izsfd/diagnosis.hpp"
#include "izsfd/generative.hpp"
#include "izsfd/memory.hpp"
#include "izsfd/metrics.hpp"
#include "izsfd/plan.hpp"

#include <functional>
#include <optional>
#include <string>

namespace izsfd {

enum class Method { bdmaff, jl, sft };

std::string to_string(Method m);
std::string to_string(Protocol p);

struct ProtocolConfig {
    ModelShape shape;
    TrainConfig pretrain;
    GanConfig gan;
    TrainConfig head;               // gradient fits of W blocks (attribute increment, SFT)
    std::size_t replay_volume = 0;  // rows per generated category; 0 = mean real count per category
    std::size_t fidelity_samples = 200;
    bool retain_data = true;        // JL keeps every stage's training data
    double target_scale = 0.0;      // scale of the one-hot RLS targets; 0 = match the pretrained logits

    void validate() const;
};

// Training-row access with a per-stage read log. Test rows are not logged.
class RealDataSource {
public:
    struct Read {
        std::size_t stage = 0;
        CategoryId category = 0;
        std::size_t rows = 0;
    };

    explicit RealDataSource(const Dataset& data) : data_(&data) {}

    void begin_stage(std::size_t stage) { stage_ = stage; }

    // Training rows of `categories`, in dataset order.
    Matrix train_rows(const std::vector<CategoryId>& categories, std::vector<CategoryId>& labels);

    Matrix test_rows(const std::vector<CategoryId>& categories, std::vector<CategoryId>& labels) const;

    const std::vector<Read>& reads() const { return reads_; }
    std::size_t rows_read(std::size_t stage) const;
    std::set<CategoryId> categories_read(std::size_t stage) const;

    const Dataset& data() const { return *data_; }

private:
    const Dataset* data_;
    std::size_t stage_ = 0;
    std::vector<Read> reads_;
};

struct StageState {
    std::size_t stage = 0;
    DiagnosisModel model;           // W_k lives here
    MemoryMatrix memory;            // P_k
    Matrix w_tmp;                   // prediction matrix W^tmp_k
    GenerativeModel generator;
    FeaturePrototypeStore store;
    FaultAttributeMatrix attributes;  // A_k over seen and unseen so far
    std::vector<CategoryId> seen;     // seen so far
    std::vector<CategoryId> unseen;   // unseen so far
    std::vector<std::size_t> groups;  // attribute groups so far, column order of A_k
    std::vector<CategoryId> stage1_seen;
    std::vector<CategoryId> stage1_unseen;
    std::size_t replay_volume = 0;
    double target_scale = 1.0;        // RLS targets are target_scale * Z
};

struct StageResult {
    std::size_t stage = 0;
    std::optional<StageMetrics> tzsfd;
    std::optional<StageMetrics> gzsfd;
    double stage1_seen_accuracy = 0.0;             // stage-1 seen test rows, stage-1 candidates
    std::map<CategoryId, double> prototype_distance;  // generated mean vs prototype, per stored category
    GanTrainingLog gan_log;
    std::optional<PretrainReport> pretrain;
};

struct RunResult {
    Method method = Method::bdmaff;
    Protocol protocol = Protocol::category_increment;
    std::uint64_t seed = 0;
    std::vector<StageResult> stages;
    StageState final_state;
    std::vector<RealDataSource::Read> reads;
};

using StageCallback = std::function<void(const StageState&, const StageResult&)>;

// Least-squares scale c of the group-centred targets against the
// group-centred logits, so that c * Z best matches a trained W's logits up to
// the per-group shift the softmax ignores. Falls back to 1 when c <= 0.
double matched_target_scale(const Matrix& logits, const Matrix& targets, const AttributeSchema& schema);

// Seed of a named random stream at a given stage.
std::uint64_t stage_seed(std::uint64_t seed, std::size_t stage, const char* label);

RunResult run_category_increment(const StagePlan& plan, const Dataset& data, const ProtocolConfig& config,
                                 std::uint64_t seed, const StageCallback& on_stage = {});

RunResult run_attribute_increment(const StagePlan& plan, const Dataset& data, const ProtocolConfig& config,
                                  std::uint64_t seed, const StageCallback& on_stage = {});

// JL or SFT under the plan's protocol. SFT is defined for category increment
// only; JL under attribute increment requires retain_data.
RunResult run_baseline(Method method, const StagePlan& plan, const Dataset& data, const ProtocolConfig& config,
                       std::uint64_t seed, const StageCallback& on_stage = {});

// Dispatch on method and plan protocol.
RunResult run_protocol(Method method, const StagePlan& plan, const Dataset& data, const ProtocolConfig& config,
                       std::uint64_t seed, const StageCallback& on_stage = {});

// Evaluate a state on the test split: TZSFD over unseen-so-far categories,
// GZSFD over all categories so far. Either is absent when undefined.
void evaluate_state(const StageState& state, const RealDataSource& source, StageResult& result);

// The attribute matrix an orchestrated stage works with: rows of `categories`
// projected onto `groups` (all groups when empty).
FaultAttributeMatrix stage_attributes(const FaultAttributeMatrix& full, const std::vector<CategoryId>& categories,
                                      const std::vector<std::size_t>& groups);

}  // namespace izsfd
