#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forgerykit/codec.hpp"
#include "forgerykit/dataset.hpp"
#include "forgerykit/image.hpp"
#include "forgerykit/scored_sample.hpp"

namespace forgerykit::nn {

struct ConvSpec {
    int out_channels = 0;
    int kernel = 3;
    int stride = 2;

    friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

// Convolutional stem (conv -> ReLU per block, "same" padding) followed by
// the classification head: global average pooling -> Dense(head_units,
// ReLU) -> Dropout(dropout_rate) -> Dense(1) -> sigmoid.
struct ModelConfig {
    int input_channels = 6;
    int input_size = 64;
    std::vector<ConvSpec> stem{{16, 3, 2}, {32, 3, 2}, {64, 3, 2}};
    int head_units = 512;
    double dropout_rate = 0.5;

    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainingConfig {
    double learning_rate = 1e-5;
    int max_epochs = 100;
    int patience = 10;
    int batch_size = 32;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

// One named tensor inside the flat parameter vector.
struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::vector<int> shape;

    std::size_t size() const;
    friend bool operator==(const ParamBlock&, const ParamBlock&) = default;
};

// conv{i}.weight [k, k, in, out], conv{i}.bias [out], dense.weight [in, units],
// dense.bias [units], output.weight [units], output.bias [1], in that order.
std::vector<ParamBlock> param_layout(const ModelConfig& cfg);
std::size_t param_count(const ModelConfig& cfg);

struct TrainedModel {
    ModelConfig config;
    std::vector<double> parameters;
    int epochs_run = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    // Preprocessing the model expects at inference time.
    codec::PreprocessConfig preprocess;
};

// He-uniform weights (limit sqrt(6 / fan_in)), zero biases.
TrainedModel init_model(const ModelConfig& cfg, std::uint64_t seed);

inline constexpr double kProbEpsilon = 1e-7;

// Pre-sigmoid outputs. Dropout is applied iff `dropout_seed` is set.
std::vector<double> forward_logits(const TrainedModel& model, std::span<const NormalizedTensor> batch,
                                   std::optional<std::uint64_t> dropout_seed);

// rng_seed is required in train mode (it fixes the dropout masks) and
// ignored otherwise.
std::vector<double> forward(const TrainedModel& model, std::span<const NormalizedTensor> batch, bool train_mode,
                            std::optional<std::uint64_t> rng_seed = std::nullopt);

// Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps].
double bce_loss(std::span<const double> probs, std::span<const int> labels);

struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};

// Exact gradient of bce_loss(forward(...)) with the dropout mask fixed by
// `dropout_seed` (no dropout when unset).
LossAndGradient loss_and_gradient(const TrainedModel& model, std::span<const NormalizedTensor* const> batch,
                                  std::span<const int> labels, std::optional<std::uint64_t> dropout_seed);

std::vector<double> backward(const TrainedModel& model, std::span<const NormalizedTensor> batch,
                             std::span<const int> labels, std::optional<std::uint64_t> dropout_seed);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
};

// Standard bias-corrected Adam update; `t` is the 1-based step index.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, long t,
               const TrainingConfig& cfg);

struct LabeledTensor {
    NormalizedTensor input;
    int label = 0;
};

struct EpochLog {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool improved = false;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Seeded epoch loop with early stopping on validation loss. Returns the
// parameter snapshot with the lowest validation loss.
TrainedModel train(std::span<const LabeledTensor> train_set, std::span<const LabeledTensor> val_set,
                   const ModelConfig& mcfg, const TrainingConfig& tcfg, const EpochCallback& on_epoch = {});

// Loads and preprocesses the given records from disk, `jobs` workers wide.
// Output order matches `records` regardless of the worker count.
std::vector<LabeledTensor> load_inputs(std::span<const dataset::SampleRecord> records,
                                       const std::filesystem::path& data_root,
                                       const codec::PreprocessConfig& preprocess, int jobs = 1);

// Manifest-level training. Validation data is the Validation split, or the
// Test split when `test_as_validation` is set (80:20 replication mode).
TrainedModel train(const dataset::Manifest& manifest, const std::filesystem::path& data_root,
                   const codec::PreprocessConfig& preprocess, const ModelConfig& mcfg, const TrainingConfig& tcfg,
                   bool test_as_validation = false, const EpochCallback& on_epoch = {}, int jobs = 1);

// Eval-mode scores, one per record, in canonical id order.
std::vector<ScoredSample> predict_scores(const TrainedModel& model, std::span<const dataset::SampleRecord> records,
                                         const std::filesystem::path& data_root,
                                         const codec::PreprocessConfig& preprocess, int jobs = 1);

std::vector<std::uint8_t> serialize_checkpoint(const TrainedModel& model);
TrainedModel parse_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace forgerykit::nn
