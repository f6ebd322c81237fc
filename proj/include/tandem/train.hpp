#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tandem/checkpoint.hpp"
#include "tandem/data.hpp"
#include "tandem/metrics.hpp"
#include "tandem/model.hpp"

namespace tandem {

/// NaN gradients, failed gradient checks. Mapped to exit code 3 by the CLI.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    VariantKind variant = VariantKind::mtl_attinter;
    EncoderConfig encoder;
    double learning_rate = 1e-3;  // from-scratch default; 5e-6 suits a pretrained encoder
    int batch_size = 64;
    int epochs = 5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double dev_ratio = 0.2;
    int vocab_min_count = 1;
    std::uint64_t seed = 0;
    bool parallel = true;
    std::string embeddings_path;  // optional pretrained token embeddings

    void validate() const;  // throws DataError
};

struct AdamState {
    std::vector<Tensor> m, v;
    long t = 0;

    static AdamState like(const ModelParams& params);
};

/// One bias-corrected Adam update over every parameter tensor.
/// Throws NumericError naming the parameter if a gradient is not finite.
void adam_step(ParamRefs& params, std::span<const Tensor> grads, AdamState& state, const TrainConfig& cfg);

struct EpochStats {
    LossParts train_loss;  // means over training examples of the epoch
    MetricsReport dev_metrics;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

struct TrainResult {
    TrainedModel model;
    TrainHistory history;
};

/// Deterministic end to end for a fixed config: vocabulary from the full
/// provided data, then three seed-derived sub-streams consumed in a fixed
/// order (parameter init, train/dev split, per-epoch shuffles), so the same
/// seed yields the same split for every variant.
TrainResult train(std::span<const Record> data, const TrainConfig& cfg);

/// Run directory: config.snapshot, history.tsv, checkpoint.final.
void write_run_dir(const std::string& dir, const TrainConfig& cfg, const TrainResult& result,
                   const std::string& data_path);

std::string history_tsv(const TrainHistory& history, const TrainConfig& cfg);

}  // namespace tandem
