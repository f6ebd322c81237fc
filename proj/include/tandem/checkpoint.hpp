#pragma once

#include <string>

#include "tandem/model.hpp"

namespace tandem {

/// Everything needed to run the model on new text: architecture config,
/// learned tensors, and the vocabulary they were trained against.
struct TrainedModel {
    ModelConfig config;
    ModelParams params;
    Vocab vocab;
};

/// Parameters shaped for `cfg` with all tensors zero; used when loading.
ModelParams zeros_model(const ModelConfig& cfg);

/// Binary checkpoint: manifest (variant, encoder config, vocab size, seed),
/// the vocabulary, then every named parameter tensor with shape and
/// row-major 64-bit values. Native (little-endian) byte order; a rewrite of
/// a loaded checkpoint is byte-identical.
void save_checkpoint(const std::string& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::string& path);  // throws DataError

}  // namespace tandem
