#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tandem/gradcheck.hpp"
#include "tandem/model.hpp"

namespace tandem {

struct ModelGradCheck {
    GradCheckResult overall;
    std::vector<std::pair<std::string, double>> per_group;  // max rel err per parameter group
};

/// Random batch of `batch_size` rows shaped for the config: random lengths,
/// token ids below vocab_size, random labels. Deterministic per seed.
Batch random_batch(const ModelConfig& cfg, int batch_size, std::uint64_t seed);

/// Checks the tape gradients of the batch-mean loss against central
/// differences over every parameter coordinate. Groups are name prefixes
/// (encoder, att_sarc, att_sent, interaction, clf_sarc, clf_sent).
ModelGradCheck check_model_gradients(const ModelConfig& cfg, int batch_size, std::uint64_t seed, double eps = 1e-3,
                                     bool parallel = true);

}  // namespace tandem
