#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tandem/train.hpp"

namespace tandem {

/// Rows of the comparison table. "st" and "st_att" each stand for a pair of
/// single-task runs (one per task) reported as one row.
enum class AblationRow { st, st_att, mtl, mtl_att, mtl_attinter };

const char* to_string(AblationRow r);
AblationRow ablation_row_from_string(const std::string& s);  // throws DataError

inline constexpr std::array<AblationRow, 5> kAllAblationRows = {
    AblationRow::st, AblationRow::st_att, AblationRow::mtl, AblationRow::mtl_att, AblationRow::mtl_attinter};

/// Column order of the comparison table: the sarcasm block then the
/// sentiment block, each precision / recall / accuracy / macro F1 / task F1.
inline constexpr std::array<const char*, 10> kAblationColumns = {
    "sarc_precision", "sarc_recall", "sarc_accuracy", "sarc_f1", "f1_sarc",
    "sent_precision", "sent_recall", "sent_accuracy", "sent_f1", "f1_pn"};

struct AblationEntry {
    AblationRow row;
    std::string split;  // "dev" or "test"
    std::uint64_t seed = 0;
    std::array<double, 10> metrics{};
};

struct AblationTable {
    std::vector<std::uint64_t> seeds;
    std::vector<AblationEntry> per_seed;
    std::vector<AblationEntry> means;  // seed field unused; one per (row, split)

    const AblationEntry& mean_of(AblationRow row, const std::string& split) const;
};

/// Trains every requested row for every seed (two runs per ST row, one per
/// MTL row; the same seed gives the same train/dev split everywhere), takes
/// dev metrics from the final epoch and test metrics from `test_data`.
AblationTable ablation_run(std::span<const Record> train_data, std::span<const Record> test_data,
                           std::span<const AblationRow> rows, std::span<const std::uint64_t> seeds,
                           const TrainConfig& base);

/// Aligned text table of seed means; the best value per column within each
/// split is flagged with '*'.
std::string format_ablation(const AblationTable& table);

/// One row per (variant, split, seed) plus `mean` rows.
void write_ablation_tsv(const std::string& path, const AblationTable& table, const std::string& header_comment);

}  // namespace tandem
