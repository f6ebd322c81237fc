#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tandem/checkpoint.hpp"
#include "tandem/data.hpp"
#include "tandem/model.hpp"

namespace tandem {

/// k x k integer counts; rows are gold labels, columns predictions.
struct ConfusionMatrix {
    int k = 0;
    std::vector<long> counts;             // row-major
    std::vector<std::string> labels;

    ConfusionMatrix() = default;
    ConfusionMatrix(int k_, std::vector<std::string> labels_)
        : k(k_), counts(static_cast<std::size_t>(k_) * k_, 0), labels(std::move(labels_)) {}

    long& at(int gold, int pred) { return counts[static_cast<std::size_t>(gold) * k + pred]; }
    long at(int gold, int pred) const { return counts[static_cast<std::size_t>(gold) * k + pred]; }
    long total() const;
    long trace() const;
};

ConfusionMatrix confusion(std::span<const int> golds, std::span<const int> preds, int k,
                          std::vector<std::string> labels);

struct Prf {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// Per-class precision/recall/F1 with the zero-denominator convention:
/// any undefined ratio is 0 and still participates in macro averages.
Prf prf_of_class(const ConfusionMatrix& cm, int c);
Prf macro_prf(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);
double f1_of_class(const ConfusionMatrix& cm, int c);

/// Macro F1 over the NEG and POS classes of a 3x3 sentiment matrix. Neutral
/// is excluded from the average but its confusions still count inside the
/// precision/recall denominators of NEG and POS.
double f1_pn(const ConfusionMatrix& cm);

struct TaskMetrics {
    ConfusionMatrix cm;
    double precision = 0.0, recall = 0.0, f1 = 0.0, accuracy = 0.0;
};

TaskMetrics task_metrics(const ConfusionMatrix& cm);

/// Absent optionals mean the evaluated variant has no head for that task;
/// values are never zero-filled in that case.
struct MetricsReport {
    std::optional<TaskMetrics> sarcasm;
    std::optional<double> f1_sarc;  // F1 of the sarcastic class
    std::optional<TaskMetrics> sentiment;
    std::optional<double> f1_pn;
    std::optional<ConfusionMatrix> sent_given_sarc;     // sentiment cm over gold-sarcastic examples
    std::optional<ConfusionMatrix> sent_given_nonsarc;  // ... over gold-non-sarcastic examples
};

/// Sarcasm threshold 0.5, sentiment argmax.
MetricsReport evaluate(const ModelConfig& cfg, const ModelParams& params, const Vocab& vocab,
                       std::span<const Record> records, bool parallel = true);
MetricsReport evaluate(const TrainedModel& model, std::span<const Record> records, bool parallel = true);

std::string format_report(const MetricsReport& report);
std::string format_confusion(const ConfusionMatrix& cm, const std::string& title);
void write_report_tsv(const std::string& path, const MetricsReport& report, const std::string& header_comment);
void write_confusion_tsv(const std::string& path, const ConfusionMatrix& cm);

}  // namespace tandem
