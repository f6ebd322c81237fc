#include "tandem/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tandem {

long ConfusionMatrix::total() const {
    long t = 0;
    for (long c : counts) t += c;
    return t;
}

long ConfusionMatrix::trace() const {
    long t = 0;
    for (int i = 0; i < k; ++i) t += at(i, i);
    return t;
}

ConfusionMatrix confusion(std::span<const int> golds, std::span<const int> preds, int k,
                          std::vector<std::string> labels) {
    if (golds.size() != preds.size()) {
        throw std::invalid_argument("confusion: " + std::to_string(golds.size()) + " golds vs " +
                                    std::to_string(preds.size()) + " preds");
    }
    ConfusionMatrix cm(k, std::move(labels));
    for (std::size_t i = 0; i < golds.size(); ++i) {
        if (golds[i] < 0 || golds[i] >= k || preds[i] < 0 || preds[i] >= k) {
            throw std::invalid_argument("confusion: label out of range at index " + std::to_string(i));
        }
        ++cm.at(golds[i], preds[i]);
    }
    return cm;
}

Prf prf_of_class(const ConfusionMatrix& cm, int c) {
    long tp = cm.at(c, c), fp = 0, fn = 0;
    for (int g = 0; g < cm.k; ++g)
        if (g != c) fp += cm.at(g, c);
    for (int p = 0; p < cm.k; ++p)
        if (p != c) fn += cm.at(c, p);
    Prf out;
    out.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    out.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    out.f1 = (out.precision + out.recall) > 0.0 ? 2.0 * out.precision * out.recall / (out.precision + out.recall) : 0.0;
    return out;
}

Prf macro_prf(const ConfusionMatrix& cm) {
    Prf acc;
    for (int c = 0; c < cm.k; ++c) {
        const Prf p = prf_of_class(cm, c);
        acc.precision += p.precision;
        acc.recall += p.recall;
        acc.f1 += p.f1;
    }
    acc.precision /= cm.k;
    acc.recall /= cm.k;
    acc.f1 /= cm.k;
    return acc;
}

double accuracy(const ConfusionMatrix& cm) {
    const long t = cm.total();
    return t > 0 ? static_cast<double>(cm.trace()) / static_cast<double>(t) : 0.0;
}

double f1_of_class(const ConfusionMatrix& cm, int c) { return prf_of_class(cm, c).f1; }

double f1_pn(const ConfusionMatrix& cm) {
    if (cm.k != 3) throw std::invalid_argument("f1_pn: expected a 3x3 sentiment matrix, got k=" + std::to_string(cm.k));
    const int neg = static_cast<int>(Sentiment::negative);
    const int pos = static_cast<int>(Sentiment::positive);
    return 0.5 * (f1_of_class(cm, neg) + f1_of_class(cm, pos));
}

TaskMetrics task_metrics(const ConfusionMatrix& cm) {
    TaskMetrics tm;
    tm.cm = cm;
    const Prf macro = macro_prf(cm);
    tm.precision = macro.precision;
    tm.recall = macro.recall;
    tm.f1 = macro.f1;
    tm.accuracy = accuracy(cm);
    return tm;
}

MetricsReport evaluate(const ModelConfig& cfg, const ModelParams& params, const Vocab& vocab,
                       std::span<const Record> records, bool parallel) {
    const Batch batch = pack_batch(records, vocab, cfg.encoder.n_max);
    const std::vector<ExampleOutput> outputs = batch_outputs(cfg, params, batch, parallel);

    MetricsReport report;
    if (has_sarc_head(cfg.variant)) {
        std::vector<int> golds(batch.batch_size), preds(batch.batch_size);
        for (int i = 0; i < batch.batch_size; ++i) {
            golds[i] = batch.y_sarc[i];
            preds[i] = *outputs[i].sarc_prob > 0.5 ? 1 : 0;
        }
        const ConfusionMatrix cm = confusion(golds, preds, 2, {"FALSE", "TRUE"});
        report.sarcasm = task_metrics(cm);
        report.f1_sarc = f1_of_class(cm, 1);
    }
    if (has_sent_head(cfg.variant)) {
        std::vector<int> golds(batch.batch_size), preds(batch.batch_size);
        for (int i = 0; i < batch.batch_size; ++i) {
            golds[i] = batch.y_sent[i];
            const auto& p = *outputs[i].sent_probs;
            preds[i] = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
        }
        const std::vector<std::string> labels = {"NEG", "NEU", "POS"};
        const ConfusionMatrix cm = confusion(golds, preds, 3, labels);
        report.sentiment = task_metrics(cm);
        report.f1_pn = f1_pn(cm);

        ConfusionMatrix cm_sarc(3, labels), cm_nonsarc(3, labels);
        for (int i = 0; i < batch.batch_size; ++i) {
            (batch.y_sarc[i] ? cm_sarc : cm_nonsarc).at(golds[i], preds[i])++;
        }
        report.sent_given_sarc = std::move(cm_sarc);
        report.sent_given_nonsarc = std::move(cm_nonsarc);
    }
    return report;
}

MetricsReport evaluate(const TrainedModel& model, std::span<const Record> records, bool parallel) {
    return evaluate(model.config, model.params, model.vocab, records, parallel);
}

std::string format_confusion(const ConfusionMatrix& cm, const std::string& title) {
    std::ostringstream out;
    out << title << " (rows gold, cols predicted)\n";
    out << "          ";
    for (int p = 0; p < cm.k; ++p) out << " " << cm.labels[p] << "     ";
    out << "\n";
    for (int g = 0; g < cm.k; ++g) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%-9s", cm.labels[g].c_str());
        out << buf;
        for (int p = 0; p < cm.k; ++p) {
            std::snprintf(buf, sizeof(buf), " %8ld", cm.at(g, p));
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

namespace {

std::string metric_line(const char* name, double value) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "  %-22s %.4f\n", name, value);
    return buf;
}

}  // namespace

std::string format_report(const MetricsReport& report) {
    std::ostringstream out;
    if (report.sarcasm) {
        out << "sarcasm detection\n";
        out << metric_line("macro precision", report.sarcasm->precision);
        out << metric_line("macro recall", report.sarcasm->recall);
        out << metric_line("accuracy", report.sarcasm->accuracy);
        out << metric_line("macro F1", report.sarcasm->f1);
        out << metric_line("F1 (sarcastic class)", *report.f1_sarc);
    } else {
        out << "sarcasm detection: no head in this variant\n";
    }
    if (report.sentiment) {
        out << "sentiment analysis\n";
        out << metric_line("macro precision", report.sentiment->precision);
        out << metric_line("macro recall", report.sentiment->recall);
        out << metric_line("accuracy", report.sentiment->accuracy);
        out << metric_line("macro F1", report.sentiment->f1);
        out << metric_line("F1 (pos/neg only)", *report.f1_pn);
    } else {
        out << "sentiment analysis: no head in this variant\n";
    }
    out << "\n";
    if (report.sarcasm) out << format_confusion(report.sarcasm->cm, "sarcasm") << "\n";
    if (report.sentiment) {
        out << format_confusion(report.sentiment->cm, "sentiment") << "\n";
        out << format_confusion(*report.sent_given_sarc, "sentiment | gold sarcastic") << "\n";
        out << format_confusion(*report.sent_given_nonsarc, "sentiment | gold non-sarcastic") << "\n";
    }
    return out.str();
}

void write_report_tsv(const std::string& path, const MetricsReport& report, const std::string& header_comment) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write report '" + path + "'");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "task\tmetric\tvalue\n";
    char buf[64];
    auto emit = [&](const char* task, const char* metric, double v) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        out << task << '\t' << metric << '\t' << buf << '\n';
    };
    if (report.sarcasm) {
        emit("sarcasm", "precision", report.sarcasm->precision);
        emit("sarcasm", "recall", report.sarcasm->recall);
        emit("sarcasm", "accuracy", report.sarcasm->accuracy);
        emit("sarcasm", "f1", report.sarcasm->f1);
        emit("sarcasm", "f1_sarc", *report.f1_sarc);
    }
    if (report.sentiment) {
        emit("sentiment", "precision", report.sentiment->precision);
        emit("sentiment", "recall", report.sentiment->recall);
        emit("sentiment", "accuracy", report.sentiment->accuracy);
        emit("sentiment", "f1", report.sentiment->f1);
        emit("sentiment", "f1_pn", *report.f1_pn);
    }
    if (!out) throw DataError("failed writing report '" + path + "'");
}

void write_confusion_tsv(const std::string& path, const ConfusionMatrix& cm) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write confusion matrix '" + path + "'");
    out << "gold\\pred";
    for (int p = 0; p < cm.k; ++p) out << '\t' << cm.labels[p];
    out << '\n';
    for (int g = 0; g < cm.k; ++g) {
        out << cm.labels[g];
        for (int p = 0; p < cm.k; ++p) out << '\t' << cm.at(g, p);
        out << '\n';
    }
    if (!out) throw DataError("failed writing confusion matrix '" + path + "'");
}

}  // namespace tandem
