#include "tandem/ablation.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tandem {

const char* to_string(AblationRow r) {
    switch (r) {
        case AblationRow::st: return "ST";
        case AblationRow::st_att: return "ST_ATT";
        case AblationRow::mtl: return "MTL";
        case AblationRow::mtl_att: return "MTL_ATT";
        case AblationRow::mtl_attinter: return "MTL_ATTINTER";
    }
    return "?";
}

AblationRow ablation_row_from_string(const std::string& s) {
    for (AblationRow r : kAllAblationRows) {
        if (s == to_string(r)) return r;
    }
    throw DataError("unknown ablation row '" + s + "'");
}

const AblationEntry& AblationTable::mean_of(AblationRow row, const std::string& split) const {
    for (const AblationEntry& e : means) {
        if (e.row == row && e.split == split) return e;
    }
    throw std::out_of_range("ablation table has no mean row for " + std::string(to_string(row)) + "/" + split);
}

namespace {

void fill_sarcasm_columns(std::array<double, 10>& cols, const MetricsReport& r) {
    cols[0] = r.sarcasm->precision;
    cols[1] = r.sarcasm->recall;
    cols[2] = r.sarcasm->accuracy;
    cols[3] = r.sarcasm->f1;
    cols[4] = *r.f1_sarc;
}

void fill_sentiment_columns(std::array<double, 10>& cols, const MetricsReport& r) {
    cols[5] = r.sentiment->precision;
    cols[6] = r.sentiment->recall;
    cols[7] = r.sentiment->accuracy;
    cols[8] = r.sentiment->f1;
    cols[9] = *r.f1_pn;
}

}  // namespace

AblationTable ablation_run(std::span<const Record> train_data, std::span<const Record> test_data,
                           std::span<const AblationRow> rows, std::span<const std::uint64_t> seeds,
                           const TrainConfig& base) {
    if (seeds.empty()) throw DataError("ablation_run: need at least one seed");

    AblationTable table;
    table.seeds.assign(seeds.begin(), seeds.end());

    for (std::uint64_t seed : seeds) {
        for (AblationRow row : rows) {
            std::vector<VariantKind> variants;
            switch (row) {
                case AblationRow::st: variants = {VariantKind::st_sarc, VariantKind::st_sent}; break;
                case AblationRow::st_att: variants = {VariantKind::st_att_sarc, VariantKind::st_att_sent}; break;
                case AblationRow::mtl: variants = {VariantKind::mtl}; break;
                case AblationRow::mtl_att: variants = {VariantKind::mtl_att}; break;
                case AblationRow::mtl_attinter: variants = {VariantKind::mtl_attinter}; break;
            }

            AblationEntry dev{row, "dev", seed, {}};
            AblationEntry test{row, "test", seed, {}};
            for (VariantKind variant : variants) {
                TrainConfig cfg = base;
                cfg.variant = variant;
                cfg.seed = seed;
                TrainResult result = train(train_data, cfg);
                const MetricsReport& dev_report = result.history.epochs.back().dev_metrics;
                const MetricsReport test_report = evaluate(result.model, test_data, cfg.parallel);
                if (has_sarc_head(variant)) {
                    fill_sarcasm_columns(dev.metrics, dev_report);
                    fill_sarcasm_columns(test.metrics, test_report);
                }
                if (has_sent_head(variant)) {
                    fill_sentiment_columns(dev.metrics, dev_report);
                    fill_sentiment_columns(test.metrics, test_report);
                }
            }
            table.per_seed.push_back(std::move(dev));
            table.per_seed.push_back(std::move(test));
        }
    }

    for (AblationRow row : rows) {
        for (const char* split : {"dev", "test"}) {
            AblationEntry mean{row, split, 0, {}};
            long n = 0;
            for (const AblationEntry& e : table.per_seed) {
                if (e.row == row && e.split == split) {
                    for (std::size_t c = 0; c < e.metrics.size(); ++c) mean.metrics[c] += e.metrics[c];
                    ++n;
                }
            }
            for (double& v : mean.metrics) v /= static_cast<double>(n);
            table.means.push_back(std::move(mean));
        }
    }
    return table;
}

std::string format_ablation(const AblationTable& table) {
    std::ostringstream out;
    out << "means over " << table.seeds.size() << " seed(s); * flags the best value per column within a split\n";
    out << "                           |           sarcasm                     |          sentiment\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-14s %-5s", "model", "split");
    out << buf;
    for (const char* col : {"  prec", "   rec", "   acc", "    f1", " f1Sarc", "  prec", "   rec", "   acc", "    f1",
                            "  f1PN"}) {
        out << " " << col;
    }
    out << "\n";

    for (const char* split : {"dev", "test"}) {
        // best per column within this split
        std::array<double, 10> best{};
        best.fill(-1.0);
        for (const AblationEntry& e : table.means) {
            if (e.split != split) continue;
            for (std::size_t c = 0; c < e.metrics.size(); ++c) best[c] = std::max(best[c], e.metrics[c]);
        }
        for (const AblationEntry& e : table.means) {
            if (e.split != split) continue;
            std::snprintf(buf, sizeof(buf), "%-14s %-5s", to_string(e.row), e.split.c_str());
            out << buf;
            for (std::size_t c = 0; c < e.metrics.size(); ++c) {
                const char flag = e.metrics[c] == best[c] ? '*' : ' ';
                std::snprintf(buf, sizeof(buf), " %.4f%c", e.metrics[c], flag);
                out << buf;
            }
            out << "\n";
        }
    }
    return out.str();
}

void write_ablation_tsv(const std::string& path, const AblationTable& table, const std::string& header_comment) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write ablation table '" + path + "'");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "variant\tsplit\tseed";
    for (const char* col : kAblationColumns) out << '\t' << col;
    out << '\n';
    char buf[24];
    auto emit = [&](const AblationEntry& e, const std::string& seed_label) {
        out << to_string(e.row) << '\t' << e.split << '\t' << seed_label;
        for (double v : e.metrics) {
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            out << '\t' << buf;
        }
        out << '\n';
    };
    for (const AblationEntry& e : table.per_seed) emit(e, std::to_string(e.seed));
    for (const AblationEntry& e : table.means) emit(e, "mean");
    if (!out) throw DataError("failed writing ablation table '" + path + "'");
}

}  // namespace tandem
