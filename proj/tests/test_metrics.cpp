#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <vector>

#include "tandem/metrics.hpp"
#include "tandem/rng.hpp"

using namespace tandem;

namespace {

// Brute-force metrics over raw label pairs: separate counting and formula
// code path from the library (maps, per-class loops, long double).
struct BruteMetrics {
    double precision, recall, f1, accuracy;
    std::vector<double> class_f1;
};

BruteMetrics brute_force(const std::vector<int>& golds, const std::vector<int>& preds, int k) {
    BruteMetrics out{};
    std::map<std::pair<int, int>, long> counts;
    for (std::size_t i = 0; i < golds.size(); ++i) ++counts[{golds[i], preds[i]}];

    long correct = 0;
    for (int c = 0; c < k; ++c) correct += counts[{c, c}];
    out.accuracy = golds.empty() ? 0.0 : static_cast<double>(correct) / golds.size();

    long double sum_p = 0, sum_r = 0, sum_f = 0;
    for (int c = 0; c < k; ++c) {
        long tp = counts[{c, c}];
        long pred_c = 0, gold_c = 0;
        for (int o = 0; o < k; ++o) {
            pred_c += counts[{o, c}];
            gold_c += counts[{c, o}];
        }
        const long double p = pred_c ? static_cast<long double>(tp) / pred_c : 0.0L;
        const long double r = gold_c ? static_cast<long double>(tp) / gold_c : 0.0L;
        const long double f = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0L;
        sum_p += p;
        sum_r += r;
        sum_f += f;
        out.class_f1.push_back(static_cast<double>(f));
    }
    out.precision = static_cast<double>(sum_p / k);
    out.recall = static_cast<double>(sum_r / k);
    out.f1 = static_cast<double>(sum_f / k);
    return out;
}

ModelConfig tiny_config(VariantKind variant) {
    ModelConfig cfg;
    cfg.variant = variant;
    cfg.encoder.kind = EncoderKind::tiny_transformer;
    cfg.encoder.d = 8;
    cfg.encoder.layers = 1;
    cfg.encoder.heads = 2;
    cfg.encoder.n_max = 8;
    return cfg;
}

}  // namespace

TEST_CASE("confusion") {
    SUBCASE("perfect predictions are diagonal") {
        const std::vector<int> golds = {0, 1, 2, 1, 0};
        const ConfusionMatrix cm = confusion(golds, golds, 3, {"a", "b", "c"});
        CHECK(cm.trace() == 5);
        CHECK(cm.total() == 5);
    }
    SUBCASE("hand case") {
        const std::vector<int> golds = {0, 0, 1, 1};
        const std::vector<int> preds = {0, 1, 0, 1};
        const ConfusionMatrix cm = confusion(golds, preds, 2, {"n", "y"});
        CHECK(cm.at(0, 0) == 1);
        CHECK(cm.at(0, 1) == 1);
        CHECK(cm.at(1, 0) == 1);
        CHECK(cm.at(1, 1) == 1);
    }
    SUBCASE("row sums equal gold class counts on random draws") {
        Rng rng(44);
        for (int trial = 0; trial < 20; ++trial) {
            const int k = 2 + rng.below(4);
            const int n = 1000;
            std::vector<int> golds(n), preds(n), gold_counts(k, 0);
            for (int i = 0; i < n; ++i) {
                golds[i] = rng.below(k);
                preds[i] = rng.below(k);
                ++gold_counts[golds[i]];
            }
            const ConfusionMatrix cm = confusion(golds, preds, k, std::vector<std::string>(k, "x"));
            for (int g = 0; g < k; ++g) {
                long row = 0;
                for (int p = 0; p < k; ++p) row += cm.at(g, p);
                CHECK(row == gold_counts[g]);
            }
        }
    }
    SUBCASE("length mismatch rejected") {
        const std::vector<int> golds = {0, 1};
        const std::vector<int> preds = {0};
        CHECK_THROWS_AS(confusion(golds, preds, 2, {"a", "b"}), std::invalid_argument);
    }
}

TEST_CASE("macro metrics") {
    SUBCASE("perfect 3-class predictions give all ones") {
        const std::vector<int> golds = {0, 1, 2, 0, 1, 2};
        const ConfusionMatrix cm = confusion(golds, golds, 3, {"NEG", "NEU", "POS"});
        const Prf m = macro_prf(cm);
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
        CHECK(accuracy(cm) == 1.0);
        CHECK(f1_pn(cm) == 1.0);
    }
    SUBCASE("cm [[2,1],[1,2]] gives exactly 2/3 everywhere") {
        ConfusionMatrix cm(2, {"n", "y"});
        cm.at(0, 0) = 2;
        cm.at(0, 1) = 1;
        cm.at(1, 0) = 1;
        cm.at(1, 1) = 2;
        for (int c = 0; c < 2; ++c) {
            const Prf p = prf_of_class(cm, c);
            CHECK(p.precision == doctest::Approx(2.0 / 3).epsilon(1e-15));
            CHECK(p.recall == doctest::Approx(2.0 / 3).epsilon(1e-15));
            CHECK(p.f1 == doctest::Approx(2.0 / 3).epsilon(1e-15));
        }
        CHECK(macro_prf(cm).f1 == doctest::Approx(2.0 / 3).epsilon(1e-15));
        CHECK(accuracy(cm) == doctest::Approx(2.0 / 3).epsilon(1e-15));
    }
    SUBCASE("class never predicted and never gold contributes zeros to the average") {
        ConfusionMatrix cm(3, {"NEG", "NEU", "POS"});
        cm.at(0, 0) = 5;
        cm.at(1, 1) = 5;  // POS never appears
        const Prf m = macro_prf(cm);
        CHECK(prf_of_class(cm, 2).f1 == 0.0);
        CHECK(m.f1 == doctest::Approx(2.0 / 3).epsilon(1e-15));
        CHECK(accuracy(cm) == 1.0);
    }
    SUBCASE("accuracy is exactly trace over total") {
        Rng rng(3);
        std::vector<int> golds(500), preds(500);
        for (int i = 0; i < 500; ++i) {
            golds[i] = rng.below(3);
            preds[i] = rng.below(3);
        }
        const ConfusionMatrix cm = confusion(golds, preds, 3, {"a", "b", "c"});
        CHECK(accuracy(cm) == static_cast<double>(cm.trace()) / cm.total());
    }
}

TEST_CASE("metric oracle equivalence on 1000 random prediction sets") {
    Rng rng(555);
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = trial % 2 == 0 ? 2 : 3;
        const int n = 1 + rng.below(60);
        std::vector<int> golds(n), preds(n);
        for (int i = 0; i < n; ++i) {
            golds[i] = rng.below(k);
            preds[i] = rng.below(k);
        }
        const ConfusionMatrix cm = confusion(golds, preds, k, std::vector<std::string>(k, "x"));
        const Prf mine = macro_prf(cm);
        const BruteMetrics ref = brute_force(golds, preds, k);
        CHECK(std::abs(mine.precision - ref.precision) <= 1e-12);
        CHECK(std::abs(mine.recall - ref.recall) <= 1e-12);
        CHECK(std::abs(mine.f1 - ref.f1) <= 1e-12);
        CHECK(std::abs(accuracy(cm) - ref.accuracy) <= 1e-12);
        if (k == 2) CHECK(std::abs(f1_of_class(cm, 1) - ref.class_f1[1]) <= 1e-12);
        if (k == 3) {
            const double expect = 0.5 * (ref.class_f1[0] + ref.class_f1[2]);
            CHECK(std::abs(f1_pn(cm) - expect) <= 1e-12);
        }
    }
}

TEST_CASE("f1_pn ignores neutral-neutral corrections") {
    Rng rng(66);
    ConfusionMatrix cm(3, {"NEG", "NEU", "POS"});
    for (int g = 0; g < 3; ++g)
        for (int p = 0; p < 3; ++p) cm.at(g, p) = rng.below(20);
    const double before = f1_pn(cm);
    cm.at(1, 1) += 500;
    CHECK(f1_pn(cm) == doctest::Approx(before).epsilon(1e-15));
}

TEST_CASE("evaluate") {
    SUBCASE("all-neutral predictor on a balanced set") {
        // zero model with a large neutral output bias always predicts NEU
        ModelConfig cfg = tiny_config(VariantKind::mtl);
        std::vector<Record> records;
        for (int i = 0; i < 30; ++i) {
            records.push_back({"w" + std::to_string(i % 5), static_cast<Sentiment>(i % 3), i % 4 == 0, ""});
        }
        const Vocab vocab = Vocab::build(records);
        cfg.vocab_size = vocab.size();
        ModelParams params = zeros_model(cfg);
        params.clf_sent->out_b.at(0, 1) = 10.0;

        const MetricsReport report = evaluate(cfg, params, vocab, records, false);
        REQUIRE(report.sentiment.has_value());
        CHECK(report.sentiment->accuracy == doctest::Approx(1.0 / 3).epsilon(1e-12));
        CHECK(*report.f1_pn == 0.0);
    }
    SUBCASE("conditional matrices partition the overall sentiment matrix") {
        ModelConfig cfg = tiny_config(VariantKind::mtl_attinter);
        std::vector<Record> records;
        Rng rng(5);
        for (int i = 0; i < 80; ++i) {
            records.push_back({"w" + std::to_string(rng.below(9)) + " w" + std::to_string(rng.below(9)),
                               static_cast<Sentiment>(rng.below(3)), rng.below(2) == 1, ""});
        }
        const Vocab vocab = Vocab::build(records);
        cfg.vocab_size = vocab.size();
        Rng init(Rng::derive(1, 0));
        const ModelParams params = init_model(cfg, init);

        const MetricsReport report = evaluate(cfg, params, vocab, records, false);
        REQUIRE(report.sentiment.has_value());
        REQUIRE(report.sent_given_sarc.has_value());
        REQUIRE(report.sent_given_nonsarc.has_value());
        for (int g = 0; g < 3; ++g) {
            for (int p = 0; p < 3; ++p) {
                CHECK(report.sent_given_sarc->at(g, p) + report.sent_given_nonsarc->at(g, p) ==
                      report.sentiment->cm.at(g, p));
            }
        }
    }
    SUBCASE("missing heads are reported absent, never zero-filled") {
        ModelConfig cfg = tiny_config(VariantKind::st_sarc);
        std::vector<Record> records;
        for (int i = 0; i < 20; ++i) {
            records.push_back({"w" + std::to_string(i % 4), static_cast<Sentiment>(i % 3), i % 2 == 0, ""});
        }
        const Vocab vocab = Vocab::build(records);
        cfg.vocab_size = vocab.size();
        Rng init(Rng::derive(2, 0));
        const MetricsReport report = evaluate(cfg, init_model(cfg, init), vocab, records, false);
        CHECK(report.sarcasm.has_value());
        CHECK(report.f1_sarc.has_value());
        CHECK(!report.sentiment.has_value());
        CHECK(!report.f1_pn.has_value());
        CHECK(!report.sent_given_sarc.has_value());
    }
    SUBCASE("evaluate twice gives identical reports") {
        ModelConfig cfg = tiny_config(VariantKind::mtl_att);
        std::vector<Record> records;
        Rng rng(8);
        for (int i = 0; i < 40; ++i) {
            records.push_back({"w" + std::to_string(rng.below(6)), static_cast<Sentiment>(rng.below(3)),
                               rng.below(2) == 1, ""});
        }
        const Vocab vocab = Vocab::build(records);
        cfg.vocab_size = vocab.size();
        Rng init(Rng::derive(3, 0));
        const ModelParams params = init_model(cfg, init);
        const MetricsReport a = evaluate(cfg, params, vocab, records, true);
        const MetricsReport b = evaluate(cfg, params, vocab, records, true);
        CHECK(a.sarcasm->cm.counts == b.sarcasm->cm.counts);
        CHECK(a.sentiment->cm.counts == b.sentiment->cm.counts);
        CHECK(a.sentiment->f1 == b.sentiment->f1);
    }
}
