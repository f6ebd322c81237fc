#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tandem/data.hpp"

using namespace tandem;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "tandem_test_data";
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> tokens_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(text);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

}  // namespace

TEST_CASE("parse_dataset") {
    SUBCASE("two-row fixture with exact fields") {
        const auto path = temp_file("fixture.tsv");
        write_text(path,
                   "text\tsentiment\tsarcasm\tdialect\n"
                   "great game tonight\tPOS\tFALSE\tmsa\n"
                   "oh sure that went well\tNEG\tTRUE\tegypt\n");
        const auto records = parse_dataset(path.string());
        REQUIRE(records.size() == 2);
        CHECK(records[0].text == "great game tonight");
        CHECK(records[0].sentiment == Sentiment::positive);
        CHECK(records[0].sarcastic == false);
        CHECK(records[0].dialect == "msa");
        CHECK(records[1].sentiment == Sentiment::negative);
        CHECK(records[1].sarcastic == true);
        CHECK(records[1].dialect == "egypt");
    }
    SUBCASE("missing column rejected") {
        const auto path = temp_file("missing_col.tsv");
        write_text(path, "text\tsentiment\nhello\tPOS\n");
        CHECK_THROWS_WITH_AS(parse_dataset(path.string()),
                             doctest::Contains("header must name columns"), DataError);
    }
    SUBCASE("unknown label names the line") {
        const auto path = temp_file("bad_label.tsv");
        write_text(path,
                   "text\tsentiment\tsarcasm\tdialect\n"
                   "fine\tPOS\tFALSE\tmsa\n"
                   "weird\tMEH\tFALSE\tmsa\n");
        CHECK_THROWS_WITH_AS(parse_dataset(path.string()), doctest::Contains("line 3"), DataError);
    }
    SUBCASE("empty file rejected") {
        const auto path = temp_file("empty.tsv");
        write_text(path, "");
        CHECK_THROWS_AS(parse_dataset(path.string()), DataError);
    }
    SUBCASE("header-only file rejected") {
        const auto path = temp_file("header_only.tsv");
        write_text(path, "text\tsentiment\tsarcasm\tdialect\n");
        CHECK_THROWS_WITH_AS(parse_dataset(path.string()), doctest::Contains("no data rows"), DataError);
    }
    SUBCASE("missing file rejected") {
        CHECK_THROWS_AS(parse_dataset("/nonexistent/nowhere.tsv"), DataError);
    }
}

TEST_CASE("write_dataset round-trips every field") {
    const auto path = temp_file("roundtrip.tsv");
    std::vector<Record> records;
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        Record r;
        r.text = "tok" + std::to_string(rng.below(50)) + " tok" + std::to_string(rng.below(50));
        r.sentiment = static_cast<Sentiment>(rng.below(3));
        r.sarcastic = rng.below(2) == 1;
        r.dialect = rng.below(2) ? "msa" : "gulf";
        records.push_back(r);
    }
    write_dataset(path.string(), records, "fixture seed=4");
    const auto parsed = parse_dataset(path.string());
    REQUIRE(parsed.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(parsed[i].text == records[i].text);
        CHECK(parsed[i].sentiment == records[i].sentiment);
        CHECK(parsed[i].sarcastic == records[i].sarcastic);
        CHECK(parsed[i].dialect == records[i].dialect);
    }
    // parse -> write reproduces the file byte for byte
    const auto path2 = temp_file("roundtrip2.tsv");
    write_dataset(path2.string(), parsed, "fixture seed=4");
    CHECK(read_bytes(path) == read_bytes(path2));
}

TEST_CASE("tokenize") {
    std::vector<Record> base = {{"a a a b", Sentiment::neutral, false, ""}};
    const Vocab vocab = Vocab::build(base);  // a commoner than b: a=3, b=4
    REQUIRE(vocab.id_of("a") == 3);
    REQUIRE(vocab.id_of("b") == 4);

    SUBCASE("empty text becomes bare CLS") {
        CHECK(tokenize("", vocab, 8) == std::vector<int>{Vocab::kCls});
    }
    SUBCASE("known and repeated tokens") {
        CHECK(tokenize("a b a", vocab, 8) == std::vector<int>{2, 3, 4, 3});
    }
    SUBCASE("unknown tokens map to UNK") {
        CHECK(tokenize("a zzz", vocab, 8) == std::vector<int>{2, 3, Vocab::kUnk});
    }
    SUBCASE("long text truncates to n_max") {
        std::string text;
        for (int i = 0; i < 500; ++i) text += "a ";
        CHECK(tokenize(text, vocab, 64).size() == 64);
    }
}

TEST_CASE("split_train_dev") {
    auto make_records = [](std::map<std::pair<int, int>, int> strata) {
        std::vector<Record> out;
        for (const auto& [key, count] : strata) {
            for (int i = 0; i < count; ++i) {
                out.push_back({"w" + std::to_string(i), static_cast<Sentiment>(key.first), key.second == 1, ""});
            }
        }
        return out;
    };

    SUBCASE("80/20 on uniform strata") {
        const auto records = make_records({{{0, 0}, 50}, {{1, 1}, 50}});
        Rng rng(3);
        auto [train, dev] = split_train_dev(records, 0.8, rng);
        CHECK(train.size() == 80);
        CHECK(dev.size() == 20);
    }
    SUBCASE("deterministic for a fixed seed") {
        const auto records = make_records({{{0, 0}, 37}, {{2, 1}, 23}, {{1, 0}, 40}});
        auto run = [&] {
            Rng rng(11);
            auto [train, dev] = split_train_dev(records, 0.8, rng);
            std::vector<std::string> texts;
            for (const auto& r : train) texts.push_back(r.text + to_label(r.sentiment));
            for (const auto& r : dev) texts.push_back("|" + r.text);
            return texts;
        };
        CHECK(run() == run());
    }
    SUBCASE("per-stratum counts within one of the exact share") {
        const auto records = make_records({{{0, 0}, 50}, {{2, 0}, 50}});
        Rng rng(5);
        auto [train, dev] = split_train_dev(records, 0.8, rng);
        int dev_a = 0, dev_b = 0;
        for (const auto& r : dev) (r.sentiment == Sentiment::negative ? dev_a : dev_b)++;
        CHECK(std::abs(dev_a - 10) <= 1);
        CHECK(std::abs(dev_b - 10) <= 1);
        CHECK(dev.size() == 20);
    }
    SUBCASE("union and disjointness") {
        const auto records = make_records({{{0, 1}, 13}, {{1, 0}, 29}, {{2, 1}, 8}});
        Rng rng(7);
        auto [train, dev] = split_train_dev(records, 0.8, rng);
        CHECK(train.size() + dev.size() == records.size());
        std::multiset<std::string> all, got;
        for (const auto& r : records) all.insert(r.text + to_label(r.sentiment) + (r.sarcastic ? "T" : "F"));
        for (const auto& r : train) got.insert(r.text + to_label(r.sentiment) + (r.sarcastic ? "T" : "F"));
        for (const auto& r : dev) got.insert(r.text + to_label(r.sentiment) + (r.sarcastic ? "T" : "F"));
        CHECK(all == got);
    }
    SUBCASE("tiny stratum goes wholly to train") {
        const auto records = make_records({{{0, 0}, 30}, {{2, 1}, 1}});
        Rng rng(1);
        auto [train, dev] = split_train_dev(records, 0.8, rng);
        int positive_in_dev = 0;
        for (const auto& r : dev) positive_in_dev += r.sentiment == Sentiment::positive;
        CHECK(positive_in_dev == 0);
    }
    SUBCASE("too few records rejected") {
        const auto records = make_records({{{0, 0}, 9}});
        Rng rng(0);
        CHECK_THROWS_AS(split_train_dev(records, 0.8, rng), DataError);
    }
}

TEST_CASE("make_batches") {
    std::vector<Record> records;
    for (int i = 0; i < 130; ++i) {
        records.push_back({"t" + std::to_string(i % 7) + " x y", static_cast<Sentiment>(i % 3), i % 4 == 0, ""});
    }
    const Vocab vocab = Vocab::build(records);

    SUBCASE("batch sizes 64, 64, 2") {
        Rng rng(9);
        const auto batches = make_batches(records, vocab, 64, 16, rng);
        REQUIRE(batches.size() == 3);
        CHECK(batches[0].batch_size == 64);
        CHECK(batches[1].batch_size == 64);
        CHECK(batches[2].batch_size == 2);
    }
    SUBCASE("mask marks CLS plus real tokens") {
        const std::vector<Record> one = {{"a b c", Sentiment::neutral, false, ""}};
        const Vocab v = Vocab::build(one);
        Rng rng(0);
        const auto batches = make_batches(one, v, 4, 8, rng);
        const std::vector<std::uint8_t> expect = {1, 1, 1, 1, 0, 0, 0, 0};
        CHECK(std::vector<std::uint8_t>(batches[0].mask_row(0).begin(), batches[0].mask_row(0).end()) == expect);
    }
    SUBCASE("same seed gives the same order") {
        auto ids_of = [&] {
            Rng rng(42);
            std::vector<int> all;
            for (const auto& b : make_batches(records, vocab, 32, 16, rng)) {
                all.insert(all.end(), b.token_ids.begin(), b.token_ids.end());
            }
            return all;
        };
        CHECK(ids_of() == ids_of());
    }
    SUBCASE("every row starts with CLS and has a real token") {
        Rng rng(2);
        for (const auto& b : make_batches(records, vocab, 16, 12, rng)) {
            for (int i = 0; i < b.batch_size; ++i) {
                CHECK(b.ids_row(i)[0] == Vocab::kCls);
                CHECK(b.mask_row(i)[0] == 1);
            }
        }
    }
    SUBCASE("invalid batch size rejected") {
        Rng rng(0);
        CHECK_THROWS_AS(make_batches(records, vocab, 0, 8, rng), DataError);
    }
}

TEST_CASE("synth_generate") {
    SUBCASE("sarcastic fraction tracks p_sarcastic") {
        SynthConfig cfg;
        cfg.n_examples = 10000;
        cfg.p_sarcastic = 0.2;
        cfg.seed = 17;
        const auto records = synth_generate(cfg);
        double frac = 0.0;
        for (const auto& r : records) frac += r.sarcastic;
        frac /= records.size();
        CHECK(std::abs(frac - 0.2) <= 0.01);
    }
    SUBCASE("label frequencies converge within 3 sigma") {
        SynthConfig cfg;
        cfg.n_examples = 10000;
        cfg.seed = 23;
        const auto records = synth_generate(cfg);
        long n_sarc = 0, n_neg_given_sarc = 0;
        for (const auto& r : records) {
            if (r.sarcastic) {
                ++n_sarc;
                n_neg_given_sarc += r.sentiment == Sentiment::negative;
            }
        }
        const double p_hat = static_cast<double>(n_sarc) / cfg.n_examples;
        const double sigma = std::sqrt(cfg.p_sarcastic * (1 - cfg.p_sarcastic) / cfg.n_examples);
        CHECK(std::abs(p_hat - cfg.p_sarcastic) <= 3 * sigma);
        const double q_hat = static_cast<double>(n_neg_given_sarc) / n_sarc;
        const double sigma_q = std::sqrt(cfg.p_neg_given_sarc * (1 - cfg.p_neg_given_sarc) / n_sarc);
        CHECK(std::abs(q_hat - cfg.p_neg_given_sarc) <= 3 * sigma_q);
    }
    SUBCASE("full signal strength plants both task indicators in every text") {
        SynthConfig cfg;
        cfg.n_examples = 500;
        cfg.signal_strength = 1.0;
        cfg.seed = 3;
        for (const auto& r : synth_generate(cfg)) {
            const auto toks = tokens_of(r.text);
            REQUIRE(toks.size() >= 4);
            CHECK(toks[1] == (r.sarcastic ? "isarc" : "insarc"));
            const char* sent_ind = r.sentiment == Sentiment::negative ? "ineg"
                                   : r.sentiment == Sentiment::neutral ? "ineu"
                                                                       : "ipos";
            CHECK(toks[0] == sent_ind);
        }
    }
    SUBCASE("fixed seed gives a byte-identical dataset file") {
        SynthConfig cfg;
        cfg.n_examples = 1000;
        cfg.seed = 7;
        const auto a = temp_file("synth_a.tsv");
        const auto b = temp_file("synth_b.tsv");
        write_dataset(a.string(), synth_generate(cfg), "synth seed=7");
        write_dataset(b.string(), synth_generate(cfg), "synth seed=7");
        CHECK(read_bytes(a) == read_bytes(b));
        CHECK(!read_bytes(a).empty());
    }
    SUBCASE("invalid probabilities rejected") {
        SynthConfig cfg;
        cfg.p_sarcastic = 1.0;
        CHECK_THROWS_AS(synth_generate(cfg), DataError);
        cfg.p_sarcastic = 0.5;
        cfg.signal_strength = 1.5;
        CHECK_THROWS_AS(synth_generate(cfg), DataError);
    }
}
