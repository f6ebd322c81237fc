#include "tandem/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace tandem {

const char* to_label(Sentiment s) {
    switch (s) {
        case Sentiment::negative: return "NEG";
        case Sentiment::neutral: return "NEU";
        case Sentiment::positive: return "POS";
    }
    return "NEU";
}

Sentiment sentiment_from_label(const std::string& s) {
    if (s == "NEG") return Sentiment::negative;
    if (s == "NEU") return Sentiment::neutral;
    if (s == "POS") return Sentiment::positive;
    throw DataError("unknown sentiment label '" + s + "'");
}

namespace {

bool sarcasm_from_label(const std::string& s) {
    if (s == "TRUE") return true;
    if (s == "FALSE") return false;
    throw DataError("unknown sarcasm label '" + s + "'");
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

Vocab::Vocab() {
    tokens_ = {"[PAD]", "[UNK]", "[CLS]"};
    ids_ = {{"[PAD]", kPad}, {"[UNK]", kUnk}, {"[CLS]", kCls}};
}

void Vocab::add(const std::string& token) {
    if (ids_.count(token)) return;
    ids_[token] = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
}

int Vocab::id_of(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

Vocab Vocab::build(std::span<const Record> records, int min_count) {
    std::map<std::string, long> counts;  // ordered map keeps ties deterministic
    for (const Record& r : records) {
        for (auto& tok : whitespace_tokens(r.text)) ++counts[tok];
    }
    std::vector<std::pair<std::string, long>> items(counts.begin(), counts.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocab v;
    for (const auto& [tok, count] : items) {
        if (count >= min_count) v.add(tok);
    }
    return v;
}

void SynthConfig::validate() const {
    if (vocab_size < 1) throw DataError("synth: vocab_size must be >= 1");
    if (n_examples < 1) throw DataError("synth: n_examples must be >= 1");
    if (max_len < 4) throw DataError("synth: max_len must be >= 4");
    if (!(p_sarcastic > 0.0 && p_sarcastic < 1.0)) throw DataError("synth: p_sarcastic must be in (0,1)");
    if (!(p_neg_given_sarc > 0.0 && p_neg_given_sarc < 1.0)) throw DataError("synth: p_neg_given_sarc must be in (0,1)");
    if (signal_strength < 0.0 || signal_strength > 1.0) throw DataError("synth: signal_strength must be in [0,1]");
}

std::vector<Record> parse_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file '" + path + "'");

    std::string line;
    long line_no = 0;
    // header (skipping leading comment lines)
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line[0] == '#') continue;
        header = split_tabs(line);
        break;
    }
    if (header.empty()) throw DataError("dataset file '" + path + "' is empty");

    int col_text = -1, col_sent = -1, col_sarc = -1, col_dialect = -1;
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
        const std::string name = trim(header[i]);
        if (name == "text") col_text = i;
        else if (name == "sentiment") col_sent = i;
        else if (name == "sarcasm") col_sarc = i;
        else if (name == "dialect") col_dialect = i;
    }
    if (col_text < 0 || col_sent < 0 || col_sarc < 0) {
        throw DataError("dataset file '" + path + "': header must name columns text, sentiment, sarcasm (got '" +
                        (header.empty() ? "" : line) + "')");
    }

    std::vector<Record> records;
    std::vector<long> bad_lines;
    std::string first_error;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') continue;
        const auto cols = split_tabs(line);
        try {
            if (static_cast<int>(cols.size()) <= std::max({col_text, col_sent, col_sarc})) {
                throw DataError("expected " + std::to_string(header.size()) + " columns, got " +
                                std::to_string(cols.size()));
            }
            Record r;
            r.text = trim(cols[col_text]);
            if (r.text.empty()) throw DataError("empty text");
            r.sentiment = sentiment_from_label(trim(cols[col_sent]));
            r.sarcastic = sarcasm_from_label(trim(cols[col_sarc]));
            if (col_dialect >= 0 && col_dialect < static_cast<int>(cols.size())) r.dialect = trim(cols[col_dialect]);
            records.push_back(std::move(r));
        } catch (const DataError& e) {
            bad_lines.push_back(line_no);
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (!bad_lines.empty()) {
        std::string where = "line " + std::to_string(bad_lines[0]);
        for (std::size_t i = 1; i < bad_lines.size() && i < 5; ++i) where += ", " + std::to_string(bad_lines[i]);
        if (bad_lines.size() > 5) where += ", ...";
        throw DataError("dataset file '" + path + "': rejected " + std::to_string(bad_lines.size()) + " row(s) (" +
                        where + "): " + first_error);
    }
    if (records.empty()) throw DataError("dataset file '" + path + "' has no data rows");
    return records;
}

void write_dataset(const std::string& path, std::span<const Record> records, const std::string& header_comment) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset file '" + path + "'");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "text\tsentiment\tsarcasm\tdialect\n";
    for (const Record& r : records) {
        std::string text = r.text;
        for (char& c : text)
            if (c == '\t' || c == '\n' || c == '\r') c = ' ';
        out << text << '\t' << to_label(r.sentiment) << '\t' << (r.sarcastic ? "TRUE" : "FALSE") << '\t' << r.dialect
            << '\n';
    }
    if (!out) throw DataError("failed writing dataset file '" + path + "'");
}

std::vector<int> tokenize(const std::string& text, const Vocab& vocab, int n_max) {
    std::vector<int> ids;
    ids.push_back(Vocab::kCls);
    for (const auto& tok : whitespace_tokens(text)) {
        if (static_cast<int>(ids.size()) >= n_max) break;
        ids.push_back(vocab.id_of(tok));
    }
    return ids;
}

std::pair<std::vector<Record>, std::vector<Record>> split_train_dev(std::span<const Record> records,
                                                                    double train_ratio, Rng& rng) {
    if (records.size() < 10) throw DataError("split_train_dev: need at least 10 records");
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw DataError("split_train_dev: ratio must be in (0,1)");

    std::vector<Record> train, dev;
    // fixed stratum order: sentiment major, sarcasm minor
    for (int s = 0; s < 3; ++s) {
        for (int c = 0; c < 2; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < records.size(); ++i) {
                if (static_cast<int>(records[i].sentiment) == s && static_cast<int>(records[i].sarcastic) == c) {
                    members.push_back(i);
                }
            }
            if (members.empty()) continue;
            if (members.size() < 2) {
                std::fprintf(stderr, "split_train_dev: stratum (%s,%s) has %zu member(s); keeping it in train\n",
                             to_label(static_cast<Sentiment>(s)), c ? "TRUE" : "FALSE", members.size());
                for (std::size_t i : members) train.push_back(records[i]);
                continue;
            }
            rng.shuffle(members);
            const long n_dev = std::lround(static_cast<double>(members.size()) * (1.0 - train_ratio));
            for (std::size_t j = 0; j < members.size(); ++j) {
                (static_cast<long>(j) < n_dev ? dev : train).push_back(records[members[j]]);
            }
        }
    }
    return {std::move(train), std::move(dev)};
}

Batch pack_batch(std::span<const Record> records, const Vocab& vocab, int n_max) {
    if (n_max < 1) throw DataError("pack_batch: n_max must be >= 1");
    const int b = static_cast<int>(records.size());
    Batch batch;
    batch.batch_size = b;
    batch.n_max = n_max;
    batch.token_ids.assign(static_cast<std::size_t>(b) * n_max, Vocab::kPad);
    batch.mask.assign(static_cast<std::size_t>(b) * n_max, 0);
    batch.y_sent.resize(b);
    batch.y_sarc.resize(b);
    for (int i = 0; i < b; ++i) {
        const Record& r = records[i];
        const auto ids = tokenize(r.text, vocab, n_max);
        for (std::size_t j = 0; j < ids.size(); ++j) {
            batch.token_ids[static_cast<std::size_t>(i) * n_max + j] = ids[j];
            batch.mask[static_cast<std::size_t>(i) * n_max + j] = 1;
        }
        batch.y_sent[i] = static_cast<int>(r.sentiment);
        batch.y_sarc[i] = r.sarcastic ? 1 : 0;
    }
    return batch;
}

std::vector<Batch> make_batches(std::span<const Record> records, const Vocab& vocab, int batch_size, int n_max,
                                Rng& rng) {
    if (batch_size < 1) throw DataError("make_batches: batch_size must be >= 1");

    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    std::vector<Record> shuffled;
    shuffled.reserve(records.size());
    for (std::size_t i : order) shuffled.push_back(records[i]);

    std::vector<Batch> batches;
    for (std::size_t start = 0; start < shuffled.size(); start += batch_size) {
        const std::size_t len = std::min<std::size_t>(batch_size, shuffled.size() - start);
        batches.push_back(pack_batch({shuffled.data() + start, len}, vocab, n_max));
    }
    return batches;
}

namespace {

// Indicator vocabulary of the generator. Joint tokens name both labels
// (they are the only tokens that reveal sarcasm); sentiment tokens name the
// sentiment class alone and make up most of the planted signal. Several
// surface forms per class keep single-token memorization from saturating.
constexpr int kIndicatorForms = 4;
constexpr double kJointShare = 0.15;  // chance a planted non-anchor slot is a joint token

std::string joint_token(Sentiment s, bool sarcastic, int form) {
    static const std::array<const char*, 3> kSent = {"neg", "neu", "pos"};
    return std::string("j") + kSent[static_cast<int>(s)] + (sarcastic ? "t" : "f") + std::to_string(form);
}

std::string sentiment_token(Sentiment s, int form) {
    static const std::array<const char*, 3> kSent = {"neg", "neu", "pos"};
    return std::string("s") + kSent[static_cast<int>(s)] + std::to_string(form);
}

}  // namespace

std::vector<Record> synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    std::vector<Record> out;
    out.reserve(cfg.n_examples);
    for (int e = 0; e < cfg.n_examples; ++e) {
        Record r;
        r.sarcastic = rng.bernoulli(cfg.p_sarcastic);
        if (r.sarcastic) {
            r.sentiment = rng.bernoulli(cfg.p_neg_given_sarc)
                              ? Sentiment::negative
                              : (rng.below(2) == 0 ? Sentiment::neutral : Sentiment::positive);
        } else {
            r.sentiment = static_cast<Sentiment>(rng.below(3));
        }
        const int len = 4 + (cfg.max_len > 4 ? rng.below(cfg.max_len - 3) : 0);
        std::string text;
        for (int i = 0; i < len; ++i) {
            if (i > 0) text.push_back(' ');
            if (rng.bernoulli(cfg.signal_strength)) {
                // position 1 anchors a joint token so full signal strength
                // always determines both labels; elsewhere joint tokens are
                // the scarce minority of the planted signal
                if (i == 1 || rng.bernoulli(kJointShare)) {
                    text += joint_token(r.sentiment, r.sarcastic, rng.below(kIndicatorForms));
                } else {
                    text += sentiment_token(r.sentiment, rng.below(kIndicatorForms));
                }
            } else {
                text += "w" + std::to_string(rng.below(cfg.vocab_size));
            }
        }
        r.text = std::move(text);
        r.dialect = "synth";
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace tandem
