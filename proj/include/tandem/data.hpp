#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tandem/rng.hpp"

namespace tandem {

/// Malformed input files, unknown labels, unusable configs. Mapped to exit
/// code 2 by the CLI.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Sentiment : int { negative = 0, neutral = 1, positive = 2 };

const char* to_label(Sentiment s);
Sentiment sentiment_from_label(const std::string& s);  // throws DataError

struct Record {
    std::string text;
    Sentiment sentiment = Sentiment::neutral;
    bool sarcastic = false;
    std::string dialect;  // carried through, ignored by models
};

/// Token -> id map with reserved ids 0=PAD, 1=UNK, 2=CLS. Ids are dense.
class Vocab {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCls = 2;

    Vocab();

    /// Whitespace tokens from `records`, kept if seen >= min_count times,
    /// ids assigned by (count desc, token asc) for determinism.
    static Vocab build(std::span<const Record> records, int min_count = 1);

    int id_of(const std::string& token) const;  // kUnk for unknown tokens
    const std::string& token_of(int id) const { return tokens_[id]; }
    int size() const { return static_cast<int>(tokens_.size()); }

    void add(const std::string& token);  // appends with the next id

private:
    std::unordered_map<std::string, int> ids_;
    std::vector<std::string> tokens_;
};

/// Fixed-width batch: row-major [batch_size x n_max] token ids plus mask,
/// mask true exactly at real tokens. Position 0 of every row is CLS.
struct Batch {
    int batch_size = 0;
    int n_max = 0;
    std::vector<int> token_ids;
    std::vector<std::uint8_t> mask;
    std::vector<int> y_sent;
    std::vector<int> y_sarc;

    std::span<const int> ids_row(int i) const { return {token_ids.data() + static_cast<std::size_t>(i) * n_max, static_cast<std::size_t>(n_max)}; }
    std::span<const std::uint8_t> mask_row(int i) const { return {mask.data() + static_cast<std::size_t>(i) * n_max, static_cast<std::size_t>(n_max)}; }
};

struct SynthConfig {
    int vocab_size = 300;
    int n_examples = 4000;
    int max_len = 18;
    double p_sarcastic = 0.25;
    double p_neg_given_sarc = 0.7;
    double signal_strength = 0.6;
    std::uint64_t seed = 0;

    void validate() const;  // throws DataError
};

/// Reads the TSV dataset format: header `text	sentiment	sarcasm	dialect`
/// (dialect optional, columns may be permuted), labels NEG|NEU|POS and
/// TRUE|FALSE, UTF-8, LF endings. Lines starting with '#' are skipped.
/// Throws DataError with line numbers for unknown labels or bad rows.
std::vector<Record> parse_dataset(const std::string& path);

/// Inverse of parse_dataset; tabs/newlines inside text are replaced by
/// spaces. `header_comment`, when nonempty, is written as a leading # line.
void write_dataset(const std::string& path, std::span<const Record> records, const std::string& header_comment = "");

/// CLS-prefixed whitespace tokenization, truncated to n_max ids total.
std::vector<int> tokenize(const std::string& text, const Vocab& vocab, int n_max);

/// Stratified split on the joint (sentiment, sarcasm) label; per-stratum dev
/// share is round(size * (1 - train_ratio)). Strata with < 2 members go
/// wholly to train (a warning is printed to stderr). Requires >= 10 records.
std::pair<std::vector<Record>, std::vector<Record>> split_train_dev(std::span<const Record> records,
                                                                    double train_ratio, Rng& rng);

/// Shuffles, then packs into fixed-width batches (last one may be short).
std::vector<Batch> make_batches(std::span<const Record> records, const Vocab& vocab, int batch_size, int n_max,
                                Rng& rng);

/// Packs records into one batch in their given order (no shuffle).
Batch pack_batch(std::span<const Record> records, const Vocab& vocab, int n_max);

/// Synthetic dataset with a planted sarcasm -> negative-sentiment
/// correlation. Per example: sarcasm ~ Bernoulli(p_sarcastic); if sarcastic,
/// sentiment is NEG w.p. p_neg_given_sarc else uniform over {NEU, POS};
/// otherwise uniform over all three. Each token position carries a
/// class-indicator word with probability signal_strength (sarcasm indicators
/// on positions i % 4 == 1, sentiment indicators elsewhere, so the sarcasm
/// task has the scarcer direct signal) and a uniform noise word otherwise.
std::vector<Record> synth_generate(const SynthConfig& cfg);

}  // namespace tandem
