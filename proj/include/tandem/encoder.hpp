#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tandem/data.hpp"
#include "tandem/rng.hpp"
#include "tandem/tape.hpp"
#include "tandem/tensor.hpp"

namespace tandem {

/// Xavier-uniform init, limit sqrt(6 / (rows + cols)).
Tensor xavier_uniform(int rows, int cols, Rng& rng);

enum class EncoderKind { bag_of_embeddings, tiny_transformer };

const char* to_string(EncoderKind k);
EncoderKind encoder_kind_from_string(const std::string& s);  // throws DataError

struct EncoderConfig {
    EncoderKind kind = EncoderKind::tiny_transformer;
    int d = 64;
    int layers = 2;
    int heads = 4;
    int n_max = 64;

    int ffn_width() const { return 2 * d; }
    void validate() const;  // throws DataError
};

/// One transformer block: masked multi-head self-attention and a
/// position-wise feed-forward, each followed by residual + layer norm.
/// T is Tensor for stored parameters, Var for tape-bound ones; visit()
/// enumerates members in one canonical order shared by both.
template <class T>
struct BlockParamsT {
    T query_w, query_b;
    T key_w, key_b;
    T value_w, value_b;
    T attn_out_w, attn_out_b;
    T ln_attn_gain, ln_attn_bias;
    T ffn_in_w, ffn_in_b;
    T ffn_out_w, ffn_out_b;
    T ln_ffn_gain, ln_ffn_bias;

    template <class Self, class F>
    static void visit_impl(Self& self, const std::string& prefix, F&& f) {
        f(prefix + ".query_w", self.query_w);
        f(prefix + ".query_b", self.query_b);
        f(prefix + ".key_w", self.key_w);
        f(prefix + ".key_b", self.key_b);
        f(prefix + ".value_w", self.value_w);
        f(prefix + ".value_b", self.value_b);
        f(prefix + ".attn_out_w", self.attn_out_w);
        f(prefix + ".attn_out_b", self.attn_out_b);
        f(prefix + ".ln_attn_gain", self.ln_attn_gain);
        f(prefix + ".ln_attn_bias", self.ln_attn_bias);
        f(prefix + ".ffn_in_w", self.ffn_in_w);
        f(prefix + ".ffn_in_b", self.ffn_in_b);
        f(prefix + ".ffn_out_w", self.ffn_out_w);
        f(prefix + ".ffn_out_b", self.ffn_out_b);
        f(prefix + ".ln_ffn_gain", self.ln_ffn_gain);
        f(prefix + ".ln_ffn_bias", self.ln_ffn_bias);
    }
    template <class F>
    void visit(const std::string& prefix, F&& f) { visit_impl(*this, prefix, f); }
    template <class F>
    void visit(const std::string& prefix, F&& f) const { visit_impl(*this, prefix, f); }
};

template <class T>
struct EncoderParamsT {
    T token_emb;  // vocab_size x d
    T pos_emb;    // n_max x d
    std::vector<BlockParamsT<T>> blocks;  // empty for bag-of-embeddings

    template <class Self, class F>
    static void visit_impl(Self& self, F&& f) {
        f("encoder.token_emb", self.token_emb);
        f("encoder.pos_emb", self.pos_emb);
        for (std::size_t i = 0; i < self.blocks.size(); ++i) {
            self.blocks[i].visit("encoder.block" + std::to_string(i), f);
        }
    }
    template <class F>
    void visit(F&& f) { visit_impl(*this, f); }
    template <class F>
    void visit(F&& f) const { visit_impl(*this, f); }
};

using EncoderParams = EncoderParamsT<Tensor>;
using EncoderVars = EncoderParamsT<Var>;

EncoderParams init_encoder(const EncoderConfig& cfg, int vocab_size, Rng& rng);
EncoderVars bind(Tape& tape, const EncoderParams& params);

struct EncoderOut {
    Var h_cls;  // 1 x d
    Var H;      // n_max x d; rows at masked positions are computed but inert downstream
};

/// ids/mask must have length cfg.n_max (batches are padded to full width).
EncoderOut encode(const EncoderConfig& cfg, const EncoderVars& vars, std::span<const int> ids,
                  std::span<const std::uint8_t> mask);

Var self_attention_block(Var x, std::span<const std::uint8_t> mask, const BlockParamsT<Var>& p, int heads);

/// Overwrites rows of `embeddings` for vocab tokens found in the file
/// (format: "count d" header, then `token v1 .. vd` per line). Tokens not in
/// the file keep their seeded initialization. Returns how many rows loaded.
int load_pretrained_embeddings(const std::string& path, const Vocab& vocab, Tensor& embeddings);

}  // namespace tandem
