#include "tandem/encoder.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace tandem {

Tensor xavier_uniform(int rows, int cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    Tensor t(rows, cols);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
    return t;
}

const char* to_string(EncoderKind k) {
    return k == EncoderKind::bag_of_embeddings ? "bag_of_embeddings" : "tiny_transformer";
}

EncoderKind encoder_kind_from_string(const std::string& s) {
    if (s == "bag_of_embeddings" || s == "bag") return EncoderKind::bag_of_embeddings;
    if (s == "tiny_transformer" || s == "tiny") return EncoderKind::tiny_transformer;
    throw DataError("unknown encoder kind '" + s + "'");
}

void EncoderConfig::validate() const {
    if (d < 1) throw DataError("encoder: d must be >= 1");
    if (n_max < 1) throw DataError("encoder: n_max must be >= 1");
    if (kind == EncoderKind::tiny_transformer) {
        if (layers < 1) throw DataError("encoder: layers must be >= 1");
        if (heads < 1 || d % heads != 0) {
            throw DataError("encoder: d (" + std::to_string(d) + ") must be divisible by heads (" +
                            std::to_string(heads) + ")");
        }
    }
}

EncoderParams init_encoder(const EncoderConfig& cfg, int vocab_size, Rng& rng) {
    cfg.validate();
    EncoderParams p;
    p.token_emb = xavier_uniform(vocab_size, cfg.d, rng);
    p.pos_emb = xavier_uniform(cfg.n_max, cfg.d, rng);
    if (cfg.kind == EncoderKind::tiny_transformer) {
        for (int l = 0; l < cfg.layers; ++l) {
            BlockParamsT<Tensor> b;
            b.query_w = xavier_uniform(cfg.d, cfg.d, rng);
            b.query_b = Tensor(1, cfg.d);
            b.key_w = xavier_uniform(cfg.d, cfg.d, rng);
            b.key_b = Tensor(1, cfg.d);
            b.value_w = xavier_uniform(cfg.d, cfg.d, rng);
            b.value_b = Tensor(1, cfg.d);
            b.attn_out_w = xavier_uniform(cfg.d, cfg.d, rng);
            b.attn_out_b = Tensor(1, cfg.d);
            b.ln_attn_gain = Tensor::full(1, cfg.d, 1.0);
            b.ln_attn_bias = Tensor(1, cfg.d);
            b.ffn_in_w = xavier_uniform(cfg.d, cfg.ffn_width(), rng);
            b.ffn_in_b = Tensor(1, cfg.ffn_width());
            b.ffn_out_w = xavier_uniform(cfg.ffn_width(), cfg.d, rng);
            b.ffn_out_b = Tensor(1, cfg.d);
            b.ln_ffn_gain = Tensor::full(1, cfg.d, 1.0);
            b.ln_ffn_bias = Tensor(1, cfg.d);
            p.blocks.push_back(std::move(b));
        }
    }
    return p;
}

EncoderVars bind(Tape& tape, const EncoderParams& params) {
    EncoderVars v;
    v.token_emb = tape.leaf(params.token_emb);
    v.pos_emb = tape.leaf(params.pos_emb);
    for (const auto& b : params.blocks) {
        BlockParamsT<Var> bv;
        bv.query_w = tape.leaf(b.query_w);
        bv.query_b = tape.leaf(b.query_b);
        bv.key_w = tape.leaf(b.key_w);
        bv.key_b = tape.leaf(b.key_b);
        bv.value_w = tape.leaf(b.value_w);
        bv.value_b = tape.leaf(b.value_b);
        bv.attn_out_w = tape.leaf(b.attn_out_w);
        bv.attn_out_b = tape.leaf(b.attn_out_b);
        bv.ln_attn_gain = tape.leaf(b.ln_attn_gain);
        bv.ln_attn_bias = tape.leaf(b.ln_attn_bias);
        bv.ffn_in_w = tape.leaf(b.ffn_in_w);
        bv.ffn_in_b = tape.leaf(b.ffn_in_b);
        bv.ffn_out_w = tape.leaf(b.ffn_out_w);
        bv.ffn_out_b = tape.leaf(b.ffn_out_b);
        bv.ln_ffn_gain = tape.leaf(b.ln_ffn_gain);
        bv.ln_ffn_bias = tape.leaf(b.ln_ffn_bias);
        v.blocks.push_back(std::move(bv));
    }
    return v;
}

Var self_attention_block(Var x, std::span<const std::uint8_t> mask, const BlockParamsT<Var>& p, int heads) {
    const int d = x.cols();
    const int dk = d / heads;

    Var q = add_rowvec(matmul(x, p.query_w), p.query_b);
    Var k = add_rowvec(matmul(x, p.key_w), p.key_b);
    Var v = add_rowvec(matmul(x, p.value_w), p.value_b);

    std::vector<Var> head_ctx;
    for (int h = 0; h < heads; ++h) {
        Var qh = slice_cols(q, h * dk, (h + 1) * dk);
        Var kh = slice_cols(k, h * dk, (h + 1) * dk);
        Var vh = slice_cols(v, h * dk, (h + 1) * dk);
        Var scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dk)));
        Var probs = softmax_masked(scores, mask);  // keys at padding get weight 0
        head_ctx.push_back(matmul(probs, vh));
    }
    Var ctx = heads == 1 ? head_ctx[0] : concat_cols(head_ctx);
    Var attn = add_rowvec(matmul(ctx, p.attn_out_w), p.attn_out_b);
    Var x1 = layer_norm(add(x, attn), p.ln_attn_gain, p.ln_attn_bias);

    // tanh feed-forward: smooth everywhere, so central differences stay clean
    Var ff = tanh(add_rowvec(matmul(x1, p.ffn_in_w), p.ffn_in_b));
    ff = add_rowvec(matmul(ff, p.ffn_out_w), p.ffn_out_b);
    return layer_norm(add(x1, ff), p.ln_ffn_gain, p.ln_ffn_bias);
}

EncoderOut encode(const EncoderConfig& cfg, const EncoderVars& vars, std::span<const int> ids,
                  std::span<const std::uint8_t> mask) {
    if (static_cast<int>(ids.size()) != cfg.n_max || static_cast<int>(mask.size()) != cfg.n_max) {
        throw std::invalid_argument("encode: row width " + std::to_string(ids.size()) + " != n_max " +
                                    std::to_string(cfg.n_max));
    }
    Var h = add(gather_rows(vars.token_emb, ids), vars.pos_emb);
    if (cfg.kind == EncoderKind::tiny_transformer) {
        for (const auto& block : vars.blocks) {
            h = self_attention_block(h, mask, block, cfg.heads);
        }
    }
    return EncoderOut{slice_rows(h, 0, 1), h};
}

int load_pretrained_embeddings(const std::string& path, const Vocab& vocab, Tensor& embeddings) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embeddings file '" + path + "'");
    long count = 0, dim = 0;
    {
        std::string header;
        if (!std::getline(in, header)) throw DataError("embeddings file '" + path + "' is empty");
        std::istringstream hs(header);
        if (!(hs >> count >> dim)) throw DataError("embeddings file '" + path + "': bad header '" + header + "'");
    }
    if (dim != embeddings.cols()) {
        throw DataError("embeddings file '" + path + "': dimension " + std::to_string(dim) +
                        " does not match model d=" + std::to_string(embeddings.cols()));
    }
    int loaded = 0;
    std::string line;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        std::vector<double> row(dim);
        for (long j = 0; j < dim; ++j) {
            if (!(ls >> row[j])) {
                throw DataError("embeddings file '" + path + "': line " + std::to_string(line_no) +
                                " has fewer than " + std::to_string(dim) + " values");
            }
        }
        const int id = vocab.id_of(token);
        if (id == Vocab::kUnk && token != vocab.token_of(Vocab::kUnk)) continue;  // not in vocab
        for (long j = 0; j < dim; ++j) embeddings.at(id, j) = row[j];
        ++loaded;
    }
    return loaded;
}

}  // namespace tandem
