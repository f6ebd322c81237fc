#include "tandem/model.hpp"

#include <cmath>
#include <stdexcept>

#include "tandem/parallel.hpp"

namespace tandem {

const char* to_string(VariantKind v) {
    switch (v) {
        case VariantKind::st_sent: return "st_sent";
        case VariantKind::st_sarc: return "st_sarc";
        case VariantKind::st_att_sent: return "st_att_sent";
        case VariantKind::st_att_sarc: return "st_att_sarc";
        case VariantKind::mtl: return "mtl";
        case VariantKind::mtl_att: return "mtl_att";
        case VariantKind::mtl_attinter: return "mtl_attinter";
    }
    return "?";
}

VariantKind variant_from_string(const std::string& s) {
    for (VariantKind v : {VariantKind::st_sent, VariantKind::st_sarc, VariantKind::st_att_sent,
                          VariantKind::st_att_sarc, VariantKind::mtl, VariantKind::mtl_att,
                          VariantKind::mtl_attinter}) {
        if (s == to_string(v)) return v;
    }
    throw DataError("unknown variant '" + s + "'");
}

bool has_sent_head(VariantKind v) { return v != VariantKind::st_sarc && v != VariantKind::st_att_sarc; }
bool has_sarc_head(VariantKind v) { return v != VariantKind::st_sent && v != VariantKind::st_att_sent; }
bool has_attention(VariantKind v) {
    return v == VariantKind::st_att_sent || v == VariantKind::st_att_sarc || v == VariantKind::mtl_att ||
           v == VariantKind::mtl_attinter;
}
bool has_interaction(VariantKind v) { return v == VariantKind::mtl_attinter; }

ModelParams init_model(const ModelConfig& cfg, Rng& rng) {
    cfg.encoder.validate();
    if (cfg.vocab_size < 3) throw DataError("init_model: vocab_size must cover the reserved ids");
    ModelParams p;
    p.encoder = init_encoder(cfg.encoder, cfg.vocab_size, rng);

    const int d = cfg.encoder.d;
    const int n = cfg.encoder.n_max;
    auto make_attention = [&] {
        TaskAttentionT<Tensor> a;
        a.score_w = xavier_uniform(d, 1, rng);
        a.mix_w = xavier_uniform(n, n, rng);
        return a;
    };
    auto make_classifier = [&](int k) {
        ClassifierT<Tensor> c;
        c.hidden_w = xavier_uniform(cfg.classifier_input_width(), cfg.classifier_hidden_width(), rng);
        c.hidden_b = Tensor(1, cfg.classifier_hidden_width());
        c.out_w = xavier_uniform(cfg.classifier_hidden_width(), k, rng);
        c.out_b = Tensor(1, k);
        return c;
    };

    if (has_attention(cfg.variant)) {
        if (has_sarc_head(cfg.variant)) p.att_sarc = make_attention();
        if (has_sent_head(cfg.variant)) p.att_sent = make_attention();
    }
    if (has_interaction(cfg.variant)) {
        InteractionT<Tensor> inter;
        inter.gate_w = xavier_uniform(d, d, rng);
        inter.gate_b = Tensor(d, 1);
        p.interaction = inter;
    }
    if (has_sarc_head(cfg.variant)) p.clf_sarc = make_classifier(1);
    if (has_sent_head(cfg.variant)) p.clf_sent = make_classifier(3);
    return p;
}

ModelVars bind(Tape& tape, const ModelParams& params) {
    ModelVars v;
    v.encoder = bind(tape, params.encoder);
    auto bind_att = [&](const TaskAttentionT<Tensor>& a) {
        return TaskAttentionT<Var>{tape.leaf(a.score_w), tape.leaf(a.mix_w)};
    };
    auto bind_clf = [&](const ClassifierT<Tensor>& c) {
        return ClassifierT<Var>{tape.leaf(c.hidden_w), tape.leaf(c.hidden_b), tape.leaf(c.out_w), tape.leaf(c.out_b)};
    };
    if (params.att_sarc) v.att_sarc = bind_att(*params.att_sarc);
    if (params.att_sent) v.att_sent = bind_att(*params.att_sent);
    if (params.interaction) {
        v.interaction = InteractionT<Var>{tape.leaf(params.interaction->gate_w), tape.leaf(params.interaction->gate_b)};
    }
    if (params.clf_sarc) v.clf_sarc = bind_clf(*params.clf_sarc);
    if (params.clf_sent) v.clf_sent = bind_clf(*params.clf_sent);
    return v;
}

ParamRefs ParamRefs::of(ModelParams& params) {
    ParamRefs refs;
    params.visit([&](const std::string& name, Tensor& t) {
        refs.names.push_back(name);
        refs.tensors.push_back(&t);
    });
    return refs;
}

std::vector<Tensor> ParamRefs::clone_values() const {
    std::vector<Tensor> out;
    out.reserve(tensors.size());
    for (const Tensor* t : tensors) out.push_back(*t);
    return out;
}

std::vector<Tensor> ParamRefs::zeros_like() const {
    std::vector<Tensor> out;
    out.reserve(tensors.size());
    for (const Tensor* t : tensors) out.emplace_back(t->rows(), t->cols());
    return out;
}

std::vector<Tensor> zeros_like_params(const ModelParams& params) {
    std::vector<Tensor> out;
    params.visit([&](const std::string&, const Tensor& t) { out.emplace_back(t.rows(), t.cols()); });
    return out;
}

std::vector<std::string> param_names(const ModelParams& params) {
    std::vector<std::string> out;
    params.visit([&](const std::string& name, const Tensor&) { out.push_back(name); });
    return out;
}

std::vector<Var> collect_vars(ModelVars& vars) {
    std::vector<Var> out;
    vars.visit([&](const std::string&, Var& v) { out.push_back(v); });
    return out;
}

std::pair<Var, AttentionTraceVars> task_attention(Var H, std::span<const std::uint8_t> mask,
                                                  const TaskAttentionT<Var>& p) {
    Var scores = tanh(matmul(H, p.score_w));  // n x 1
    // scores at padding are zeroed before the position mix; otherwise junk
    // rows of H would leak into unmasked attention logits
    Tensor mask_col(H.rows(), 1);
    for (int r = 0; r < H.rows(); ++r) mask_col.at(r, 0) = mask[r] ? 1.0 : 0.0;
    Var masked_scores = mul(scores, H.tape->leaf(mask_col));
    Var logits = matmul(transpose(masked_scores), p.mix_w);  // 1 x n
    Var alpha = softmax_masked(logits, mask);                // 1 x n
    Var pooled = matmul(alpha, H);                           // 1 x d
    return {pooled, AttentionTraceVars{scores, alpha, pooled}};
}

std::pair<Var, Var> task_interaction(Var v_sarc, Var v_sent, const InteractionT<Var>& p) {
    Var gate_for_sarc = sigmoid(add(matmul(p.gate_w, transpose(v_sent)), p.gate_b));  // d x 1
    Var gate_for_sent = sigmoid(add(matmul(p.gate_w, transpose(v_sarc)), p.gate_b));
    Var vp_sarc = mul(v_sarc, transpose(gate_for_sarc));
    Var vp_sent = mul(v_sent, transpose(gate_for_sent));
    return {vp_sarc, vp_sent};
}

Var classify(Var h_cls, std::optional<Var> v_prime, const ClassifierT<Var>& p) {
    Var input = h_cls;
    if (v_prime) {
        const Var parts[] = {h_cls, *v_prime};
        input = concat_cols(parts);
    }
    Var hidden = relu(add(matmul(input, p.hidden_w), p.hidden_b));
    return add(matmul(hidden, p.out_w), p.out_b);
}

JointLossNodes joint_loss(std::optional<Var> sarc_logit, int y_sarc, std::optional<Var> sent_logits, int y_sent) {
    JointLossNodes out;
    if (sarc_logit) out.bce = bce_with_logit(*sarc_logit, y_sarc);
    if (sent_logits) out.ce = ce_with_logits(*sent_logits, y_sent);
    if (out.bce && out.ce) {
        out.total = add(*out.bce, *out.ce);
    } else if (out.bce) {
        out.total = *out.bce;
    } else if (out.ce) {
        out.total = *out.ce;
    } else {
        throw std::invalid_argument("joint_loss: no task head present");
    }
    return out;
}

ExampleNodes forward_example(const ModelConfig& cfg, const ModelVars& vars, const RowView& row) {
    ExampleNodes out;
    const VariantKind variant = cfg.variant;
    EncoderOut enc = encode(cfg.encoder, vars.encoder, row.ids, row.mask);

    std::optional<Var> v_sarc, v_sent;
    if (has_attention(variant)) {
        if (vars.att_sarc) {
            auto [v, trace] = task_attention(enc.H, row.mask, *vars.att_sarc);
            v_sarc = v;
            out.trace_sarc = trace;
        }
        if (vars.att_sent) {
            auto [v, trace] = task_attention(enc.H, row.mask, *vars.att_sent);
            v_sent = v;
            out.trace_sent = trace;
        }
        if (has_interaction(variant)) {
            auto [vp_sarc, vp_sent] = task_interaction(*v_sarc, *v_sent, *vars.interaction);
            v_sarc = vp_sarc;
            v_sent = vp_sent;
        }
    }

    if (vars.clf_sarc) out.sarc_logit = classify(enc.h_cls, v_sarc, *vars.clf_sarc);
    if (vars.clf_sent) out.sent_logits = classify(enc.h_cls, v_sent, *vars.clf_sent);

    JointLossNodes loss = joint_loss(out.sarc_logit, row.y_sarc, out.sent_logits, row.y_sent);
    out.loss_bce = loss.bce;
    out.loss_ce = loss.ce;
    out.loss = loss.total;
    return out;
}

namespace {

RowView row_view(const Batch& batch, int i) {
    return RowView{batch.ids_row(i), batch.mask_row(i), batch.y_sent[i], batch.y_sarc[i]};
}

}  // namespace

std::vector<ExampleOutput> batch_outputs(const ModelConfig& cfg, const ModelParams& params, const Batch& batch,
                                         bool parallel, bool want_traces) {
    std::vector<ExampleOutput> outputs(batch.batch_size);
    par::for_blocks(batch.batch_size, kExampleBlock, parallel, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) {
            Tape tape;
            ModelVars vars = bind(tape, params);
            ExampleNodes nodes = forward_example(cfg, vars, row_view(batch, static_cast<int>(i)));
            ExampleOutput& o = outputs[i];
            if (nodes.sarc_logit) o.sarc_prob = sigmoid_value(nodes.sarc_logit->value().item());
            if (nodes.sent_logits) {
                const auto p = softmax_values(nodes.sent_logits->value().data());
                o.sent_probs = {p[0], p[1], p[2]};
            }
            o.loss.total = nodes.loss.value().item();
            o.loss.bce = nodes.loss_bce ? nodes.loss_bce->value().item() : 0.0;
            o.loss.ce = nodes.loss_ce ? nodes.loss_ce->value().item() : 0.0;
            if (want_traces) {
                if (nodes.trace_sarc) {
                    o.trace_sarc = AttentionTrace{nodes.trace_sarc->scores.value(), nodes.trace_sarc->alpha.value(),
                                                  nodes.trace_sarc->pooled.value()};
                }
                if (nodes.trace_sent) {
                    o.trace_sent = AttentionTrace{nodes.trace_sent->scores.value(), nodes.trace_sent->alpha.value(),
                                                  nodes.trace_sent->pooled.value()};
                }
            }
        }
    });
    return outputs;
}

BatchGrad batch_grad(const ModelConfig& cfg, const ModelParams& params, const Batch& batch, bool parallel) {
    const std::size_t n = batch.batch_size;
    const std::size_t n_blocks = (n + kExampleBlock - 1) / kExampleBlock;
    std::vector<std::vector<Tensor>> block_grads(n_blocks);
    std::vector<LossParts> block_loss(n_blocks);

    par::for_blocks(n, kExampleBlock, parallel, [&](std::size_t begin, std::size_t end, std::size_t bi) {
        std::vector<Tensor> acc = zeros_like_params(params);
        LossParts loss;
        for (std::size_t i = begin; i < end; ++i) {
            Tape tape;
            ModelVars vars = bind(tape, params);
            const std::vector<Var> leaves = collect_vars(vars);
            ExampleNodes nodes = forward_example(cfg, vars, row_view(batch, static_cast<int>(i)));
            tape.backward(nodes.loss);
            for (std::size_t k = 0; k < leaves.size(); ++k) acc[k].add_scaled(leaves[k].grad(), 1.0);
            loss.total += nodes.loss.value().item();
            if (nodes.loss_bce) loss.bce += nodes.loss_bce->value().item();
            if (nodes.loss_ce) loss.ce += nodes.loss_ce->value().item();
        }
        block_grads[bi] = std::move(acc);
        block_loss[bi] = loss;
    });

    BatchGrad out;
    out.grads = zeros_like_params(params);
    for (std::size_t bi = 0; bi < n_blocks; ++bi) {
        for (std::size_t k = 0; k < out.grads.size(); ++k) out.grads[k].add_scaled(block_grads[bi][k], 1.0);
        out.loss.total += block_loss[bi].total;
        out.loss.bce += block_loss[bi].bce;
        out.loss.ce += block_loss[bi].ce;
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (Tensor& g : out.grads) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= inv;
    }
    out.loss.total *= inv;
    out.loss.bce *= inv;
    out.loss.ce *= inv;
    return out;
}

}  // namespace tandem
