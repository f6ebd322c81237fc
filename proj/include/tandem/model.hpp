#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tandem/data.hpp"
#include "tandem/encoder.hpp"
#include "tandem/rng.hpp"
#include "tandem/tape.hpp"
#include "tandem/tensor.hpp"

namespace tandem {

/// The ablation ladder: single-task baselines, attention-only variants, and
/// the multi-task models up to the full attention + interaction pipeline.
enum class VariantKind {
    st_sent,
    st_sarc,
    st_att_sent,
    st_att_sarc,
    mtl,
    mtl_att,
    mtl_attinter,
};

const char* to_string(VariantKind v);
VariantKind variant_from_string(const std::string& s);  // throws DataError

bool has_sent_head(VariantKind v);
bool has_sarc_head(VariantKind v);
bool has_attention(VariantKind v);
bool has_interaction(VariantKind v);

/// Per-task attention: score_w scores each token representation, mix_w mixes
/// the scores across positions into attention logits.
template <class T>
struct TaskAttentionT {
    T score_w;  // d x 1
    T mix_w;    // n_max x n_max

    template <class Self, class F>
    static void visit_impl(Self& self, const std::string& prefix, F&& f) {
        f(prefix + ".score_w", self.score_w);
        f(prefix + ".mix_w", self.mix_w);
    }
    template <class F>
    void visit(const std::string& prefix, F&& f) { visit_impl(*this, prefix, f); }
    template <class F>
    void visit(const std::string& prefix, F&& f) const { visit_impl(*this, prefix, f); }
};

/// Sigmoid gate shared by both directions of the task interaction.
template <class T>
struct InteractionT {
    T gate_w;  // d x d
    T gate_b;  // d x 1

    template <class Self, class F>
    static void visit_impl(Self& self, const std::string& prefix, F&& f) {
        f(prefix + ".gate_w", self.gate_w);
        f(prefix + ".gate_b", self.gate_b);
    }
    template <class F>
    void visit(const std::string& prefix, F&& f) { visit_impl(*this, prefix, f); }
    template <class F>
    void visit(const std::string& prefix, F&& f) const { visit_impl(*this, prefix, f); }
};

/// One hidden layer + one output layer. Input width is d when the variant
/// feeds h_cls alone, 2d when it feeds [h_cls, v'].
template <class T>
struct ClassifierT {
    T hidden_w, hidden_b;
    T out_w, out_b;

    template <class Self, class F>
    static void visit_impl(Self& self, const std::string& prefix, F&& f) {
        f(prefix + ".hidden_w", self.hidden_w);
        f(prefix + ".hidden_b", self.hidden_b);
        f(prefix + ".out_w", self.out_w);
        f(prefix + ".out_b", self.out_b);
    }
    template <class F>
    void visit(const std::string& prefix, F&& f) { visit_impl(*this, prefix, f); }
    template <class F>
    void visit(const std::string& prefix, F&& f) const { visit_impl(*this, prefix, f); }
};

template <class T>
struct ModelParamsT {
    EncoderParamsT<T> encoder;
    std::optional<TaskAttentionT<T>> att_sarc, att_sent;
    std::optional<InteractionT<T>> interaction;
    std::optional<ClassifierT<T>> clf_sarc, clf_sent;

    template <class Self, class F>
    static void visit_impl(Self& self, F&& f) {
        self.encoder.visit(f);
        if (self.att_sarc) self.att_sarc->visit("att_sarc", f);
        if (self.att_sent) self.att_sent->visit("att_sent", f);
        if (self.interaction) self.interaction->visit("interaction", f);
        if (self.clf_sarc) self.clf_sarc->visit("clf_sarc", f);
        if (self.clf_sent) self.clf_sent->visit("clf_sent", f);
    }
    template <class F>
    void visit(F&& f) { visit_impl(*this, f); }
    template <class F>
    void visit(F&& f) const { visit_impl(*this, f); }
};

using ModelParams = ModelParamsT<Tensor>;
using ModelVars = ModelParamsT<Var>;

struct ModelConfig {
    VariantKind variant = VariantKind::mtl_attinter;
    EncoderConfig encoder;
    int vocab_size = 0;
    std::uint64_t seed = 0;

    int classifier_input_width() const { return has_attention(variant) ? 2 * encoder.d : encoder.d; }
    int classifier_hidden_width() const { return encoder.d; }
};

ModelParams init_model(const ModelConfig& cfg, Rng& rng);
ModelVars bind(Tape& tape, const ModelParams& params);

/// Flat named view over the parameter tensors, in canonical visit order.
struct ParamRefs {
    std::vector<std::string> names;
    std::vector<Tensor*> tensors;

    static ParamRefs of(ModelParams& params);
    std::vector<Tensor> clone_values() const;
    std::vector<Tensor> zeros_like() const;
};

/// Zero tensors shaped like every parameter, canonical order.
std::vector<Tensor> zeros_like_params(const ModelParams& params);
std::vector<std::string> param_names(const ModelParams& params);

std::vector<Var> collect_vars(ModelVars& vars);

// --- per-example graph -------------------------------------------------------

struct RowView {
    std::span<const int> ids;
    std::span<const std::uint8_t> mask;
    int y_sent = 0;
    int y_sarc = 0;
};

struct AttentionTraceVars {
    Var scores;  // n_max x 1, tanh token scores
    Var alpha;   // 1 x n_max, probability over unmasked positions
    Var pooled;  // 1 x d
};

struct ExampleNodes {
    std::optional<Var> sarc_logit;   // 1x1
    std::optional<Var> sent_logits;  // 1x3
    std::optional<Var> loss_bce, loss_ce;
    Var loss;  // sum of present components
    std::optional<AttentionTraceVars> trace_sarc, trace_sent;
};

/// C = tanh(H score_w); alpha = softmax_masked(C^T mix_w); v = alpha H.
std::pair<Var, AttentionTraceVars> task_attention(Var H, std::span<const std::uint8_t> mask,
                                                  const TaskAttentionT<Var>& p);

/// v'_sarc = v_sarc (.) sigmoid(gate_w v_sent^T + gate_b)^T and symmetrically
/// for v'_sent, with the same gate_w/gate_b in both directions.
std::pair<Var, Var> task_interaction(Var v_sarc, Var v_sent, const InteractionT<Var>& p);

/// logits = out(relu(hidden([h_cls, v_prime]))); v_prime may be absent.
Var classify(Var h_cls, std::optional<Var> v_prime, const ClassifierT<Var>& p);

struct JointLossNodes {
    Var total;
    std::optional<Var> bce, ce;
};

/// Unweighted sum of the present per-task losses for one example; callers
/// average over the batch.
JointLossNodes joint_loss(std::optional<Var> sarc_logit, int y_sarc, std::optional<Var> sent_logits, int y_sent);

ExampleNodes forward_example(const ModelConfig& cfg, const ModelVars& vars, const RowView& row);

// --- batch-level -------------------------------------------------------------

struct LossParts {
    double total = 0.0, bce = 0.0, ce = 0.0;
};

struct AttentionTrace {
    Tensor scores, alpha, pooled;
};

struct ExampleOutput {
    std::optional<double> sarc_prob;
    std::optional<std::array<double, 3>> sent_probs;
    LossParts loss;
    std::optional<AttentionTrace> trace_sarc, trace_sent;
};

/// Fixed reduction block: per-example results are always combined in blocks
/// of this many examples, so serial and OpenMP paths are bit-identical.
inline constexpr std::size_t kExampleBlock = 8;

std::vector<ExampleOutput> batch_outputs(const ModelConfig& cfg, const ModelParams& params, const Batch& batch,
                                         bool parallel, bool want_traces = false);

struct BatchGrad {
    LossParts loss;                  // batch means
    std::vector<Tensor> grads;       // d(mean loss)/d(param), canonical order
};

BatchGrad batch_grad(const ModelConfig& cfg, const ModelParams& params, const Batch& batch, bool parallel);

}  // namespace tandem
