#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tandem/tensor.hpp"

namespace tandem {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Tensor& value() const;
    const Tensor& grad() const;
    int rows() const { return value().rows(); }
    int cols() const { return value().cols(); }
};

/// Reverse-mode tape over Tensor-valued primitives. Nodes are recorded in
/// evaluation order, so every node's inputs precede it and a single reverse
/// sweep visits each op exactly once. A forward-complete tape is immutable
/// apart from its gradient buffers; do not share one tape across threads.
class Tape {
public:
    using BackFn = std::function<void(Tape&, int self)>;

    Var leaf(Tensor value);
    Var record(Tensor value, std::vector<int> inputs, BackFn back);

    /// Seeds d(loss)/d(loss) = 1 and accumulates gradients for every node.
    /// Gradients from earlier backward calls are kept (callers use
    /// zero_grads() between passes), which makes linear combinations of
    /// losses checkable. Throws std::invalid_argument if loss is not 1x1.
    void backward(Var loss);

    void zero_grads();

    const Tensor& value(int id) const { return nodes_[id].value; }
    Tensor& grad(int id);
    const Tensor& grad(int id) const { return nodes_[id].grad; }
    std::span<const int> inputs(int id) const { return nodes_[id].inputs; }
    int size() const { return static_cast<int>(nodes_.size()); }

private:
    struct Node {
        Tensor value;
        Tensor grad;  // allocated lazily by backward()
        std::vector<int> inputs;
        BackFn back;  // null for leaves
    };
    std::vector<Node> nodes_;

    void ensure_grads();
};

// --- primitive ops ----------------------------------------------------------
// Each op validates shapes, computes the forward value, and records a
// backward closure. Shape errors throw std::invalid_argument naming both
// shapes.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);        // same shape
Var mul(Var a, Var b);        // Hadamard, same shape
Var scale(Var a, double c);
Var add_rowvec(Var x, Var r); // broadcast 1xC row over all rows of x
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var sum(Var a);               // -> 1x1

/// Row-wise masked softmax. mask.size() == cols; masked columns get
/// probability exactly 0, the rest normalize to 1 (max-subtracted).
/// Throws std::invalid_argument if no column is unmasked.
Var softmax_masked(Var a, std::span<const std::uint8_t> mask);

/// Gathers rows of `table` by id; gradient scatter-adds into the table.
Var gather_rows(Var table, std::span<const int> ids);

Var slice_rows(Var a, int r0, int r1);  // rows [r0, r1)
Var slice_cols(Var a, int c0, int c1);  // cols [c0, c1)
Var concat_cols(std::span<const Var> parts);

/// Row-wise layer normalization with affine (gamma, beta are 1xC).
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

/// Binary cross-entropy from a single logit (1x1), label y in {0,1}.
/// The logit is clamped to [-20, 20] before the loss.
Var bce_with_logit(Var z, int y);

/// Cross-entropy from a 1xK logit row, label y in [0, K). Log-sum-exp form;
/// logits clamped to [-20, 20].
Var ce_with_logits(Var z, int y);

/// Clamp applied inside the losses; exposed for tests.
inline constexpr double kLogitCap = 20.0;

double sigmoid_value(double x);
std::vector<double> softmax_values(std::span<const double> logits);

}  // namespace tandem
