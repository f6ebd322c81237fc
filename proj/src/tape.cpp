#include "tandem/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tandem {

namespace {

void require_same_tape(Var a, Var b, const char* what) {
    if (a.tape == nullptr || b.tape == nullptr || a.tape != b.tape) {
        throw std::invalid_argument(std::string(what) + ": operands must live on the same tape");
    }
}

}  // namespace

const Tensor& Var::value() const { return tape->value(id); }
const Tensor& Var::grad() const { return tape->grad(id); }

Var Tape::leaf(Tensor value) {
    nodes_.push_back(Node{std::move(value), Tensor(), {}, nullptr});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Tensor value, std::vector<int> inputs, BackFn back) {
    nodes_.push_back(Node{std::move(value), Tensor(), std::move(inputs), std::move(back)});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.empty() && n.value.size() > 0) n.grad = Tensor(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::ensure_grads() {
    for (Node& n : nodes_) {
        if (n.grad.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
    }
}

void Tape::zero_grads() {
    for (Node& n : nodes_) {
        if (!n.grad.empty()) n.grad.fill(0.0);
    }
}

void Tape::backward(Var loss) {
    if (loss.tape != this) throw std::invalid_argument("backward: loss lives on a different tape");
    const Tensor& lv = nodes_[loss.id].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw std::invalid_argument("backward: loss node must be scalar, got " + lv.shape_str());
    }
    ensure_grads();
    nodes_[loss.id].grad[0] += 1.0;
    for (int i = loss.id; i >= 0; --i) {
        if (nodes_[i].back) nodes_[i].back(*this, i);
    }
}

// --- ops ---------------------------------------------------------------------

Var matmul(Var a, Var b) {
    require_same_tape(a, b, "matmul");
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.cols() != B.rows()) {
        throw std::invalid_argument("matmul: shape mismatch " + A.shape_str() + " x " + B.shape_str());
    }
    const int n = A.rows(), k = A.cols(), m = B.cols();
    Tensor C(n, m);
    for (int i = 0; i < n; ++i) {
        for (int p = 0; p < k; ++p) {
            const double aip = A.at(i, p);
            if (aip == 0.0) continue;
            for (int j = 0; j < m; ++j) C.at(i, j) += aip * B.at(p, j);
        }
    }
    return a.tape->record(std::move(C), {a.id, b.id}, [](Tape& t, int self) {
        const int ia = t.inputs(self)[0], ib = t.inputs(self)[1];
        const Tensor& G = t.grad(self);
        const Tensor& A = t.value(ia);
        const Tensor& B = t.value(ib);
        Tensor& dA = t.grad(ia);
        Tensor& dB = t.grad(ib);
        const int n = A.rows(), k = A.cols(), m = B.cols();
        // dA += G * B^T ; dB += A^T * G
        for (int i = 0; i < n; ++i) {
            for (int p = 0; p < k; ++p) {
                double acc = 0.0;
                for (int j = 0; j < m; ++j) acc += G.at(i, j) * B.at(p, j);
                dA.at(i, p) += acc;
            }
        }
        for (int p = 0; p < k; ++p) {
            for (int i = 0; i < n; ++i) {
                const double aip = A.at(i, p);
                if (aip == 0.0) continue;
                for (int j = 0; j < m; ++j) dB.at(p, j) += aip * G.at(i, j);
            }
        }
    });
}

Var transpose(Var a) {
    const Tensor& A = a.value();
    Tensor T(A.cols(), A.rows());
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j) T.at(j, i) = A.at(i, j);
    return a.tape->record(std::move(T), {a.id}, [](Tape& t, int self) {
        const int ia = t.inputs(self)[0];
        const Tensor& G = t.grad(self);
        Tensor& dA = t.grad(ia);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j) dA.at(j, i) += G.at(i, j);
    });
}

Var add(Var a, Var b) {
    require_same_tape(a, b, "add");
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    require_same_shape(A, B, "add");
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C[i] += B[i];
    return a.tape->record(std::move(C), {a.id, b.id}, [](Tape& t, int self) {
        const Tensor& G = t.grad(self);
        t.grad(t.inputs(self)[0]).add_scaled(G, 1.0);
        t.grad(t.inputs(self)[1]).add_scaled(G, 1.0);
    });
}

Var mul(Var a, Var b) {
    require_same_tape(a, b, "mul");
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    require_same_shape(A, B, "mul");
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
    return a.tape->record(std::move(C), {a.id, b.id}, [](Tape& t, int self) {
        const int ia = t.inputs(self)[0], ib = t.inputs(self)[1];
        const Tensor& G = t.grad(self);
        const Tensor& A = t.value(ia);
        const Tensor& B = t.value(ib);
        Tensor& dA = t.grad(ia);
        Tensor& dB = t.grad(ib);
        for (std::size_t i = 0; i < G.size(); ++i) {
            dA[i] += G[i] * B[i];
            dB[i] += G[i] * A[i];
        }
    });
}

Var scale(Var a, double c) {
    Tensor C = a.value();
    for (std::size_t i = 0; i < C.size(); ++i) C[i] *= c;
    return a.tape->record(std::move(C), {a.id}, [c](Tape& t, int self) {
        t.grad(t.inputs(self)[0]).add_scaled(t.grad(self), c);
    });
}

Var add_rowvec(Var x, Var r) {
    require_same_tape(x, r, "add_rowvec");
    const Tensor& X = x.value();
    const Tensor& R = r.value();
    if (R.rows() != 1 || R.cols() != X.cols()) {
        throw std::invalid_argument("add_rowvec: shape mismatch " + X.shape_str() + " vs " + R.shape_str());
    }
    Tensor C = X;
    for (int i = 0; i < C.rows(); ++i)
        for (int j = 0; j < C.cols(); ++j) C.at(i, j) += R.at(0, j);
    return x.tape->record(std::move(C), {x.id, r.id}, [](Tape& t, int self) {
        const Tensor& G = t.grad(self);
        t.grad(t.inputs(self)[0]).add_scaled(G, 1.0);
        Tensor& dR = t.grad(t.inputs(self)[1]);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j) dR.at(0, j) += G.at(i, j);
    });
}

namespace {

template <class Fwd, class Bwd>
Var unary_elementwise(Var a, Fwd fwd, Bwd bwd) {
    Tensor C = a.value();
    for (std::size_t i = 0; i < C.size(); ++i) C[i] = fwd(C[i]);
    return a.tape->record(std::move(C), {a.id}, [bwd](Tape& t, int self) {
        const int ia = t.inputs(self)[0];
        const Tensor& G = t.grad(self);
        const Tensor& X = t.value(ia);
        const Tensor& Y = t.value(self);
        Tensor& dX = t.grad(ia);
        for (std::size_t i = 0; i < G.size(); ++i) dX[i] += G[i] * bwd(X[i], Y[i]);
    });
}

}  // namespace

double sigmoid_value(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Var tanh(Var a) {
    return unary_elementwise(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
    return unary_elementwise(
        a, [](double x) { return sigmoid_value(x); }, [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
    return unary_elementwise(
        a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sum(Var a) {
    double acc = 0.0;
    for (double v : a.value().data()) acc += v;
    return a.tape->record(Tensor::scalar(acc), {a.id}, [](Tape& t, int self) {
        const double g = t.grad(self)[0];
        Tensor& dA = t.grad(t.inputs(self)[0]);
        for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += g;
    });
}

std::vector<double> softmax_values(std::span<const double> logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> out(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        z += out[i];
    }
    for (double& v : out) v /= z;
    return out;
}

Var softmax_masked(Var a, std::span<const std::uint8_t> mask) {
    const Tensor& A = a.value();
    if (static_cast<int>(mask.size()) != A.cols()) {
        throw std::invalid_argument("softmax_masked: mask length " + std::to_string(mask.size()) +
                                    " != cols of " + A.shape_str());
    }
    bool any = false;
    for (std::uint8_t m : mask) any = any || (m != 0);
    if (!any) throw std::invalid_argument("softmax_masked: all positions masked out");

    std::vector<std::uint8_t> mk(mask.begin(), mask.end());
    Tensor Y(A.rows(), A.cols());
    for (int i = 0; i < A.rows(); ++i) {
        double mx = -1e300;
        for (int j = 0; j < A.cols(); ++j)
            if (mk[j]) mx = std::max(mx, A.at(i, j));
        double z = 0.0;
        for (int j = 0; j < A.cols(); ++j) {
            if (mk[j]) {
                Y.at(i, j) = std::exp(A.at(i, j) - mx);
                z += Y.at(i, j);
            }
        }
        for (int j = 0; j < A.cols(); ++j) Y.at(i, j) = mk[j] ? Y.at(i, j) / z : 0.0;
    }
    return a.tape->record(std::move(Y), {a.id}, [mk = std::move(mk)](Tape& t, int self) {
        const int ia = t.inputs(self)[0];
        const Tensor& G = t.grad(self);
        const Tensor& Y = t.value(self);
        Tensor& dA = t.grad(ia);
        for (int i = 0; i < G.rows(); ++i) {
            double dot = 0.0;
            for (int j = 0; j < G.cols(); ++j)
                if (mk[j]) dot += G.at(i, j) * Y.at(i, j);
            for (int j = 0; j < G.cols(); ++j)
                if (mk[j]) dA.at(i, j) += Y.at(i, j) * (G.at(i, j) - dot);
        }
    });
}

Var gather_rows(Var table, std::span<const int> ids) {
    const Tensor& T = table.value();
    std::vector<int> idv(ids.begin(), ids.end());
    for (int id : idv) {
        if (id < 0 || id >= T.rows()) {
            throw std::invalid_argument("gather_rows: id " + std::to_string(id) + " out of range for " + T.shape_str());
        }
    }
    Tensor Y(static_cast<int>(idv.size()), T.cols());
    for (int i = 0; i < Y.rows(); ++i)
        for (int j = 0; j < Y.cols(); ++j) Y.at(i, j) = T.at(idv[i], j);
    return table.tape->record(std::move(Y), {table.id}, [idv = std::move(idv)](Tape& t, int self) {
        const Tensor& G = t.grad(self);
        Tensor& dT = t.grad(t.inputs(self)[0]);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j) dT.at(idv[i], j) += G.at(i, j);
    });
}

Var slice_rows(Var a, int r0, int r1) {
    const Tensor& A = a.value();
    if (r0 < 0 || r1 > A.rows() || r0 >= r1) {
        throw std::invalid_argument("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) +
                                    ") invalid for " + A.shape_str());
    }
    Tensor Y(r1 - r0, A.cols());
    for (int i = 0; i < Y.rows(); ++i)
        for (int j = 0; j < Y.cols(); ++j) Y.at(i, j) = A.at(r0 + i, j);
    return a.tape->record(std::move(Y), {a.id}, [r0](Tape& t, int self) {
        const Tensor& G = t.grad(self);
        Tensor& dA = t.grad(t.inputs(self)[0]);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j) dA.at(r0 + i, j) += G.at(i, j);
    });
}

Var slice_cols(Var a, int c0, int c1) {
    const Tensor& A = a.value();
    if (c0 < 0 || c1 > A.cols() || c0 >= c1) {
        throw std::invalid_argument("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                                    ") invalid for " + A.shape_str());
    }
    Tensor Y(A.rows(), c1 - c0);
    for (int i = 0; i < Y.rows(); ++i)
        for (int j = 0; j < Y.cols(); ++j) Y.at(i, j) = A.at(i, c0 + j);
    return a.tape->record(std::move(Y), {a.id}, [c0](Tape& t, int self) {
        const Tensor& G = t.grad(self);
        Tensor& dA = t.grad(t.inputs(self)[0]);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j) dA.at(i, c0 + j) += G.at(i, j);
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
    const int rows = parts[0].value().rows();
    int cols = 0;
    std::vector<int> ids;
    std::vector<int> offsets;
    for (const Var& p : parts) {
        if (p.tape != parts[0].tape) throw std::invalid_argument("concat_cols: operands must live on the same tape");
        if (p.value().rows() != rows) {
            throw std::invalid_argument("concat_cols: row mismatch " + parts[0].value().shape_str() + " vs " +
                                        p.value().shape_str());
        }
        ids.push_back(p.id);
        offsets.push_back(cols);
        cols += p.value().cols();
    }
    Tensor Y(rows, cols);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& P = parts[k].value();
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < P.cols(); ++j) Y.at(i, offsets[k] + j) = P.at(i, j);
    }
    return parts[0].tape->record(std::move(Y), std::move(ids), [offsets = std::move(offsets)](Tape& t, int self) {
        const Tensor& G = t.grad(self);
        const auto ins = t.inputs(self);
        for (std::size_t k = 0; k < ins.size(); ++k) {
            Tensor& dP = t.grad(ins[k]);
            for (int i = 0; i < dP.rows(); ++i)
                for (int j = 0; j < dP.cols(); ++j) dP.at(i, j) += G.at(i, offsets[k] + j);
        }
    });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
    require_same_tape(x, gamma, "layer_norm");
    require_same_tape(x, beta, "layer_norm");
    const Tensor& X = x.value();
    const Tensor& Gm = gamma.value();
    const Tensor& Bt = beta.value();
    if (Gm.rows() != 1 || Gm.cols() != X.cols() || Bt.rows() != 1 || Bt.cols() != X.cols()) {
        throw std::invalid_argument("layer_norm: affine shapes " + Gm.shape_str() + "/" + Bt.shape_str() +
                                    " do not match " + X.shape_str());
    }
    const int n = X.cols();
    Tensor Y(X.rows(), n);
    Tensor Xhat(X.rows(), n);
    std::vector<double> inv_sigma(X.rows());
    for (int i = 0; i < X.rows(); ++i) {
        double mu = 0.0;
        for (int j = 0; j < n; ++j) mu += X.at(i, j);
        mu /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = X.at(i, j) - mu;
            var += d * d;
        }
        var /= n;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_sigma[i] = is;
        for (int j = 0; j < n; ++j) {
            Xhat.at(i, j) = (X.at(i, j) - mu) * is;
            Y.at(i, j) = Gm.at(0, j) * Xhat.at(i, j) + Bt.at(0, j);
        }
    }
    return x.tape->record(std::move(Y), {x.id, gamma.id, beta.id},
                          [Xhat = std::move(Xhat), inv_sigma = std::move(inv_sigma)](Tape& t, int self) {
                              const auto ins = t.inputs(self);
                              const Tensor& G = t.grad(self);
                              const Tensor& Gm = t.value(ins[1]);
                              Tensor& dX = t.grad(ins[0]);
                              Tensor& dGm = t.grad(ins[1]);
                              Tensor& dBt = t.grad(ins[2]);
                              const int n = G.cols();
                              for (int i = 0; i < G.rows(); ++i) {
                                  double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                                  for (int j = 0; j < n; ++j) {
                                      const double dxh = G.at(i, j) * Gm.at(0, j);
                                      mean_dxhat += dxh;
                                      mean_dxhat_xhat += dxh * Xhat.at(i, j);
                                      dGm.at(0, j) += G.at(i, j) * Xhat.at(i, j);
                                      dBt.at(0, j) += G.at(i, j);
                                  }
                                  mean_dxhat /= n;
                                  mean_dxhat_xhat /= n;
                                  for (int j = 0; j < n; ++j) {
                                      const double dxh = G.at(i, j) * Gm.at(0, j);
                                      dX.at(i, j) += inv_sigma[i] * (dxh - mean_dxhat - Xhat.at(i, j) * mean_dxhat_xhat);
                                  }
                              }
                          });
}

Var bce_with_logit(Var z, int y) {
    if (y != 0 && y != 1) throw std::invalid_argument("bce_with_logit: label must be 0 or 1");
    const double raw = z.value().item();
    const double zc = std::clamp(raw, -kLogitCap, kLogitCap);
    // log(1 + e^z) - y*z, evaluated as max(z,0) - y*z + log1p(e^{-|z|})
    const double loss = std::max(zc, 0.0) - zc * y + std::log1p(std::exp(-std::abs(zc)));
    const bool pass = std::abs(raw) < kLogitCap;
    return z.tape->record(Tensor::scalar(loss), {z.id}, [y, zc, pass](Tape& t, int self) {
        if (!pass) return;
        const double g = t.grad(self)[0];
        t.grad(t.inputs(self)[0])[0] += g * (sigmoid_value(zc) - y);
    });
}

Var ce_with_logits(Var z, int y) {
    const Tensor& Z = z.value();
    if (Z.rows() != 1) throw std::invalid_argument("ce_with_logits: expected a 1xK row, got " + Z.shape_str());
    if (y < 0 || y >= Z.cols()) {
        throw std::invalid_argument("ce_with_logits: label " + std::to_string(y) + " out of range for " + Z.shape_str());
    }
    const int k = Z.cols();
    std::vector<double> zc(k);
    std::vector<std::uint8_t> pass(k);
    for (int j = 0; j < k; ++j) {
        zc[j] = std::clamp(Z.at(0, j), -kLogitCap, kLogitCap);
        pass[j] = std::abs(Z.at(0, j)) < kLogitCap ? 1 : 0;
    }
    std::vector<double> p = softmax_values(zc);
    double mx = zc[0];
    for (double v : zc) mx = std::max(mx, v);
    double lse = 0.0;
    for (double v : zc) lse += std::exp(v - mx);
    const double loss = mx + std::log(lse) - zc[y];
    return z.tape->record(Tensor::scalar(loss), {z.id},
                          [y, p = std::move(p), pass = std::move(pass)](Tape& t, int self) {
                              const double g = t.grad(self)[0];
                              Tensor& dZ = t.grad(t.inputs(self)[0]);
                              for (int j = 0; j < dZ.cols(); ++j) {
                                  if (!pass[j]) continue;
                                  dZ.at(0, j) += g * (p[j] - (j == y ? 1.0 : 0.0));
                              }
                          });
}

}  // namespace tandem
