#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hetlfd/error.hpp"
#include "hetlfd/tensor.hpp"

namespace hetlfd {

enum class Activation { Tanh, Relu, Sigmoid };

/// Gradients keyed by parameter name, shaped like the parameters themselves.
using GradMap = std::map<std::string, Tensor>;

// --- forward kernels ---------------------------------------------------------
//
// The taped and untaped execution paths both call exactly these kernels, in the
// same order, so recording never perturbs forward numerics.

namespace ops {

inline Tensor affine(const Tensor& W, const Tensor& b, const Tensor& x) {
    if (W.rank() != 2)
        throw DimensionError("affine: W must be a matrix, got " + W.shape_str());
    const std::size_t m = W.rows();
    const std::size_t n = W.cols();
    if (x.rank() != 1 || x.numel() != n)
        throw DimensionError("affine: x has shape " + x.shape_str() + " but W is " +
                             W.shape_str());
    if (b.rank() != 1 || b.numel() != m)
        throw DimensionError("affine: b has shape " + b.shape_str() + " but W is " +
                             W.shape_str());
    Tensor out({m});
    const double* w = W.data();
    for (std::size_t i = 0; i < m; ++i) {
        double acc = b[i];
        const double* row = w + i * n;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
    return out;
}

inline Tensor activation(Activation kind, const Tensor& x) {
    Tensor out(x.shape());
    switch (kind) {
        case Activation::Tanh:
            for (std::size_t i = 0; i < x.numel(); ++i) out[i] = std::tanh(x[i]);
            break;
        case Activation::Relu:
            for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < x.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
            break;
    }
    return out;
}

inline Tensor concat(const Tensor& a, const Tensor& b) {
    if (a.rank() != 1 || b.rank() != 1)
        throw DimensionError("concat: expects vectors, got " + a.shape_str() + " and " +
                             b.shape_str());
    Tensor out({a.numel() + b.numel()});
    for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i];
    for (std::size_t i = 0; i < b.numel(); ++i) out[a.numel() + i] = b[i];
    return out;
}

inline Tensor slice(const Tensor& x, std::size_t lo, std::size_t hi) {
    if (x.rank() != 1)
        throw DimensionError("slice: expects a vector, got " + x.shape_str());
    if (lo >= hi || hi > x.numel())
        throw ContractError("slice: invalid range [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + ") for length " + std::to_string(x.numel()));
    Tensor out({hi - lo});
    for (std::size_t i = lo; i < hi; ++i) out[i - lo] = x[i];
    return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw DimensionError("add: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw DimensionError("mul: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
    return out;
}

inline Tensor scale(const Tensor& x, double s) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] * s;
    return out;
}

struct SoftmaxCe {
    double loss = 0.0;
    Tensor probs;
};

/// Stabilized softmax + negative log-likelihood; probs returned for backward.
inline SoftmaxCe softmax_ce(const Tensor& logits, int label) {
    if (logits.rank() != 1)
        throw DimensionError("softmax_cross_entropy: logits must be a vector, got " +
                             logits.shape_str());
    const std::size_t k = logits.numel();
    if (label < 0 || static_cast<std::size_t>(label) >= k)
        throw IndexError("softmax_cross_entropy: label " + std::to_string(label) +
                         " out of range [0, " + std::to_string(k) + ")");
    double max_logit = logits[0];
    for (std::size_t i = 1; i < k; ++i) max_logit = std::max(max_logit, logits[i]);
    double sum = 0.0;
    Tensor probs({k});
    for (std::size_t i = 0; i < k; ++i) {
        probs[i] = std::exp(logits[i] - max_logit);
        sum += probs[i];
    }
    for (std::size_t i = 0; i < k; ++i) probs[i] /= sum;
    SoftmaxCe out;
    out.loss = std::log(sum) + max_logit - logits[static_cast<std::size_t>(label)];
    out.probs = std::move(probs);
    return out;
}

}  // namespace ops

/// Cross-entropy loss and its logits gradient (softmax(logits) - onehot(label)).
struct CrossEntropyResult {
    double loss;
    Tensor grad_logits;
};

inline CrossEntropyResult softmax_cross_entropy(const Tensor& logits, int label) {
    auto ce = ops::softmax_ce(logits, label);
    Tensor grad = std::move(ce.probs);
    grad[static_cast<std::size_t>(label)] -= 1.0;
    return {ce.loss, std::move(grad)};
}

/// Handle to a node on a GradTape.
struct Value {
    std::uint32_t id = 0;
};

/**
 * Record-and-replay reverse-mode tape.
 *
 * Supports exactly the primitives the model zoo needs. Construction order is
 * topological; the backward pass walks every recorded op once, in reverse
 * recording order. A non-recording tape evaluates the same kernels but keeps
 * no backward state, for inference paths.
 */
class GradTape {
public:
    explicit GradTape(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }

    /// Leaf with no gradient tracking.
    Value constant(Tensor t) {
        Node n;
        n.kind = Op::Leaf;
        n.out = std::move(t);
        n.requires_grad = false;
        return push(std::move(n));
    }

    /// Named leaf whose gradient `gradients()` reports.
    Value param(const std::string& name, const Tensor& t) {
        if (param_ids_.count(name))
            throw ContractError("GradTape: duplicate parameter '" + name + "'");
        Node n;
        n.kind = Op::Leaf;
        n.out = t;
        n.requires_grad = true;
        n.name = name;
        Value v = push(std::move(n));
        param_ids_.emplace(name, v.id);
        return v;
    }

    Value affine(Value W, Value b, Value x) {
        Node n;
        n.kind = Op::Affine;
        n.a = W.id;
        n.b = b.id;
        n.c = x.id;
        n.out = ops::affine(val(W.id), val(b.id), val(x.id));
        n.requires_grad = req(W.id) || req(b.id) || req(x.id);
        return push(std::move(n));
    }

    Value activation(Activation kind, Value x) {
        Node n;
        n.kind = Op::Act;
        n.act = kind;
        n.a = x.id;
        n.out = ops::activation(kind, val(x.id));
        n.requires_grad = req(x.id);
        return push(std::move(n));
    }

    Value concat(Value a, Value b) {
        Node n;
        n.kind = Op::Concat;
        n.a = a.id;
        n.b = b.id;
        n.out = ops::concat(val(a.id), val(b.id));
        n.requires_grad = req(a.id) || req(b.id);
        return push(std::move(n));
    }

    Value slice(Value x, std::size_t lo, std::size_t hi) {
        Node n;
        n.kind = Op::Slice;
        n.a = x.id;
        n.lo = lo;
        n.hi = hi;
        n.out = ops::slice(val(x.id), lo, hi);
        n.requires_grad = req(x.id);
        return push(std::move(n));
    }

    Value add(Value a, Value b) {
        Node n;
        n.kind = Op::Add;
        n.a = a.id;
        n.b = b.id;
        n.out = ops::add(val(a.id), val(b.id));
        n.requires_grad = req(a.id) || req(b.id);
        return push(std::move(n));
    }

    Value mul(Value a, Value b) {
        Node n;
        n.kind = Op::Mul;
        n.a = a.id;
        n.b = b.id;
        n.out = ops::mul(val(a.id), val(b.id));
        n.requires_grad = req(a.id) || req(b.id);
        return push(std::move(n));
    }

    Value scale(Value x, double s) {
        if (!std::isfinite(s)) throw NumericError("scale: non-finite factor");
        Node n;
        n.kind = Op::Scale;
        n.a = x.id;
        n.scalar = s;
        n.out = ops::scale(val(x.id), s);
        n.requires_grad = req(x.id);
        return push(std::move(n));
    }

    /// Scalar cross-entropy node; softmax probabilities saved for backward.
    Value softmax_cross_entropy(Value logits, int label) {
        auto ce = ops::softmax_ce(val(logits.id), label);
        Node n;
        n.kind = Op::SoftmaxCe;
        n.a = logits.id;
        n.label = label;
        n.out = Tensor::scalar(ce.loss);
        n.requires_grad = req(logits.id);
        if (recording_) n.saved = std::move(ce.probs);
        return push(std::move(n));
    }

    /// Mean of scalar nodes as a left fold of add, then one scale.
    Value mean(std::span<const Value> scalars) {
        if (scalars.empty()) throw ContractError("mean: empty input");
        Value acc = scalars[0];
        for (std::size_t i = 1; i < scalars.size(); ++i) acc = add(acc, scalars[i]);
        return scale(acc, 1.0 / static_cast<double>(scalars.size()));
    }

    const Tensor& value(Value v) const { return val(v.id); }

    std::size_t size() const { return nodes_.size(); }

    /**
     * Reverse-mode gradients of a scalar loss node with respect to every
     * registered parameter. Parameters the loss does not depend on get zero
     * gradients of the right shape.
     */
    GradMap gradients(Value loss) const {
        if (!recording_)
            throw ContractError("GradTape: gradients() requires a recording tape");
        if (loss.id >= nodes_.size()) throw ContractError("GradTape: unknown loss node");
        if (val(loss.id).numel() != 1)
            throw ContractError("GradTape: loss node must be scalar, got shape " +
                                val(loss.id).shape_str());

        std::vector<std::vector<double>> adj(nodes_.size());
        adj[loss.id].assign(1, 1.0);

        for (std::size_t idx = nodes_.size(); idx-- > 0;) {
            const Node& n = nodes_[idx];
            if (!n.requires_grad || adj[idx].empty()) continue;
            const std::vector<double>& gy = adj[idx];
            switch (n.kind) {
                case Op::Leaf:
                    break;
                case Op::Affine: {
                    const Tensor& W = val(n.a);
                    const Tensor& x = val(n.c);
                    const std::size_t m = W.rows();
                    const std::size_t nn = W.cols();
                    if (req(n.a)) {
                        auto& gw = grab(adj, n.a, m * nn);
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < nn; ++j) gw[i * nn + j] += gy[i] * x[j];
                    }
                    if (req(n.b)) {
                        auto& gb = grab(adj, n.b, m);
                        for (std::size_t i = 0; i < m; ++i) gb[i] += gy[i];
                    }
                    if (req(n.c)) {
                        auto& gx = grab(adj, n.c, nn);
                        for (std::size_t i = 0; i < m; ++i) {
                            const double* row = W.data() + i * nn;
                            for (std::size_t j = 0; j < nn; ++j) gx[j] += row[j] * gy[i];
                        }
                    }
                    break;
                }
                case Op::Act: {
                    if (!req(n.a)) break;
                    const Tensor& x = val(n.a);
                    const Tensor& y = n.out;
                    auto& gx = grab(adj, n.a, x.numel());
                    switch (n.act) {
                        case Activation::Tanh:
                            for (std::size_t i = 0; i < x.numel(); ++i)
                                gx[i] += gy[i] * (1.0 - y[i] * y[i]);
                            break;
                        case Activation::Relu:
                            for (std::size_t i = 0; i < x.numel(); ++i)
                                gx[i] += x[i] > 0.0 ? gy[i] : 0.0;
                            break;
                        case Activation::Sigmoid:
                            for (std::size_t i = 0; i < x.numel(); ++i)
                                gx[i] += gy[i] * y[i] * (1.0 - y[i]);
                            break;
                    }
                    break;
                }
                case Op::Concat: {
                    const std::size_t na = val(n.a).numel();
                    const std::size_t nb = val(n.b).numel();
                    if (req(n.a)) {
                        auto& ga = grab(adj, n.a, na);
                        for (std::size_t i = 0; i < na; ++i) ga[i] += gy[i];
                    }
                    if (req(n.b)) {
                        auto& gb = grab(adj, n.b, nb);
                        for (std::size_t i = 0; i < nb; ++i) gb[i] += gy[na + i];
                    }
                    break;
                }
                case Op::Slice: {
                    if (!req(n.a)) break;
                    auto& gx = grab(adj, n.a, val(n.a).numel());
                    for (std::size_t i = n.lo; i < n.hi; ++i) gx[i] += gy[i - n.lo];
                    break;
                }
                case Op::Add: {
                    if (req(n.a)) {
                        auto& ga = grab(adj, n.a, gy.size());
                        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
                    }
                    if (req(n.b)) {
                        auto& gb = grab(adj, n.b, gy.size());
                        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
                    }
                    break;
                }
                case Op::Mul: {
                    const Tensor& a = val(n.a);
                    const Tensor& b = val(n.b);
                    if (req(n.a)) {
                        auto& ga = grab(adj, n.a, a.numel());
                        for (std::size_t i = 0; i < a.numel(); ++i) ga[i] += gy[i] * b[i];
                    }
                    if (req(n.b)) {
                        auto& gb = grab(adj, n.b, b.numel());
                        for (std::size_t i = 0; i < b.numel(); ++i) gb[i] += gy[i] * a[i];
                    }
                    break;
                }
                case Op::Scale: {
                    if (!req(n.a)) break;
                    auto& gx = grab(adj, n.a, gy.size());
                    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * n.scalar;
                    break;
                }
                case Op::SoftmaxCe: {
                    if (!req(n.a)) break;
                    const Tensor& probs = n.saved;
                    auto& gl = grab(adj, n.a, probs.numel());
                    const double g = gy[0];
                    for (std::size_t i = 0; i < probs.numel(); ++i) gl[i] += g * probs[i];
                    gl[static_cast<std::size_t>(n.label)] -= g;
                    break;
                }
            }
        }

        GradMap out;
        for (const auto& [name, id] : param_ids_) {
            const Tensor& p = val(id);
            if (adj[id].empty()) {
                out.emplace(name, Tensor::zeros(p.shape()));
            } else {
                out.emplace(name, Tensor(p.shape(), std::move(adj[id])));
            }
        }
        return out;
    }

private:
    enum class Op { Leaf, Affine, Act, Concat, Slice, Add, Mul, Scale, SoftmaxCe };

    struct Node {
        Op kind = Op::Leaf;
        std::uint32_t a = 0, b = 0, c = 0;
        Tensor out;
        bool requires_grad = false;
        Activation act = Activation::Tanh;
        int label = 0;
        std::size_t lo = 0, hi = 0;
        double scalar = 0.0;
        Tensor saved;
        std::string name;
    };

    Value push(Node n) {
        nodes_.push_back(std::move(n));
        return Value{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    const Tensor& val(std::uint32_t id) const {
        if (id >= nodes_.size()) throw ContractError("GradTape: dangling value handle");
        return nodes_[id].out;
    }

    bool req(std::uint32_t id) const { return nodes_[id].requires_grad; }

    static std::vector<double>& grab(std::vector<std::vector<double>>& adj, std::uint32_t id,
                                     std::size_t n) {
        if (adj[id].empty()) adj[id].assign(n, 0.0);
        return adj[id];
    }

    bool recording_;
    std::vector<Node> nodes_;
    std::map<std::string, std::uint32_t> param_ids_;
};

/// Reverse-mode gradients of `loss` for every parameter registered on `tape`.
inline GradMap backward(const GradTape& tape, Value loss) { return tape.gradients(loss); }

}  // namespace hetlfd
