#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetlfd/error.hpp"
#include "hetlfd/rng.hpp"
#include "hetlfd/tape.hpp"
#include "hetlfd/tensor.hpp"

namespace hetlfd {

enum class Family { Ffn, ClusteredFfn, Bnn, Lstm, Blstm };

inline std::string to_string(Family f) {
    switch (f) {
        case Family::Ffn: return "ffn";
        case Family::ClusteredFfn: return "clustered_ffn";
        case Family::Bnn: return "bnn";
        case Family::Lstm: return "lstm";
        case Family::Blstm: return "blstm";
    }
    return "?";
}

inline Family family_from_string(const std::string& s) {
    if (s == "ffn") return Family::Ffn;
    if (s == "clustered_ffn") return Family::ClusteredFfn;
    if (s == "bnn") return Family::Bnn;
    if (s == "lstm") return Family::Lstm;
    if (s == "blstm") return Family::Blstm;
    throw ConfigError("unknown model family '" + s + "'");
}

inline bool is_embedding_family(Family f) { return f == Family::Bnn || f == Family::Blstm; }
inline bool is_recurrent_family(Family f) { return f == Family::Lstm || f == Family::Blstm; }

/**
 * Architecture description. For recurrent families hidden_widths holds the
 * single LSTM state width; for feedforward families it lists the hidden layer
 * widths in order. embedding_length is zero exactly for the non-embedding
 * families; cluster_count is meaningful only for clustered_ffn.
 */
struct ModelSpec {
    Family family = Family::Ffn;
    int state_dim = 0;
    int action_count = 0;
    std::vector<int> hidden_widths;
    int embedding_length = 0;
    int cluster_count = 0;

    void validate() const {
        if (state_dim <= 0) throw ConfigError("ModelSpec: state_dim must be positive");
        if (action_count <= 0) throw ConfigError("ModelSpec: action_count must be positive");
        if (hidden_widths.empty()) throw ConfigError("ModelSpec: hidden_widths must be nonempty");
        for (int w : hidden_widths)
            if (w <= 0) throw ConfigError("ModelSpec: hidden widths must be positive");
        if (is_recurrent_family(family) && hidden_widths.size() != 1)
            throw ConfigError("ModelSpec: recurrent families take exactly one hidden width");
        if (is_embedding_family(family)) {
            if (embedding_length < 1)
                throw ConfigError("ModelSpec: embedding_length must be >= 1 for " +
                                  to_string(family));
        } else if (embedding_length != 0) {
            throw ConfigError("ModelSpec: embedding_length must be 0 for " + to_string(family));
        }
        if (family == Family::ClusteredFfn) {
            if (cluster_count < 1)
                throw ConfigError("ModelSpec: cluster_count must be >= 1 for clustered_ffn");
        } else if (cluster_count != 0) {
            throw ConfigError("ModelSpec: cluster_count must be 0 for " + to_string(family));
        }
    }
};

inline nlohmann::json spec_to_json(const ModelSpec& s) {
    return {{"family", to_string(s.family)},
            {"state_dim", s.state_dim},
            {"action_count", s.action_count},
            {"hidden_widths", s.hidden_widths},
            {"embedding_length", s.embedding_length},
            {"cluster_count", s.cluster_count}};
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
    ModelSpec s;
    s.family = family_from_string(j.at("family").get<std::string>());
    s.state_dim = j.at("state_dim").get<int>();
    s.action_count = j.at("action_count").get<int>();
    s.hidden_widths = j.at("hidden_widths").get<std::vector<int>>();
    s.embedding_length = j.at("embedding_length").get<int>();
    s.cluster_count = j.at("cluster_count").get<int>();
    s.validate();
    return s;
}

/// Per-demonstrator latent style vector.
struct EmbeddingVector {
    std::string demonstrator_id;
    Tensor values;  // length L, finite
};

/// LSTM hidden/cell pair.
struct LstmState {
    Tensor h;
    Tensor c;

    static LstmState zeros(std::size_t width) {
        return {Tensor::zeros({width}), Tensor::zeros({width})};
    }
};

namespace detail {

inline Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(rows + cols));  // fan_out + fan_in
    Tensor t({rows, cols});
    for (std::size_t i = 0; i < t.numel(); ++i)
        t[i] = uniform_double(rng, -bound, bound);
    return t;
}

}  // namespace detail

/**
 * Deterministic parameter initialization: Xavier-uniform weights, zero biases,
 * LSTM forget-gate bias set to 1. Layout by family:
 *   ffn/clustered_ffn/bnn : base.W1,base.b1, ..., base.Wout,base.bout
 *   bnn additionally      : head.W (K x (H_last+L)), head.b
 *   lstm/blstm            : lstm.{Wi,Wf,Wg,Wo} (H x (D[+L]+H)), matching biases,
 *                           out.W (K x H), out.b
 */
inline ParamSet init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng = make_rng(derive_seed(seed, 0xA11CE));
    ParamSet params;

    const std::size_t d = static_cast<std::size_t>(spec.state_dim);
    const std::size_t k = static_cast<std::size_t>(spec.action_count);
    const std::size_t l = static_cast<std::size_t>(spec.embedding_length);

    if (!is_recurrent_family(spec.family)) {
        std::size_t in = d;
        for (std::size_t layer = 0; layer < spec.hidden_widths.size(); ++layer) {
            const std::size_t out = static_cast<std::size_t>(spec.hidden_widths[layer]);
            const std::string idx = std::to_string(layer + 1);
            params.set("base.W" + idx, detail::xavier_uniform(out, in, rng));
            params.set("base.b" + idx, Tensor::zeros({out}));
            in = out;
        }
        params.set("base.Wout", detail::xavier_uniform(k, in, rng));
        params.set("base.bout", Tensor::zeros({k}));
        if (spec.family == Family::Bnn) {
            params.set("head.W", detail::xavier_uniform(k, in + l, rng));
            params.set("head.b", Tensor::zeros({k}));
        }
    } else {
        const std::size_t h = static_cast<std::size_t>(spec.hidden_widths[0]);
        const std::size_t in = d + (spec.family == Family::Blstm ? l : 0) + h;
        for (const char* gate : {"i", "f", "g", "o"}) {
            params.set(std::string("lstm.W") + gate, detail::xavier_uniform(h, in, rng));
            params.set(std::string("lstm.b") + gate,
                       std::string(gate) == "f" ? Tensor::full({h}, 1.0) : Tensor::zeros({h}));
        }
        params.set("out.W", detail::xavier_uniform(k, h, rng));
        params.set("out.b", Tensor::zeros({k}));
    }
    return params;
}

/// Parameters registered on a tape, looked up by checkpoint name.
class BoundParams {
public:
    BoundParams() = default;

    /// Register every entry of `params` on `tape`; `as_constants` binds them as
    /// gradient-free leaves (for frozen phases).
    BoundParams(GradTape& tape, const ParamSet& params, bool as_constants = false) {
        for (const auto& [name, t] : params) {
            vals_.emplace(name, as_constants ? tape.constant(t) : tape.param(name, t));
        }
    }

    Value at(const std::string& name) const {
        auto it = vals_.find(name);
        if (it == vals_.end())
            throw ContractError("BoundParams: no parameter named '" + name + "'");
        return it->second;
    }

    bool has(const std::string& name) const { return vals_.count(name) != 0; }

private:
    std::map<std::string, Value> vals_;
};

// --- forward graphs ----------------------------------------------------------

struct FfnTrace {
    Value logits;
    Value features;  // penultimate activations
};

/// Hidden tanh layers then an affine output head; exposes the penultimate
/// feature vector for the embedding head.
inline FfnTrace ffn_forward(GradTape& tape, const BoundParams& p, Value x) {
    Value h = x;
    for (std::size_t layer = 1; p.has("base.W" + std::to_string(layer)); ++layer) {
        const std::string idx = std::to_string(layer);
        h = tape.activation(Activation::Tanh,
                            tape.affine(p.at("base.W" + idx), p.at("base.b" + idx), h));
    }
    Value logits = tape.affine(p.at("base.Wout"), p.at("base.bout"), h);
    return {logits, h};
}

/// Embedding head over concat(penultimate features, omega). The phase-1 output
/// layer stays in the parameter set but is bypassed here.
inline Value bnn_forward(GradTape& tape, const BoundParams& base, const BoundParams& head,
                         Value omega, Value x) {
    const FfnTrace trace = ffn_forward(tape, base, x);
    const std::size_t h_len = tape.value(trace.features).numel();
    const std::size_t l_len = tape.value(omega).numel();
    const Tensor& hw = tape.value(head.at("head.W"));
    if (hw.cols() != h_len + l_len)
        throw DimensionError("bnn_forward: head.W is " + hw.shape_str() + " but features+omega = " +
                             std::to_string(h_len + l_len));
    return tape.affine(head.at("head.W"), head.at("head.b"),
                       tape.concat(trace.features, omega));
}

struct LstmStepValues {
    Value h;
    Value c;
};

struct LstmStepTrace {
    LstmStepValues state;
    Value logits;
};

/// One step of a fused-gate LSTM over concat(input, h) plus an affine readout.
inline LstmStepTrace lstm_step(GradTape& tape, const BoundParams& p, LstmStepValues state,
                               Value x) {
    Value zx = tape.concat(x, state.h);
    Value i = tape.activation(Activation::Sigmoid, tape.affine(p.at("lstm.Wi"), p.at("lstm.bi"), zx));
    Value f = tape.activation(Activation::Sigmoid, tape.affine(p.at("lstm.Wf"), p.at("lstm.bf"), zx));
    Value g = tape.activation(Activation::Tanh, tape.affine(p.at("lstm.Wg"), p.at("lstm.bg"), zx));
    Value o = tape.activation(Activation::Sigmoid, tape.affine(p.at("lstm.Wo"), p.at("lstm.bo"), zx));
    Value c = tape.add(tape.mul(f, state.c), tape.mul(i, g));
    Value h = tape.mul(o, tape.activation(Activation::Tanh, c));
    Value logits = tape.affine(p.at("out.W"), p.at("out.b"), h);
    return {{h, c}, logits};
}

/// Unrolled LSTM from a zero state; one logits vector per input.
inline std::vector<Value> lstm_forward(GradTape& tape, const BoundParams& p, std::size_t width,
                                       std::span<const Tensor> inputs) {
    if (inputs.empty()) throw ContractError("lstm_forward: empty sequence");
    LstmStepValues state{tape.constant(Tensor::zeros({width})),
                         tape.constant(Tensor::zeros({width}))};
    std::vector<Value> logits;
    logits.reserve(inputs.size());
    for (const Tensor& x : inputs) {
        auto step = lstm_step(tape, p, state, tape.constant(x));
        state = step.state;
        logits.push_back(step.logits);
    }
    return logits;
}

/// LSTM whose input at every step is concat(x_t, omega); omega is constant
/// across the sequence.
inline std::vector<Value> blstm_forward(GradTape& tape, const BoundParams& p, std::size_t width,
                                        Value omega, std::span<const Tensor> inputs) {
    if (inputs.empty()) throw ContractError("blstm_forward: empty sequence");
    LstmStepValues state{tape.constant(Tensor::zeros({width})),
                         tape.constant(Tensor::zeros({width}))};
    std::vector<Value> logits;
    logits.reserve(inputs.size());
    for (const Tensor& x : inputs) {
        auto step = lstm_step(tape, p, state, tape.concat(tape.constant(x), omega));
        state = step.state;
        logits.push_back(step.logits);
    }
    return logits;
}

// --- untaped convenience wrappers (inference paths) --------------------------

inline std::pair<Tensor, Tensor> ffn_logits_features(const ParamSet& params, const Tensor& x) {
    GradTape tape(false);
    BoundParams p(tape, params, true);
    const FfnTrace t = ffn_forward(tape, p, tape.constant(x));
    return {tape.value(t.logits), tape.value(t.features)};
}

inline Tensor ffn_logits(const ParamSet& params, const Tensor& x) {
    return ffn_logits_features(params, x).first;
}

inline Tensor bnn_logits(const ParamSet& params, const Tensor& omega, const Tensor& x) {
    GradTape tape(false);
    BoundParams p(tape, params, true);
    return tape.value(bnn_forward(tape, p, p, tape.constant(omega), tape.constant(x)));
}

inline std::pair<LstmState, Tensor> lstm_step(const ParamSet& params, const LstmState& state,
                                              const Tensor& x) {
    GradTape tape(false);
    BoundParams p(tape, params, true);
    auto step = lstm_step(tape, p, {tape.constant(state.h), tape.constant(state.c)},
                          tape.constant(x));
    return {{tape.value(step.state.h), tape.value(step.state.c)}, tape.value(step.logits)};
}

inline std::vector<Tensor> lstm_logits(const ParamSet& params, std::size_t width,
                                       std::span<const Tensor> inputs) {
    GradTape tape(false);
    BoundParams p(tape, params, true);
    std::vector<Tensor> out;
    for (Value v : lstm_forward(tape, p, width, inputs)) out.push_back(tape.value(v));
    return out;
}

inline std::vector<Tensor> blstm_logits(const ParamSet& params, std::size_t width,
                                        const Tensor& omega, std::span<const Tensor> inputs) {
    GradTape tape(false);
    BoundParams p(tape, params, true);
    std::vector<Tensor> out;
    for (Value v : blstm_forward(tape, p, width, tape.constant(omega), inputs))
        out.push_back(tape.value(v));
    return out;
}

}  // namespace hetlfd
