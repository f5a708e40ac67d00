#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "hetlfd/error.hpp"
#include "hetlfd/tape.hpp"
#include "hetlfd/tensor.hpp"

namespace hetlfd {

enum class OptimizerAlgo { Sgd, Adam };

inline std::string to_string(OptimizerAlgo a) {
    return a == OptimizerAlgo::Sgd ? "sgd" : "adam";
}

/**
 * State for SGD or Adam. Adam's first/second moments are allocated lazily per
 * parameter and stay shape-congruent with it. The step count advances by
 * exactly one per optimizer_step call.
 */
struct OptimizerState {
    OptimizerAlgo algorithm = OptimizerAlgo::Adam;
    long step_count = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::map<std::string, Tensor> first_moment;
    std::map<std::string, Tensor> second_moment;

    static OptimizerState sgd(double lr) {
        OptimizerState s;
        s.algorithm = OptimizerAlgo::Sgd;
        s.learning_rate = lr;
        return s;
    }

    static OptimizerState adam(double lr, double b1 = 0.9, double b2 = 0.999,
                               double eps = 1e-8) {
        OptimizerState s;
        s.algorithm = OptimizerAlgo::Adam;
        s.learning_rate = lr;
        s.beta1 = b1;
        s.beta2 = b2;
        s.epsilon = eps;
        return s;
    }
};

/**
 * One update step restricted to the parameters named in `mask`.
 *
 * Parameters outside the mask, and their optimizer state, are untouched; that
 * restriction is what enforces phase freezes. Gradients missing from `grads`
 * count as zero (Adam still decays moments for masked parameters in that
 * case). Naming a non-existent parameter in the mask is a contract error.
 */
inline void optimizer_step(OptimizerState& state, ParamSet& params, const GradMap& grads,
                           const std::set<std::string>& mask) {
    for (const auto& name : mask) {
        if (!params.has(name))
            throw ContractError("optimizer_step: mask names missing parameter '" + name + "'");
    }
    state.step_count += 1;

    for (const auto& name : mask) {
        Tensor& p = params.get(name);
        const Tensor* g = nullptr;
        auto it = grads.find(name);
        if (it != grads.end()) {
            if (!it->second.same_shape(p))
                throw DimensionError("optimizer_step: gradient for '" + name + "' has shape " +
                                     it->second.shape_str() + " but parameter is " +
                                     p.shape_str());
            g = &it->second;
        }

        if (state.algorithm == OptimizerAlgo::Sgd) {
            if (!g) continue;
            for (std::size_t i = 0; i < p.numel(); ++i)
                p[i] -= state.learning_rate * (*g)[i];
            continue;
        }

        auto [mit, minserted] = state.first_moment.try_emplace(name, Tensor::zeros(p.shape()));
        auto [vit, vinserted] = state.second_moment.try_emplace(name, Tensor::zeros(p.shape()));
        Tensor& m = mit->second;
        Tensor& v = vit->second;
        if (!m.same_shape(p) || !v.same_shape(p))
            throw ContractError("optimizer_step: moment shape drift for '" + name + "'");

        const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
        const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double gi = g ? (*g)[i] : 0.0;
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

/// Convenience mask covering every parameter in the set.
inline std::set<std::string> full_mask(const ParamSet& params) {
    std::set<std::string> mask;
    for (const auto& [name, t] : params) mask.insert(name);
    return mask;
}

}  // namespace hetlfd
