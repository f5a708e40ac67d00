#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "hetlfd/error.hpp"
#include "hetlfd/tape.hpp"
#include "hetlfd/tensor.hpp"

namespace hetlfd {

/// Builds a scalar loss node on the given tape from the given parameters.
/// Inputs/labels are closed over by the callable.
using LossBuilder = std::function<Value(GradTape&, const ParamSet&)>;

/**
 * Central-difference verification of reverse-mode gradients.
 *
 * For every scalar parameter p: f' ~ (L(p+eps) - L(p-eps)) / (2 eps), compared
 * against the tape gradient with relative error |a - f| / max(|a|, |f|, 1e-8).
 * Returns the maximum over all parameter scalars.
 */
inline double grad_check(const LossBuilder& build, const ParamSet& params, double eps) {
    if (!(eps > 0.0)) throw ContractError("grad_check: eps must be positive");

    GradTape tape(true);
    const Value loss = build(tape, params);
    if (!std::isfinite(tape.value(loss)[0]))
        throw NumericError("grad_check: loss is not finite at the base point");
    const GradMap analytic = tape.gradients(loss);

    auto eval = [&](const ParamSet& p) {
        GradTape t(false);
        const Value l = build(t, p);
        const double v = t.value(l)[0];
        if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite at a probe");
        return v;
    };

    double max_rel = 0.0;
    for (const auto& [name, tensor] : params) {
        const Tensor& a = analytic.at(name);
        for (std::size_t i = 0; i < tensor.numel(); ++i) {
            ParamSet plus = params;
            plus.get(name)[i] += eps;
            ParamSet minus = params;
            minus.get(name)[i] -= eps;
            const double fd = (eval(plus) - eval(minus)) / (2.0 * eps);
            const double denom = std::max({std::abs(a[i]), std::abs(fd), 1e-8});
            max_rel = std::max(max_rel, std::abs(a[i] - fd) / denom);
        }
    }
    return max_rel;
}

}  // namespace hetlfd
