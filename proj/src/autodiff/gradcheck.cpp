#include "pointedge/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace pointedge {

namespace {

double evaluate(const LossBuilder& loss, const ParamStore& params) {
    ad::Tape tape;
    ParamBinding binding(tape, params);
    return loss(binding).value().item();
}

}  // namespace

GradCheckResult gradient_check(const LossBuilder& loss, const ParamStore& params, GradCheckOptions options) {
    ParamStore analytic;
    {
        ad::Tape tape;
        ParamBinding binding(tape, params);
        ad::Var out = loss(binding);
        tape.backward(out);
        analytic = binding.gradients();
    }

    GradCheckResult result;
    ParamStore probe = params;
    for (const auto& [name, base] : params) {
        Tensor& slot = probe.get(name);
        const Tensor& grad = analytic.get(name);
        for (std::size_t i = 0; i < base.size(); ++i) {
            const double orig = base.data()[i];
            slot.data()[i] = orig + options.eps;
            const double plus = evaluate(loss, probe);
            slot.data()[i] = orig - options.eps;
            const double minus = evaluate(loss, probe);
            slot.data()[i] = orig;

            const double numeric = (plus - minus) / (2.0 * options.eps);
            const double a = grad.data()[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
            const double rel = std::abs(a - numeric) / denom;
            ++result.coordinates;
            if (rel > result.max_rel_error || result.worst_param.empty()) {
                result.max_rel_error = std::max(rel, result.max_rel_error);
                result.worst_param = name;
                result.worst_index = i;
                result.worst_analytic = a;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace pointedge
