#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "pointedge/params.hpp"
#include "pointedge/tape.hpp"

namespace pointedge {

/// Builds a scalar loss on the given tape from the bound parameters.
using LossBuilder = std::function<ad::Var(ParamBinding&)>;

struct GradCheckOptions {
    double eps = 1e-5;
    /// Denominator floor for the relative error: |a - n| / max(|a|, |n|, floor).
    double floor = 1e-6;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t coordinates = 0;
};

/// Compares tape gradients with central differences (f(x+eps) - f(x-eps)) / (2 eps)
/// for every coordinate of every parameter.
GradCheckResult gradient_check(const LossBuilder& loss, const ParamStore& params, GradCheckOptions options = {});

}  // namespace pointedge
