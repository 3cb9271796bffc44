#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "pointedge/tape.hpp"
#include "pointedge/tensor.hpp"

namespace pointedge::testing {

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t = Tensor::zeros(rows, cols);
    for (double& v : t.values()) v = dist(rng);
    return t;
}

/// Scalar function of several input tensors, expressed on a tape.
using TapeFn = std::function<ad::Var(std::vector<ad::Var>&)>;

/// Independent finite-difference oracle: evaluates `f` at perturbed inputs
/// (all leaves constant) and compares with the tape gradient of each input.
/// Returns max |a - n| / max(|a|, |n|, floor).
inline double fd_max_rel_error(const TapeFn& f, std::vector<Tensor> inputs, double eps = 1e-5, double floor = 1e-8) {
    ad::Tape tape;
    std::vector<ad::Var> leaves;
    for (const auto& t : inputs) leaves.push_back(tape.parameter(t));
    ad::Var out = f(leaves);
    tape.backward(out);
    std::vector<Tensor> analytic;
    for (const auto& v : leaves) analytic.push_back(tape.grad(v));

    auto eval = [&](const std::vector<Tensor>& at) {
        ad::Tape t;
        std::vector<ad::Var> vs;
        for (const auto& x : at) vs.push_back(t.constant(x));
        return f(vs).value().item();
    };
    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t j = 0; j < inputs[i].size(); ++j) {
            const double orig = inputs[i].data()[j];
            inputs[i].data()[j] = orig + eps;
            const double up = eval(inputs);
            inputs[i].data()[j] = orig - eps;
            const double down = eval(inputs);
            inputs[i].data()[j] = orig;
            const double numeric = (up - down) / (2 * eps);
            const double a = analytic[i].data()[j];
            worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor}));
        }
    }
    return worst;
}

/// Reduces any matrix to a scalar with fixed pseudo-random weights so every
/// output entry contributes a distinct gradient.
inline ad::Var weighted_sum(ad::Var x, std::uint64_t seed = 99) {
    std::mt19937_64 rng(seed);
    Tensor w = random_tensor(x.rows(), x.cols(), rng);
    return ad::sum_all(ad::mul(x, x.tape()->constant(std::move(w))));
}

}  // namespace pointedge::testing
