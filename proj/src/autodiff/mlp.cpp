#include "pointedge/mlp.hpp"

#include <cmath>
#include <random>

#include "pointedge/errors.hpp"

namespace pointedge {

namespace {

std::string weight_name(const std::string& prefix, std::size_t i) { return prefix + "/w" + std::to_string(i); }
std::string bias_name(const std::string& prefix, std::size_t i) { return prefix + "/b" + std::to_string(i); }

}  // namespace

void MlpSpec::validate() const {
    if (widths.size() < 2) throw ValidationError("MlpSpec: need at least input and output widths");
    for (std::size_t w : widths) {
        if (w == 0) throw ValidationError("MlpSpec: zero layer width");
    }
}

void init_mlp(ParamStore& params, const std::string& prefix, const MlpSpec& spec, Rng& rng) {
    spec.validate();
    for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
        params.set(weight_name(prefix, i), glorot_uniform(spec.widths[i], spec.widths[i + 1], rng));
        if (spec.bias) {
            // Uniform in +-1/sqrt(fan_in); zero biases would park units with all-zero inputs on the ReLU kink.
            const double bound = 1.0 / std::sqrt(static_cast<double>(spec.widths[i]));
            std::uniform_real_distribution<double> dist(-bound, bound);
            Tensor b = Tensor::zeros(1, spec.widths[i + 1]);
            for (double& v : b.values()) v = dist(rng);
            params.set(bias_name(prefix, i), std::move(b));
        }
    }
}

ad::Var mlp_apply(const MlpSpec& spec, ParamBinding& params, const std::string& prefix, ad::Var x) {
    spec.validate();
    if (x.cols() != spec.in_width()) {
        throw ValidationError("mlp_apply(" + prefix + "): input has " + std::to_string(x.cols()) +
                              " columns, spec expects " + std::to_string(spec.in_width()));
    }
    const std::size_t layers = spec.widths.size() - 1;
    for (std::size_t i = 0; i < layers; ++i) {
        ad::Var w = params[weight_name(prefix, i)];
        const Shape expected{spec.widths[i], spec.widths[i + 1]};
        if (w.value().shape() != expected) {
            throw ValidationError("mlp_apply: parameter " + weight_name(prefix, i) + " has shape " +
                                  w.value().shape_string() + ", spec needs " + shape_string(expected));
        }
        x = ad::matmul(x, w);
        if (spec.bias) {
            ad::Var b = params[bias_name(prefix, i)];
            if (b.value().size() != spec.widths[i + 1]) {
                throw ValidationError("mlp_apply: parameter " + bias_name(prefix, i) + " has shape " +
                                      b.value().shape_string());
            }
            x = ad::bias_add(x, b);
        }
        if (i + 1 < layers) {
            x = ad::relu(x);
        } else if (spec.final_activation == Activation::relu) {
            x = ad::relu(x);
        } else if (spec.final_activation == Activation::sigmoid) {
            x = ad::sigmoid(x);
        }
    }
    return x;
}

}  // namespace pointedge
