#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pointedge/params.hpp"
#include "pointedge/tape.hpp"

namespace pointedge {

enum class Activation { none, relu, sigmoid };

/// Stack of affine layers with ReLU between them.
struct MlpSpec {
    std::vector<std::size_t> widths;
    Activation final_activation = Activation::none;
    bool bias = true;

    std::size_t in_width() const { return widths.front(); }
    std::size_t out_width() const { return widths.back(); }
    void validate() const;
};

/// Parameter names are `<prefix>/w<i>` (in x out) and `<prefix>/b<i>` (1 x out).
void init_mlp(ParamStore& params, const std::string& prefix, const MlpSpec& spec, Rng& rng);

ad::Var mlp_apply(const MlpSpec& spec, ParamBinding& params, const std::string& prefix, ad::Var x);

}  // namespace pointedge
