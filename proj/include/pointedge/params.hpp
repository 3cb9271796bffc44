#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pointedge/tape.hpp"
#include "pointedge/tensor.hpp"

namespace pointedge {

/// Named learnable tensors. Ordered by name so iteration (and therefore
/// checkpoints and optimizer updates) is canonical.
class ParamStore {
public:
    void set(const std::string& name, Tensor value);
    bool contains(const std::string& name) const { return tensors_.contains(name); }
    const Tensor& get(const std::string& name) const;
    Tensor& get(const std::string& name);

    std::size_t count() const noexcept { return tensors_.size(); }
    std::size_t total_size() const;
    std::vector<std::string> names() const;

    auto begin() const { return tensors_.begin(); }
    auto end() const { return tensors_.end(); }
    auto begin() { return tensors_.begin(); }
    auto end() { return tensors_.end(); }

    /// Same names, same shapes, all zeros.
    ParamStore zeros_like() const;
    /// this += factor * other; shapes must match name for name.
    void add_scaled(const ParamStore& other, double factor);

    friend bool operator==(const ParamStore&, const ParamStore&) = default;

private:
    std::map<std::string, Tensor> tensors_;
};

/// Binds a ParamStore onto a tape. Each parameter becomes a tape leaf the
/// first time it is requested.
class ParamBinding {
public:
    ParamBinding(ad::Tape& tape, const ParamStore& params) : tape_(tape), params_(params) {}

    ad::Var operator[](const std::string& name);
    ad::Tape& tape() noexcept { return tape_; }
    const ParamStore& params() const noexcept { return params_; }

    /// Gradients after backward(); parameters not reached get zeros.
    ParamStore gradients() const;

private:
    ad::Tape& tape_;
    const ParamStore& params_;
    std::map<std::string, ad::Var> bound_;
};

using Rng = std::mt19937_64;

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace pointedge
