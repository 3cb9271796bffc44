#include "pointedge/params.hpp"

#include <cmath>

#include "pointedge/errors.hpp"

namespace pointedge {

void ParamStore::set(const std::string& name, Tensor value) { tensors_[name] = std::move(value); }

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ValidationError("unknown parameter '" + name + "'");
    return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ValidationError("unknown parameter '" + name + "'");
    return it->second;
}

std::size_t ParamStore::total_size() const {
    std::size_t n = 0;
    for (const auto& [_, t] : tensors_) n += t.size();
    return n;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(tensors_.size());
    for (const auto& [name, _] : tensors_) out.push_back(name);
    return out;
}

ParamStore ParamStore::zeros_like() const {
    ParamStore out;
    for (const auto& [name, t] : tensors_) out.set(name, Tensor(t.shape(), 0.0));
    return out;
}

void ParamStore::add_scaled(const ParamStore& other, double factor) {
    for (auto& [name, t] : tensors_) {
        const Tensor& o = other.get(name);
        if (!o.same_shape(t)) {
            throw ValidationError("add_scaled: shape mismatch for '" + name + "': " + t.shape_string() + " vs " +
                                  o.shape_string());
        }
        for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] += factor * o.data()[i];
    }
}

ad::Var ParamBinding::operator[](const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    ad::Var v = tape_.parameter(params_.get(name));
    bound_.emplace(name, v);
    return v;
}

ParamStore ParamBinding::gradients() const {
    ParamStore out = params_.zeros_like();
    for (const auto& [name, v] : bound_) {
        if (tape_.has_grad(v.id())) out.set(name, tape_.grad(v));
    }
    return out;
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor w = Tensor::zeros(fan_in, fan_out);
    for (double& v : w.values()) v = dist(rng);
    return w;
}

}  // namespace pointedge
