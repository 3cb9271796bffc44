#include "pointedge/optim.hpp"

#include <cmath>

#include "pointedge/errors.hpp"

namespace pointedge {

void Sgd::step(ParamStore& params, const ParamStore& grads, double lr) {
    if (velocity_.count() == 0) velocity_ = params.zeros_like();
    for (auto& [name, p] : params) {
        const Tensor& g = grads.get(name);
        Tensor& v = velocity_.get(name);
        if (!g.same_shape(p) || !v.same_shape(p)) {
            throw ValidationError("sgd: gradient for '" + name + "' has shape " + g.shape_string() +
                                  ", parameter is " + p.shape_string());
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            v.data()[i] = options_.momentum * v.data()[i] + (g.data()[i] + options_.weight_decay * p.data()[i]);
            p.data()[i] -= lr * v.data()[i];
        }
    }
}

double step_learning_rate(double base_lr, double decay, int decay_every, int epoch) {
    if (decay_every <= 0) throw ValidationError("lr schedule: decay interval must be positive");
    return base_lr * std::pow(decay, epoch / decay_every);
}

}  // namespace pointedge
