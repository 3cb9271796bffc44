#pragma once

#include "pointedge/params.hpp"

namespace pointedge {

struct SgdOptions {
    double momentum = 0.9;
    double weight_decay = 1e-4;
};

/// Momentum SGD with L2 weight decay folded into the gradient:
///   v <- momentum * v + (grad + weight_decay * param)
///   param <- param - lr * v
class Sgd {
public:
    explicit Sgd(SgdOptions options = {}) : options_(options) {}

    void step(ParamStore& params, const ParamStore& grads, double lr);

    const ParamStore& velocity() const noexcept { return velocity_; }
    const SgdOptions& options() const noexcept { return options_; }

private:
    SgdOptions options_;
    ParamStore velocity_;
};

/// Step-decay schedule: base_lr * decay^floor(epoch / decay_every).
double step_learning_rate(double base_lr, double decay, int decay_every, int epoch);

}  // namespace pointedge
