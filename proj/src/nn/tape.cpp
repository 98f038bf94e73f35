#include "nn/tape.h"

#include "core/error.h"

namespace talkie::nn {

void Tape::backward(int loss, float seed) {
    require_usage(loss >= 0 && loss < size(), "backward: bad loss node id");
    require_usage(numel(nodes_[loss].shape) == 1, "backward: loss must be scalar");
    for (int i = 0; i <= loss; ++i)
        nodes_[static_cast<size_t>(i)].grad.assign(
            static_cast<size_t>(numel(nodes_[static_cast<size_t>(i)].shape)), 0.0f);
    nodes_[static_cast<size_t>(loss)].grad[0] = seed;
    for (int i = loss; i >= 0; --i) {
        auto& n = nodes_[static_cast<size_t>(i)];
        if (n.back) n.back(*this);
    }
}

void Tape::accumulate_param_grads(float scale) {
    for (auto& [param, id] : param_leaves_) {
        const auto& g = nodes_[static_cast<size_t>(id)].grad;
        if (g.empty()) continue;  // leaf never reached by backward
        for (size_t i = 0; i < g.size(); ++i) param->g[i] += scale * g[i];
    }
}

}  // namespace talkie::nn
