#include "nn/tensor.h"

#include <cmath>

namespace talkie::nn {

Param make_param(std::string name, Shape shape, float fill) {
    Param p;
    p.name = std::move(name);
    p.shape = std::move(shape);
    p.w.assign(static_cast<size_t>(numel(p.shape)), fill);
    p.g.assign(p.w.size(), 0.0f);
    return p;
}

Param make_param_normal(std::string name, Shape shape, talkie::Rng& rng, double stddev) {
    Param p = make_param(std::move(name), std::move(shape));
    for (auto& x : p.w) x = static_cast<float>(rng.gaussian() * stddev);
    return p;
}

Param make_param_fanin(std::string name, Shape shape, talkie::Rng& rng, int64_t fan_in,
                       double gain) {
    const double stddev = gain / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
    return make_param_normal(std::move(name), std::move(shape), rng, stddev);
}

}  // namespace talkie::nn
