#pragma once

#include <string>

#include "nn/ops.h"
#include "nn/tape.h"

namespace talkie::nn {

struct Conv2d {
    Param w, b;
    int stride = 1, pad = 1;

    Conv2d() = default;
    Conv2d(const std::string& name, int cin, int cout, int k, int stride_, int pad_, Rng& rng,
           double gain = 1.0)
        : w(make_param_fanin(name + ".w", {cout, cin, k, k}, rng, static_cast<int64_t>(cin) * k * k,
                             gain)),
          b(make_param(name + ".b", {cout})),
          stride(stride_),
          pad(pad_) {}

    int operator()(Tape& t, int x) const {
        return conv2d(t, x, t.leaf(const_cast<Param&>(w)), t.leaf(const_cast<Param&>(b)), stride,
                      pad);
    }
    void collect(ParamSet& ps) {
        ps.add(w);
        ps.add(b);
    }
};

struct GroupNormLayer {
    Param gamma, beta;
    int groups = 1;

    GroupNormLayer() = default;
    GroupNormLayer(const std::string& name, int channels, int groups_)
        : gamma(make_param(name + ".gamma", {channels}, 1.0f)),
          beta(make_param(name + ".beta", {channels})),
          groups(groups_) {}

    int operator()(Tape& t, int x) const {
        return group_norm(t, x, groups, t.leaf(const_cast<Param&>(gamma)),
                          t.leaf(const_cast<Param&>(beta)));
    }
    void collect(ParamSet& ps) {
        ps.add(gamma);
        ps.add(beta);
    }
};

struct LinearLayer {
    Param w, b;

    LinearLayer() = default;
    LinearLayer(const std::string& name, int din, int dout, Rng& rng, double gain = 1.0)
        : w(make_param_fanin(name + ".w", {dout, din}, rng, din, gain)),
          b(make_param(name + ".b", {dout})) {}

    int operator()(Tape& t, int x) const {
        return linear(t, x, t.leaf(const_cast<Param&>(w)), t.leaf(const_cast<Param&>(b)));
    }
    void collect(ParamSet& ps) {
        ps.add(w);
        ps.add(b);
    }
};

struct LayerNormLayer {
    Param gamma, beta;

    LayerNormLayer() = default;
    explicit LayerNormLayer(const std::string& name, int dim)
        : gamma(make_param(name + ".gamma", {dim}, 1.0f)), beta(make_param(name + ".beta", {dim})) {}

    int operator()(Tape& t, int x) const {
        return layer_norm(t, x, t.leaf(const_cast<Param&>(gamma)),
                          t.leaf(const_cast<Param&>(beta)));
    }
    void collect(ParamSet& ps) {
        ps.add(gamma);
        ps.add(beta);
    }
};

inline int norm_groups_for(int channels) {
    for (int g : {4, 2})
        if (channels % g == 0) return g;
    return 1;
}

}  // namespace talkie::nn
