#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/rng.h"

namespace talkie::nn {

using Shape = std::vector<int>;

inline int64_t numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

// Trainable (or frozen) tensor with gradient and Adam state.
struct Param {
    std::string name;
    Shape shape;
    std::vector<float> w;
    std::vector<float> g;
    std::vector<float> adam_m, adam_v;
    bool trainable = true;

    int64_t size() const { return static_cast<int64_t>(w.size()); }
    void zero_grad() { std::fill(g.begin(), g.end(), 0.0f); }
};

Param make_param(std::string name, Shape shape, float fill = 0.0f);
Param make_param_normal(std::string name, Shape shape, talkie::Rng& rng, double stddev);
// He-style init for convs/linears: stddev = gain / sqrt(fan_in).
Param make_param_fanin(std::string name, Shape shape, talkie::Rng& rng, int64_t fan_in,
                       double gain = 1.0);

// Flat list of parameters a module exposes to the optimizer / checkpointer.
struct ParamSet {
    std::vector<Param*> items;

    void add(Param& p) { items.push_back(&p); }
    void add(const ParamSet& other) {
        items.insert(items.end(), other.items.begin(), other.items.end());
    }
    int64_t total() const {
        int64_t n = 0;
        for (const auto* p : items) n += p->size();
        return n;
    }
    void zero_grad() {
        for (auto* p : items) p->zero_grad();
    }
};

}  // namespace talkie::nn
