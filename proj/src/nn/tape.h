#pragma once

#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "nn/tensor.h"

namespace talkie::nn {

// Define-by-run reverse-mode autodiff. A Tape owns the per-call graph; ops
// append nodes that only reference earlier node ids, so reverse id order is a
// reverse topological order. Parameter gradients land in per-tape leaf
// buffers and are merged into Param::g explicitly, which keeps per-sample
// tapes independent across threads and the merge order deterministic.
class Tape {
  public:
    struct Node {
        Shape shape;
        std::vector<float> val;    // owned storage (empty for leaves)
        const float* v = nullptr;  // data pointer (leaf: external storage)
        std::vector<float> grad;
        std::function<void(Tape&)> back;  // may be empty
    };

    int add(Shape shape) {
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.shape = std::move(shape);
        n.val.assign(static_cast<size_t>(numel(n.shape)), 0.0f);
        n.v = n.val.data();
        return static_cast<int>(nodes_.size()) - 1;
    }

    // Leaf over external read-only data. Gradients are tracked but only
    // parameter leaves are merged into Param::g.
    int input(const float* data, Shape shape) {
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.shape = std::move(shape);
        n.v = data;
        return static_cast<int>(nodes_.size()) - 1;
    }

    int leaf(Param& p) {
        auto it = leaf_cache_.find(&p);
        if (it != leaf_cache_.end()) return it->second;
        const int id = input(p.w.data(), p.shape);
        leaf_cache_.emplace(&p, id);
        param_leaves_.emplace_back(&p, id);
        return id;
    }

    Node& operator[](int i) { return nodes_[static_cast<size_t>(i)]; }
    const Node& operator[](int i) const { return nodes_[static_cast<size_t>(i)]; }
    int size() const { return static_cast<int>(nodes_.size()); }

    // Seeds d(loss)/d(loss) = seed and runs the reverse sweep. `loss` must be
    // a scalar node.
    void backward(int loss, float seed = 1.0f);

    // Adds scale * (leaf gradients) into Param::g. Call from one thread at a
    // time; merging tapes in a fixed order keeps training bit-reproducible.
    void accumulate_param_grads(float scale = 1.0f);

    // Gradient w.r.t. an arbitrary node after backward().
    const std::vector<float>& grad_of(int id) const { return nodes_[static_cast<size_t>(id)].grad; }

  private:
    std::deque<Node> nodes_;
    std::vector<std::pair<Param*, int>> param_leaves_;
    std::unordered_map<const Param*, int> leaf_cache_;
};

}  // namespace talkie::nn
